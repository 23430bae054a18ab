import numpy as np
import pytest

from hfujita import kernels
from hfujita.group import mul
from hfujita.kernels import _pykernels

try:
    from hfujita.kernels import _ckernels
except ImportError:  # extension not built
    _ckernels = None

IMPLS = [_pykernels] + ([_ckernels] if _ckernels is not None else [])


def loop_products(elements, offsets, n):
    out = []
    for a, b in zip(offsets[:-1], offsets[1:]):
        acc = np.zeros(2 * n + 1)
        for e in elements[a:b]:
            acc = mul(acc, e)
        out.append(acc)
    return np.array(out)


@pytest.mark.parametrize("impl", IMPLS)
@pytest.mark.parametrize("n", [1, 2])
def test_segmented_product_matches_group_law(impl, n, rng):
    counts = rng.integers(0, 6, size=30)
    offsets = np.r_[0, np.cumsum(counts)]
    elements = rng.normal(size=(offsets[-1], 2 * n + 1))
    got = impl.segmented_product(elements, offsets, n)
    assert np.allclose(got, loop_products(elements, offsets, n), atol=1e-12)


@pytest.mark.parametrize("impl", IMPLS)
def test_bilinear_locate(impl, rng):
    r_nodes = np.array([0.0, 0.5, 1.0, 2.0])
    w_nodes = np.array([-4.0, -1.0, 0.0, 1.0, 4.0])
    r = np.array([0.25, 1.5, 3.0, 0.0])
    w = np.array([0.5, -2.5, 0.0, 5.0])
    i, j, fr, fw, inside, rc, wc = impl.bilinear_locate(r_nodes, w_nodes, r, w)
    assert list(i) == [0, 2, 2, 0] and list(j) == [2, 0, 2, 3]
    assert np.allclose(fr, [0.5, 0.5, 1.0, 0.0]) and np.allclose(fw, [0.5, 0.5, 0.0, 1.0])
    assert list(inside) == [True, True, False, False]
    assert rc[2] == 2.0 and wc[3] == 4.0


@pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")
def test_backends_agree_on_random_input(rng):
    r_nodes = np.r_[0.0, np.geomspace(0.1, 8, 20)]
    w_nodes = np.linspace(-64, 64, 41)
    r = rng.uniform(0, 10, 1000)
    w = rng.uniform(-70, 70, 1000)
    a = _pykernels.bilinear_locate(r_nodes, w_nodes, r, w)
    b = _ckernels.bilinear_locate(r_nodes, w_nodes, r, w)
    for x, y in zip(a, b):
        assert np.allclose(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")
