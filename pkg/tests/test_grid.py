import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hfujita.errors import DimensionError, ParameterError
from hfujita.grid import GridFunction, GridSpec, TailModel, geometric_r_nodes, radial_gauge, \
    stretched_w_nodes


@pytest.fixture(scope="module")
def spec():
    return GridSpec.build(8.0, 25, 41)


def test_nodes():
    r = geometric_r_nodes(8.0, 10)
    assert r[0] == 0.0 and r[-1] == pytest.approx(8.0) and np.all(np.diff(r) > 0)
    w = stretched_w_nodes(64.0, 11)
    assert w[5] == 0.0 and w[0] == pytest.approx(-64.0) and np.allclose(w, -w[::-1])
    with pytest.raises(ParameterError):
        stretched_w_nodes(1.0, 10)


def test_interpolation_exact_for_bilinear(spec, rng):
    f = lambda r, w: 1.0 + 2.0 * r - 0.5 * w + 0.25 * r * w
    g = GridFunction.from_function(f, spec, 3.0, A=1e9)
    r = rng.uniform(0, 7.9, 200)
    w = rng.uniform(-60, 60, 200)
    pts = np.stack([r, np.zeros_like(r), w], axis=-1)
    assert np.allclose(g(pts), f(r, w), rtol=1e-12)


def test_rotation_invariance_of_evaluation(spec):
    g = GridFunction.from_radial(lambda d: np.exp(-d ** 2), spec, 3.0)
    a = np.array([[1.0, 0.0, 0.5]])
    th = 0.7
    b = np.array([[math.cos(th), math.sin(th), 0.5]])
    assert g(a)[0] == pytest.approx(g(b)[0], rel=1e-14)


def test_integral_converges_to_closed_form():
    # int exp(-d^4) over H^1 = 2 pi^2 / 4
    exact = math.pi ** 2 / 2
    errs = []
    for n_r, n_w in ((17, 33), (33, 65), (65, 129)):
        sp = GridSpec.build(4.0, n_r, n_w)
        errs.append(abs(GridFunction.from_radial(lambda d: np.exp(-d ** 4), sp, 3.0).integral() - exact))
    assert errs[2] < errs[1] < errs[0] and errs[2] < 0.02


def test_tail_model_extrapolation(spec):
    g = GridFunction.from_radial(lambda d: (1 + d) ** -3.0, spec, 3.0)
    far = np.array([[20.0, 0.0, 0.0]])
    assert g(far)[0] == pytest.approx(21.0 ** -3, rel=1e-10)
    assert g.tail.A == pytest.approx(1.0, rel=1e-12)


def test_boundary_values_must_respect_tail(spec):
    with pytest.raises(ParameterError):
        GridFunction(spec, np.ones(spec.shape), TailModel(1e-3, 3.0))
    with pytest.raises(DimensionError):
        GridFunction(spec, np.ones((2, 2)), TailModel(1.0, 3.0))


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_arithmetic(a, b):
    sp = GridSpec.build(4.0, 9, 11)
    f = GridFunction.from_radial(lambda d: np.exp(-d), sp, 2.0)
    g = GridFunction.from_radial(lambda d: 1 / (1 + d ** 3), sp, 3.0)
    h = a * f + b * g
    assert np.allclose(h.values, a * f.values + b * g.values)
    assert h.tail.beta == 2.0
    assert (f - f).sup_norm == 0.0


def test_radial_gauge():
    assert radial_gauge(1.0, 0.0) == 1.0 and radial_gauge(0.0, 4.0) == 2.0
