"""Compiled vs numpy kernels on workloads shaped like the solver's.

    python3 benchmarks/bench_kernels.py [--repeat 5]

segmented_product: jump-path products (runs of Poisson-many right jumps).
bilinear_locate: one MOL assembly chunk of quadrature points.
"""

import argparse
import time

import numpy as np

from hfujita import kernels
from hfujita.grid import GridSpec
from hfujita.kernels import _pykernels

try:
    from hfujita.kernels import _ckernels
except ImportError:
    _ckernels = None


def _time(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t)
    return best, out


def workloads(seed=0):
    rng = np.random.default_rng(seed)
    counts = rng.poisson(12.0, size=65536)
    offsets = np.r_[0, np.cumsum(counts)]
    elements = rng.normal(scale=0.1, size=(offsets[-1], 3))
    spec = GridSpec.build(16.0, 45, 91)
    r = np.abs(rng.normal(scale=6.0, size=2_000_000))
    w = rng.normal(scale=60.0, size=r.size)
    return {
        "segmented_product": ((elements, offsets, 1), f"{counts.size} runs, {offsets[-1]} jumps"),
        "bilinear_locate": ((spec.r_nodes, spec.w_nodes, r, w), f"{r.size} points on 45x91"),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"import-time backend: {kernels.BACKEND}")
    if _ckernels is None:
        print("compiled extension not built; only the numpy timings are shown")
    print(f"{'kernel':<18} {'workload':<28} {'numpy s':>9} {'cython s':>9} {'speedup':>8} {'max diff':>9}")
    for name, (inputs, label) in workloads().items():
        tp, outp = _time(getattr(_pykernels, name), inputs, args.repeat)
        if _ckernels is None:
            print(f"{name:<18} {label:<28} {tp:9.4f} {'-':>9} {'-':>8} {'-':>9}")
            continue
        tc, outc = _time(getattr(_ckernels, name), inputs, args.repeat)
        pairs = zip(outp if isinstance(outp, tuple) else (outp,), outc if isinstance(outc, tuple) else (outc,))
        diff = max(float(np.max(np.abs(np.asarray(a, float) - np.asarray(b, float)))) for a, b in pairs)
        print(f"{name:<18} {label:<28} {tp:9.4f} {tc:9.4f} {tp / tc:8.1f} {diff:9.1e}")


if __name__ == "__main__":
    main()
