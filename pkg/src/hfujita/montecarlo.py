"""Monte-Carlo realisations of the fractional heat semigroup.

Two path models are provided.

``subordinated``
    Horizontal Brownian motion (generator ``Delta_H``) run for a positive
    ``s``-stable random time ``tau``. ``tau`` is drawn with Kanter's
    representation; by dilation invariance the endpoint is
    ``dil(sqrt(tau), Z_1)`` for a unit-time endpoint ``Z_1``.

``jump``
    The Markov process whose generator is the singular integral itself: a
    compound Poisson process of right-multiplied jumps with Levy measure
    ``c ||eta||^{-(Q+2s)}`` on ``||eta|| > eps`` interleaved with a slow
    horizontal Brownian motion of generator ``kappa Delta_H`` standing in for
    the jumps below ``eps``.

Randomness comes from Philox streams keyed by ``(chunk_index, seed)`` with a
fixed chunk size, so results do not depend on how chunks are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from . import kernels
from .errors import ParameterError
from .fractional import FracParams
from .group import GroupParams, dil, mul
from .measure import standard_angular_measure

CHUNK = 65536
SUB_BATCH = 4096
UNIT_SUBSTEPS = 32
JUMP_EPS_FRACTION = 1.0 / 16.0


def chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    if seed < 0 or seed >= 2 ** 64:
        raise ParameterError("seed must fit in 64 unsigned bits")
    return np.random.Generator(np.random.Philox(key=(int(chunk_index) << 64) | int(seed)))


def _chunks(n_paths: int) -> Iterator[tuple[int, int]]:
    for c, start in enumerate(range(0, n_paths, CHUNK)):
        yield c, min(CHUNK, n_paths - start)


# unit-time horizontal Brownian motion ------------------------------------------


def unit_bm_endpoints(rng: np.random.Generator, m: int, N: int = 1,
                      substeps: int = UNIT_SUBSTEPS) -> np.ndarray:
    """Endpoints at time 1 of the diffusion with generator ``Delta_H``.

    ``dx = sqrt(2) dB``, ``dw = 2 (y.dx - x.dy)``. Each substep adds the exact
    conditional variance of the Levy area given the increments, so first and
    second moments are exact for every ``substeps``.
    """
    h = 1.0 / substeps
    b = np.zeros((m, 2 * N))
    w = np.zeros(m)
    for _ in range(substeps):
        db = rng.standard_normal((m, 2 * N)) * math.sqrt(h)
        bx, by = b[:, :N], b[:, N:]
        dx, dy = db[:, :N], db[:, N:]
        w += 4.0 * np.sum(by * dx - bx * dy, axis=1)
        inc2 = dx ** 2 + dy ** 2
        w += 8.0 * np.sum(np.sqrt((h * h + h * inc2) / 12.0) * rng.standard_normal((m, N)), axis=1)
        b += db
    out = np.empty((m, 2 * N + 1))
    out[:, :2 * N] = math.sqrt(2.0) * b
    out[:, 2 * N] = w
    return out


# positive stable subordinator -------------------------------------------------------


@dataclass(frozen=True)
class SubordinatorSample:
    t: float
    tau: np.ndarray
    stable_index: float


def sample_subordinator(rng: np.random.Generator, t: float, s: float, m: int) -> SubordinatorSample:
    """``tau`` with Laplace transform ``exp(-t lambda^s)`` (Kanter's formula)."""
    if not 0 < s < 1:
        raise ParameterError("stable index must lie in (0,1)")
    u = rng.uniform(0.0, math.pi, m)
    e = rng.exponential(1.0, m)
    a = np.sin(s * u) / np.sin(u) ** (1.0 / s) * (np.sin((1.0 - s) * u) / e) ** ((1.0 - s) / s)
    tau = t ** (1.0 / s) * a
    return SubordinatorSample(t, tau, s)


def subordinated_endpoints(rng, t: float, s: float, m: int, N: int = 1,
                           substeps: int = UNIT_SUBSTEPS) -> np.ndarray:
    tau = sample_subordinator(rng, t, s, m).tau
    z = unit_bm_endpoints(rng, m, N, substeps)
    return dil(np.sqrt(tau), z)


# compound Poisson jump process --------------------------------------------------------


@dataclass(frozen=True)
class JumpModel:
    s: float
    c: float
    eps: float
    N: int
    rate: float  # total jump intensity above eps
    kappa: float  # diffusion coefficient replacing jumps below eps

    @classmethod
    def from_params(cls, fp: FracParams, gp: GroupParams, eps: float | None = None) -> "JumpModel":
        if not gp.radial_symmetric:
            raise ParameterError("the jump backend needs N=1 or the standard gauge")
        eps = fp.near_radius * JUMP_EPS_FRACTION if eps is None else eps
        omega = standard_angular_measure(gp.N)
        rate = fp.c_Ns * omega * eps ** (-2 * fp.s) / (2 * fp.s)
        # K_inner(eps) * Delta_H is the small-jump second difference; the
        # generator carries half of it
        k_inner = eps ** (2 - 2 * fp.s) / (2 - 2 * fp.s) * omega * _mean_cos(gp.N) / (2 * gp.N)
        return cls(fp.s, fp.c_Ns, eps, gp.N, rate, 0.5 * fp.c_Ns * k_inner)


def _mean_cos(N: int) -> float:
    # average of cos(psi) under the density proportional to cos(psi)^(N-1)
    return math.gamma(N / 2 + 0.5) ** 2 / (math.gamma(N / 2) * math.gamma(N / 2 + 1))


def sample_jumps(rng: np.random.Generator, model: JumpModel, m: int) -> np.ndarray:
    n = model.N
    rho = model.eps * rng.uniform(0.0, 1.0, m) ** (-1.0 / (2 * model.s))
    psi = _sample_psi(rng, n, m)
    g = rng.standard_normal((m, 2 * n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    out = np.empty((m, 2 * n + 1))
    out[:, :2 * n] = (rho * np.sqrt(np.cos(psi)))[:, None] * g
    out[:, 2 * n] = rho ** 2 * np.sin(psi)
    return out


def _sample_psi(rng, N: int, m: int) -> np.ndarray:
    if N == 1:
        return rng.uniform(-0.5 * math.pi, 0.5 * math.pi, m)
    # sin(psi) = 2B - 1 with B ~ Beta(N/2, N/2) has density ~ cos(psi)^(N-1)
    return np.arcsin(2.0 * rng.beta(N / 2, N / 2, m) - 1.0)


def jump_endpoints(rng: np.random.Generator, t: float, model: JumpModel, m: int,
                   substeps: int = 1) -> np.ndarray:
    n = model.N
    counts = rng.poisson(model.rate * t, m)
    total = int(counts.sum())
    # path k: B_0, J_1, B_1, ..., J_n, B_n with exponential-spacing gaps
    pieces = 2 * counts + 1
    offsets = np.concatenate([[0], np.cumsum(pieces)])
    elems = np.empty((int(offsets[-1]), 2 * n + 1))
    gaps = rng.exponential(1.0, total + m)
    gap_off = np.concatenate([[0], np.cumsum(counts + 1)])
    sums = np.add.reduceat(gaps, gap_off[:-1])
    gaps *= np.repeat(t / sums, counts + 1)
    bm = unit_bm_endpoints(rng, total + m, n, substeps)
    bm = dil(np.sqrt(model.kappa * gaps), bm)
    jumps = sample_jumps(rng, model, total)
    pos = np.arange(offsets[-1]) - np.repeat(offsets[:-1], pieces)
    is_bm = pos % 2 == 0
    elems[is_bm] = bm
    elems[~is_bm] = jumps
    return kernels.segmented_product(elems, offsets, n)


# public API ----------------------------------------------------------------------------


@dataclass(frozen=True)
class MCResult:
    mean: np.ndarray
    stderr: np.ndarray
    n_paths: int


def endpoint_stream(t: float, s: float, n_paths: int, rng_seed: int, method: str = "subordinated",
                    fp: FracParams | None = None, gp: GroupParams = GroupParams(),
                    substeps: int | None = None) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(first_path_index, endpoints)`` chunk by chunk."""
    if not t > 0:
        raise ParameterError("t must be positive")
    fp = FracParams(s=s) if fp is None else fp
    if method == "jump":
        model = JumpModel.from_params(fp, gp)
    elif method != "subordinated":
        raise ParameterError(f"unknown Monte-Carlo method {method!r}")
    for c, m in _chunks(n_paths):
        rng = chunk_rng(rng_seed, c)
        if method == "subordinated":
            pts = subordinated_endpoints(rng, t, s, m, gp.N, substeps or UNIT_SUBSTEPS)
        else:
            # fixed sub-batches bound memory without changing the stream layout
            pts = np.concatenate([jump_endpoints(rng, t, model, min(SUB_BATCH, m - b), substeps or 1)
                                  for b in range(0, m, SUB_BATCH)])
        yield c * CHUNK, pts


def semigroup_apply_mc_many(g: Callable, probes, t: float, s: float, n_paths: int = 100_000,
                            rng_seed: int = 0, method: str = "subordinated",
                            fp: FracParams | None = None, gp: GroupParams = GroupParams(),
                            dump: str | Path | None = None) -> MCResult:
    """``E[g(a o X_t)]`` for every probe ``a``, with standard errors."""
    if n_paths < 1000:
        raise ParameterError("n_paths must be at least 1000")
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    s1 = np.zeros(probes.shape[0])
    s2 = np.zeros(probes.shape[0])
    fh = open(dump, "wb") if dump is not None else None
    try:
        for first, pts in endpoint_stream(t, s, n_paths, rng_seed, method, fp, gp):
            if fh is not None:
                write_endpoints(fh, first, pts)
            vals = np.asarray(g(mul(probes[:, None, :], pts[None, :, :])), dtype=float)
            s1 += vals.sum(axis=1)
            s2 += (vals ** 2).sum(axis=1)
    finally:
        if fh is not None:
            fh.close()
    mean = s1 / n_paths
    var = np.maximum(s2 / n_paths - mean ** 2, 0.0)
    return MCResult(mean, np.sqrt(var / (n_paths - 1)), n_paths)


def semigroup_apply_mc(g: Callable, a, t: float, s: float, n_paths: int = 100_000,
                       rng_seed: int = 0, method: str = "subordinated",
                       fp: FracParams | None = None, gp: GroupParams = GroupParams()):
    """``(mean, stderr)`` of ``g`` at the endpoints started from ``a``."""
    a = a.as_array() if hasattr(a, "as_array") else np.asarray(a, dtype=float)
    res = semigroup_apply_mc_many(g, a[None, :], t, s, n_paths, rng_seed, method, fp, gp)
    return float(res.mean[0]), float(res.stderr[0])


# binary endpoint dumps ------------------------------------------------------------------


def endpoint_dtype(N: int) -> np.dtype:
    """Fixed-width little-endian record: u64 index, f64 x[N], f64 y[N], f64 w."""
    return np.dtype([("path_index", "<u8"), ("x", "<f8", (N,)), ("y", "<f8", (N,)), ("w", "<f8")])


def write_endpoints(fh, first_index: int, pts: np.ndarray):
    n = (pts.shape[1] - 1) // 2
    rec = np.empty(pts.shape[0], dtype=endpoint_dtype(n))
    rec["path_index"] = np.arange(first_index, first_index + pts.shape[0], dtype=np.uint64)
    rec["x"] = pts[:, :n]
    rec["y"] = pts[:, n:2 * n]
    rec["w"] = pts[:, 2 * n]
    fh.write(rec.tobytes())


def read_endpoints(path, N: int = 1) -> np.ndarray:
    return np.fromfile(path, dtype=endpoint_dtype(N))


__all__ = ["CHUNK", "chunk_rng", "unit_bm_endpoints", "SubordinatorSample", "sample_subordinator",
           "subordinated_endpoints", "JumpModel", "sample_jumps", "jump_endpoints", "MCResult",
           "endpoint_stream", "semigroup_apply_mc", "semigroup_apply_mc_many", "endpoint_dtype",
           "write_endpoints", "read_endpoints"]
