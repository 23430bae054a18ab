"""Backend selection for ``e^{-t(-Delta_H)^s}`` and empirical kernel checks.

The kernel checks work on the gauge radius of Monte-Carlo endpoints. The
radial density of the endpoint law is ``c_Q r^{Q-1} hbar(t, r)`` where
``hbar`` is the heat kernel averaged over the gauge sphere, so a density
estimate for the radius gives ``hbar`` at any radius. The estimate is a
Gaussian KDE in ``log r`` with Scott's bandwidth, which keeps power-law tails
unbiased in slope.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import gaussian_kde

from .errors import BackendError, ParameterError
from .fractional import FracParams
from .grid import GridFunction
from .group import GroupParams, dil, norm
from .measure import gauge_sphere_constant
from .mol import assemble_operator, stable_steps
from .montecarlo import CHUNK, chunk_rng, endpoint_stream, semigroup_apply_mc_many

METHODS = ("mol", "mc-jump", "mc-subordinated")
MIN_WINDOW_SAMPLES = 200
_TIME_STREAM = 0x5EED


@dataclass
class SemigroupBackend:
    """Strategy for applying the semigroup to a :class:`GridFunction`.

    ``mol`` is deterministic and positivity preserving; the two Monte-Carlo
    methods evaluate every grid node with common random endpoints and are
    meant for validation, not production runs.
    """

    method: str = "mol"
    fp: FracParams = field(default_factory=FracParams)
    n_paths: int = 20_000
    rng_seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"unknown backend {self.method!r}; choose from {METHODS}")

    @property
    def s(self) -> float:
        return self.fp.s

    def apply(self, g: GridFunction, t: float) -> GridFunction:
        if t == 0:
            return g
        if not t > 0:
            raise ParameterError(f"t must be nonnegative, got {t}")
        try:
            if self.method == "mol":
                op = assemble_operator(g.spec, self.fp, g.tail.beta)
                vals = op.apply(g.values, t, stable_steps(op, t))
                return g.with_values(vals)
            method = "jump" if self.method == "mc-jump" else "subordinated"
            res = semigroup_apply_mc_many(g, g.spec.node_points(), t, self.s, self.n_paths,
                                          self.rng_seed, method, self.fp, g.spec.gp)
            return g.with_values(res.mean)
        except (ParameterError, BackendError):
            raise
        except Exception as exc:
            raise BackendError(f"{self.method} backend failed at t={t:.6g}: {exc}") from exc


# kernel density on the gauge radius ---------------------------------------------------


@dataclass(frozen=True)
class RadialDensity:
    radii: np.ndarray
    kernel: np.ndarray  # sphere-averaged kernel at each radius
    window_samples: np.ndarray
    bandwidth: float


def radial_kernel_estimate(rho: np.ndarray, radii, gp: GroupParams, weights=None) -> RadialDensity:
    """Sphere-averaged kernel at ``radii`` from endpoint gauge radii ``rho``.

    With ``weights`` the estimate is of the weighted measure (used for time
    integrals). ``window_samples`` counts endpoints within two bandwidths.
    """
    radii = np.asarray(radii, dtype=float)
    rho = np.asarray(rho, dtype=float)
    keep = rho > 0
    ell = np.log(rho[keep])
    wts = None if weights is None else np.asarray(weights, dtype=float)[keep]
    total = float(keep.sum() if wts is None else wts.sum())
    kde = gaussian_kde(ell, bw_method="scott", weights=wts)
    bw = float(np.sqrt(kde.covariance[0, 0]))
    lr = np.log(radii)
    # gaussian_kde normalises the weights; restore the absolute scale
    f_ell = kde(lr) * total / rho.size
    counts = np.array([np.count_nonzero(np.abs(ell - x) < 2 * bw) for x in lr])
    cq = gauge_sphere_constant(gp)
    return RadialDensity(radii, f_ell / (cq * radii ** gp.Q), counts, bw)


def heat_envelope(t: float, r, s: float, Q: int) -> np.ndarray:
    """``min(t^{-Q/2s}, t r^{-(Q+2s)})``."""
    r = np.asarray(r, dtype=float)
    return np.minimum(t ** (-Q / (2 * s)), t * r ** (-(Q + 2 * s)))


def _endpoint_radii(t, s, n_paths, seed, gp, method="subordinated"):
    out = []
    for _, pts in endpoint_stream(t, s, n_paths, seed, method, FracParams(s=s), gp):
        out.append(norm(pts, gp.gauge))
    return np.concatenate(out)


@dataclass
class KernelEstimateReport:
    t: float
    s: float
    N: int
    xi_samples: list
    empirical_density: list
    lower_envelope: list
    upper_envelope: list
    fitted_c: float
    margins: list
    dropped_radii: list
    bandwidth: float
    n_paths: int
    undersampled: bool = False

    def to_json(self, path=None) -> str:
        text = json.dumps(asdict(self), indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text


def kernel_envelope_check(t: float, radii, s: float, gp: GroupParams = GroupParams(),
                          n_paths: int = 1_000_000, rng_seed: int = 0) -> KernelEstimateReport:
    """Fit the smallest ``c`` with ``c^{-1} E <= h_s(t, .) <= c E`` at ``radii``.

    ``E`` is the two-branch envelope of :func:`heat_envelope`. Radii with fewer
    than ``MIN_WINDOW_SAMPLES`` endpoints inside the KDE window are dropped and
    flagged.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0 or np.any(radii <= 0):
        raise ParameterError("radii must be positive")
    if not t > 0:
        raise ParameterError("t must be positive")
    rho = _endpoint_radii(t, s, n_paths, rng_seed, gp)
    est = radial_kernel_estimate(rho, radii, gp)
    ok = est.window_samples >= MIN_WINDOW_SAMPLES
    if not np.any(ok):
        raise BackendError("every radius is undersampled; increase n_paths")
    r, h = radii[ok], est.kernel[ok]
    env = heat_envelope(t, r, s, gp.Q)
    ratio = h / env
    c = float(max(np.max(ratio), np.max(1.0 / ratio)))
    margins = np.log(c) - np.abs(np.log(ratio))
    xi = [[float(x)] + [0.0] * (gp.dim - 1) for x in r]
    return KernelEstimateReport(
        t=float(t), s=float(s), N=gp.N, xi_samples=xi, empirical_density=h.tolist(),
        lower_envelope=(env / c).tolist(), upper_envelope=(env * c).tolist(), fitted_c=c,
        margins=margins.tolist(), dropped_radii=radii[~ok].tolist(), bandwidth=est.bandwidth,
        n_paths=int(n_paths), undersampled=bool(np.any(~ok)))


# Riesz potential ------------------------------------------------------------------------


@dataclass
class RieszReport:
    radii: list
    potential: list
    slope: float
    expected_slope: float
    tolerance: float
    t_min: float
    t_max: float
    n_paths: int
    monotone: bool

    @property
    def passed(self) -> bool:
        return abs(self.slope - self.expected_slope) <= self.tolerance and self.monotone

    def to_json(self, path=None) -> str:
        d = asdict(self)
        d["passed"] = self.passed
        text = json.dumps(d, indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text


def riesz_potential_check(radii, s: float, gp: GroupParams = GroupParams(), t_max: float = 1e3,
                          n_paths: int = 1_000_000, rng_seed: int = 0, t_min: float | None = None,
                          tolerance: float = 0.15) -> RieszReport:
    """Estimate ``int_0^{t_max} hbar(t, r) dt`` and fit its log-log slope.

    Each path gets its own time ``t_i``, log-uniform on ``[t_min, t_max]``,
    and weight ``t_i log(t_max/t_min)`` so that the weighted endpoint law is
    the time integral of the kernel. Endpoints at time ``t_i`` are unit-time
    endpoints dilated by ``t_i^{1/2s}``, which is exact in law.
    """
    radii = np.sort(np.asarray(radii, dtype=float))
    if radii.size < 2 or np.any(radii <= 0):
        raise ParameterError("need at least two positive radii")
    if radii[-1] / radii[0] < 4.0:
        raise ParameterError("radius span too short to fit a decay exponent; use max/min >= 4")
    if t_max ** (1 / (2 * s)) < 10 * radii[-1]:
        raise ParameterError(f"t_max={t_max} too small: the kernel tail beyond it is not negligible "
                             f"at radius {radii[-1]}")
    t_min = 1e-4 * radii[0] ** (2 * s) if t_min is None else t_min
    span = math.log(t_max / t_min)
    rho_all, wts_all = [], []
    for first, pts in endpoint_stream(1.0, s, n_paths, rng_seed, "subordinated", FracParams(s=s), gp):
        rng = chunk_rng(rng_seed ^ _TIME_STREAM, first // CHUNK)
        ts = np.exp(rng.uniform(math.log(t_min), math.log(t_max), pts.shape[0]))
        rho_all.append(norm(dil(ts ** (1 / (2 * s)), pts), gp.gauge))
        wts_all.append(ts * span)
    rho = np.concatenate(rho_all)
    wts = np.concatenate(wts_all)
    est = radial_kernel_estimate(rho, radii, gp, wts).kernel
    slope = float(np.polyfit(np.log(radii), np.log(est), 1)[0])
    return RieszReport(radii.tolist(), est.tolist(), slope, -(gp.Q - 2 * s), tolerance,
                       float(t_min), float(t_max), int(n_paths), bool(np.all(np.diff(est) < 0)))


__all__ = ["SemigroupBackend", "METHODS", "KernelEstimateReport", "kernel_envelope_check",
           "RieszReport", "riesz_potential_check", "heat_envelope", "radial_kernel_estimate",
           "gauge_sphere_constant"]
