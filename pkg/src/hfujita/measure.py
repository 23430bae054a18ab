"""Haar measure in gauge-polar coordinates.

Every point with N=1 (or any N under the standard gauge) can be written as
``|z| = rho * sqrt(cos psi)``, ``w = rho**2 * sin psi`` with the horizontal
direction on the unit sphere S^{2N-1}. In these coordinates the gauge is
``rho`` and

    d(eta) = rho**(Q-1) * cos(psi)**(N-1) d(rho) d(psi) d(sigma).

:func:`angular_rule` discretises the (psi, sigma) part; radial integration is
left to the caller.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.stats import qmc

from .errors import QuadratureError
from .group import Gauge, GroupParams, norm


def sphere_area(dim_sphere_plus_one: int) -> float:
    """Surface area of the unit sphere in R^k."""
    k = dim_sphere_plus_one
    return 2.0 * math.pi ** (k / 2) / math.gamma(k / 2)


def _cos_power_integral(k: int) -> float:
    return math.sqrt(math.pi) * math.gamma((k + 1) / 2) / math.gamma(k / 2 + 1)


def standard_angular_measure(N: int) -> float:
    """Total (psi, sigma) measure for the standard gauge; 2*pi**2 when N=1."""
    return sphere_area(2 * N) * _cos_power_integral(N - 1)


@dataclass(frozen=True)
class AngularRule:
    """Unit-gauge nodes and weights for the angular part of the Haar measure.

    ``points`` have standard-gauge norm 1. ``weights`` include the
    ``cos(psi)**(N-1)`` Jacobian, so ``weights.sum()`` is the angular measure.
    ``gauge_norm`` holds the norm of each node in the requested gauge (all ones
    unless the paper gauge is used with N>1).
    """

    points: np.ndarray
    weights: np.ndarray
    cos_psi: np.ndarray
    gauge_norm: np.ndarray


def _psi_nodes(n_psi: int):
    v, wv = np.polynomial.legendre.leggauss(n_psi)
    # cubic substitution flattens the sqrt(cos psi) endpoint behaviour
    psi = 0.5 * math.pi * (3.0 * v - v ** 3) / 2.0
    dpsi = 0.75 * math.pi * (1.0 - v ** 2) * wv
    return psi, dpsi


def _directions(N: int, n_dirs: int, seed: int = 12345):
    if N == 1:
        theta = 2.0 * math.pi * np.arange(n_dirs) / n_dirs
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    else:
        half = 1 << max(int(math.ceil(math.log2(max(n_dirs // 2, 1)))), 0)
        sob = qmc.Sobol(d=2 * N, scramble=True, seed=seed).random(half)
        g = np.sqrt(2.0) * _erfinv(2.0 * np.clip(sob, 1e-12, 1 - 1e-12) - 1.0)
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        dirs = np.concatenate([g, -g])
    wts = np.full(dirs.shape[0], sphere_area(2 * N) / dirs.shape[0])
    return dirs, wts


def _erfinv(x):
    from scipy.special import erfinv
    return erfinv(x)


@functools.lru_cache(maxsize=64)
def angular_rule(N: int = 1, gauge: Gauge = Gauge.PAPER, n_psi: int = 16,
                 n_dirs: int = 24) -> AngularRule:
    psi, dpsi = _psi_nodes(n_psi)
    dirs, dw = _directions(N, n_dirs)
    c = np.cos(psi)
    zmod = np.sqrt(c)
    pts = np.empty((n_psi, dirs.shape[0], 2 * N + 1))
    pts[..., :2 * N] = zmod[:, None, None] * dirs[None, :, :]
    pts[..., 2 * N] = np.sin(psi)[:, None]
    wts = (dpsi * c ** (N - 1))[:, None] * dw[None, :]
    pts = pts.reshape(-1, 2 * N + 1)
    cos_psi = np.repeat(c, dirs.shape[0])
    gn = norm(pts, gauge) if (gauge is Gauge.PAPER and N > 1) else np.ones(pts.shape[0])
    return AngularRule(pts, wts.ravel(), cos_psi, gn)


def polar_to_points(rho, rule: AngularRule) -> np.ndarray:
    """Dilate every angular node by every radius; shape ``(len(rho), n_ang, 2N+1)``."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    pts = rule.points[None, :, :] * rho[:, None, None]
    n = (rule.points.shape[1] - 1) // 2
    pts[..., 2 * n] *= rho[:, None]
    return pts


def geometric_radial_rule(r_min: float, r_max: float, ratio: float = 2.0, order: int = 6):
    """Gauss-Legendre on annuli ``[r_min*ratio**k, r_min*ratio**(k+1)]``."""
    n_ann = max(1, int(math.ceil(math.log(r_max / r_min) / math.log(ratio) - 1e-12)))
    edges = r_min * ratio ** np.arange(n_ann + 1)
    edges[-1] = r_max
    x, wx = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x[None, :] + 0.5 * (b + a)
    weights = 0.5 * (b - a) * wx[None, :]
    return nodes.ravel(), weights.ravel()


# calibration of the gauge-sphere constant ----------------------------------


@dataclass(frozen=True)
class SphereConstant:
    value: float
    stderr: float
    n_samples: int


@functools.lru_cache(maxsize=32)
def sphere_constant(params: GroupParams, n_samples: int = 2 ** 18, replicates: int = 16,
                    seed: int = 2024) -> SphereConstant:
    """Estimate ``c_Q = Q * vol(B_1)`` by scrambled-Sobol unit-ball volume.

    The standard error is taken across independent scramblings.
    """
    d = params.dim
    est = np.empty(replicates)
    per = max(n_samples // replicates, 256)
    per = 1 << int(math.ceil(math.log2(per)))
    for k in range(replicates):
        u = qmc.Sobol(d=d, scramble=True, seed=seed + k).random(per)
        pts = 2.0 * u - 1.0
        est[k] = np.mean(norm(pts, params.gauge) < 1.0) * 2.0 ** d
    vol = est.mean()
    se = est.std(ddof=1) / math.sqrt(replicates)
    return SphereConstant(params.Q * vol, params.Q * se, per * replicates)


def gauge_sphere_constant(params: GroupParams) -> float:
    """``c_Q`` with ``d(eta) = c_Q r^{Q-1} dr``: exact when the gauge sphere is
    the standard one, the Sobol estimate otherwise."""
    if params.radial_symmetric:
        return standard_angular_measure(params.N)
    return sphere_constant(params).value


def polar_integrate_radial(g, params: GroupParams, upper: float = math.inf,
                           lower: float = 0.0, points=None, epsabs: float = 1e-12,
                           epsrel: float = 1e-10, limit: int = 500) -> float:
    """Integral over H^N of ``g(||eta||)``, i.e. ``c_Q * int r**(Q-1) g(r) dr``.

    Raises :class:`QuadratureError` when the radial integral does not converge.
    """
    Q = params.Q
    cq = gauge_sphere_constant(params)

    def integrand(r):
        return r ** (Q - 1) * g(r)

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            if points is not None and math.isfinite(upper):
                val, err = integrate.quad(integrand, lower, upper, points=points,
                                          epsabs=epsabs, epsrel=epsrel, limit=limit)
            else:
                val, err = integrate.quad(integrand, lower, upper, epsabs=epsabs,
                                          epsrel=epsrel, limit=limit)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"radial integral did not converge: {exc}") from exc
        except (OverflowError, ZeroDivisionError) as exc:
            raise QuadratureError(f"radial integrand is singular: {exc}") from exc
    if not math.isfinite(val):
        raise QuadratureError("radial integral is not finite", value=val, error=err)
    return cq * val


def monte_carlo_ball_volume(params: GroupParams, R: float = 1.0, center=None,
                            lam: float = 1.0, n_samples: int = 1_000_000, seed: int = 0):
    """Plain Monte-Carlo volume of ``center o dil(lam, B_R(0))``; returns (vol, stderr).

    Samples a Euclidean box containing the transformed ball, so the estimate
    is independent of the gauge-polar machinery.
    """
    from .group import dil, inv, mul
    d = params.dim
    n = params.N
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    Rl = R * lam
    # |x_i|,|y_i| <= Rl and |w| <= Rl**2 for points of B_Rl; left translation
    # shifts w by at most 2*|z_c|*|z|*sqrt(2N)
    zc = np.linalg.norm(c[:2 * n])
    half = np.empty(d)
    half[:2 * n] = Rl
    half[2 * n] = Rl ** 2 + 2.0 * zc * Rl * math.sqrt(2 * n)
    rng = np.random.default_rng(seed)
    u = rng.uniform(-1.0, 1.0, size=(n_samples, d)) * half + c
    # membership: dil(1/lam, c^{-1} o u) in B_R
    back = dil(1.0 / lam, mul(inv(c), u))
    hit = norm(back, params.gauge) < R
    box = float(np.prod(2.0 * half))
    p = hit.mean()
    return box * p, box * math.sqrt(p * (1 - p) / n_samples)
