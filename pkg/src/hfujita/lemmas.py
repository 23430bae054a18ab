"""Weighted singular integrals behind the global-existence argument.

Every integral has the form

    I(xi) = int  d(eta, xi)^{-a} h(d(eta)) d eta

with a radial profile ``h``. A smooth cutoff ``chi`` of ``d(eta, xi)`` splits
it into a near part, integrated in gauge-polar coordinates centred at ``xi``
(where the singular factor is a pure power of the radius and is absorbed into
an algebraic quadrature weight), and a far part, integrated in coordinates
centred at the origin where ``h`` lives. Both parts use adaptive radial
quadrature with a product angular rule inside.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import ParameterError, QuadratureError
from .fields import CutoffProfile
from .group import GroupParams, GroupPoint, mul, norm
from .measure import angular_rule, polar_integrate_radial, polar_to_points

NEAR_CUTOFF = CutoffProfile(1.0, 2.0)


@dataclass(frozen=True)
class LemmaIntegrand:
    """``d(eta, xi)^{-a} * h(d(eta))`` with ``h`` given as a callable of the gauge."""

    name: str
    a: float
    h: Callable
    depends_on_xi: bool = True


def lemma_integrands(Q: int, s: float, delta: float) -> dict:
    """The six integrands, keyed by the constant each one bounds."""
    return {
        "C1": LemmaIntegrand("C1", Q - 2 * s, lambda r: 1.0 / (1.0 + r ** (Q + delta))),
        "C2": LemmaIntegrand("C2", Q - 2 * s, lambda r: 1.0 / (1.0 + r ** (2 * s + delta))),
        "C3": LemmaIntegrand("C3", Q + 2 * s, lambda r: r ** (Q - 1) / (1.0 + r ** (Q + s + delta))),
        "C4": LemmaIntegrand("C4", Q + 2 * s, lambda r: r ** (Q - 1) / (1.0 + r ** (2 * Q - s + delta))),
        "C5": LemmaIntegrand("C5", Q - 2 * s, lambda r: 1.0 / (1.0 + r ** (Q + delta))),
        "C6": LemmaIntegrand("C6", 0.0, lambda r: r ** (Q - 1) / (1.0 + r ** (2 * Q - s + delta)),
                             depends_on_xi=False),
    }


@dataclass(frozen=True)
class QuadSettings:
    epsrel: float = 1e-6
    n_psi: int = 24
    n_dirs: int = 32

    def refined(self) -> "QuadSettings":
        """Half the tolerance and about 1.4x the angular nodes per axis."""
        return QuadSettings(self.epsrel / 2, int(math.ceil(self.n_psi * 1.42)),
                            int(math.ceil(self.n_dirs * 1.42)))


@dataclass
class IntegralValue:
    value: float
    error: float
    divergent: bool = False
    note: str = ""


def _quad(f, a, b, qs: QuadSettings, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            return integrate.quad(f, a, b, epsabs=0.0, epsrel=qs.epsrel, limit=400, **kw)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc


def singular_integral(ig: LemmaIntegrand, xi, gp: GroupParams = GroupParams(),
                      qs: QuadSettings = QuadSettings()) -> IntegralValue:
    """``int d(eta, xi)^{-a} h(d(eta)) d eta`` for one sample ``xi``.

    A non-integrable singularity at ``eta = xi`` (``a >= Q`` with
    ``h(d(xi)) != 0``) is reported as ``divergent`` with value ``inf``.
    """
    if not gp.radial_symmetric:
        raise ParameterError("lemma quadrature needs N=1 or the standard gauge")
    xi = np.asarray(xi, dtype=float)
    Q = gp.Q
    dxi = float(norm(xi, gp.gauge))
    rule = angular_rule(gp.N, gp.gauge, qs.n_psi, qs.n_dirs)
    if not ig.depends_on_xi or ig.a == 0:
        val = polar_integrate_radial(ig.h, gp, epsrel=qs.epsrel)
        return IntegralValue(val, abs(val) * qs.epsrel)
    if ig.a >= Q and ig.h(dxi) != 0.0:
        return IntegralValue(math.inf, math.inf, True,
                             f"d(eta,xi)^-{ig.a:g} is not integrable at eta=xi (Q={Q}, h(d(xi))={ig.h(dxi):.3g})")
    rc = 0.25 * max(1.0, dxi)

    def near(rho):
        # angular integral of h(d(xi o zeta)) chi(|zeta|/rc) on the sphere |zeta| = rho
        pts = mul(xi, polar_to_points(rho, rule)[0])
        return float(np.dot(rule.weights, ig.h(norm(pts, gp.gauge)))) * float(NEAR_CUTOFF(rho / rc))

    def far(rho):
        pts = polar_to_points(rho, rule)[0]
        d = norm(mul(-xi, pts), gp.gauge)
        chi = NEAR_CUTOFF(d / rc)
        kern = np.where(chi < 1.0, (1.0 - chi) * np.where(chi < 1.0, d, 1.0) ** (-ig.a), 0.0)
        return float(np.dot(rule.weights, kern)) * rho ** (Q - 1) * float(ig.h(rho))

    expo = Q - 1 - ig.a
    if expo <= -1:
        return IntegralValue(math.inf, math.inf, True,
                             f"radial singularity rho^{expo:g} at eta=xi is not integrable")
    try:
        v1, e1 = _quad(near, 0.0, 2 * rc, qs, weight="alg", wvar=(expo, 0.0))
        pieces = [0.0, max(dxi - 3 * rc, 0.0), dxi + 3 * rc, 2 * (dxi + 3 * rc)]
        pieces = sorted(set(pieces))
        v2, e2 = 0.0, 0.0
        for lo, hi in zip(pieces[:-1], pieces[1:]):
            v, e = _quad(far, lo, hi, qs)
            v2, e2 = v2 + v, e2 + e
        v, e = _quad(far, pieces[-1], math.inf, qs)
        v2, e2 = v2 + v, e2 + e
    except QuadratureError as exc:
        return IntegralValue(math.nan, math.inf, False, f"quadrature did not converge: {exc}")
    return IntegralValue(v1 + v2, e1 + e2)


@dataclass
class LemmaRow:
    constant: str
    values: list
    errors: list
    refined_values: list
    max_value: float
    max_relative_change: float
    stable: bool
    finite: bool
    notes: list = field(default_factory=list)


@dataclass
class LemmaReport:
    Q: int
    s: float
    delta: float
    radii: list
    rows: list
    C5_envelope: float
    C5_envelope_refined: float
    C5_stable: bool

    @property
    def all_finite(self) -> bool:
        return all(r.finite for r in self.rows)

    @property
    def all_stable(self) -> bool:
        return all(r.stable for r in self.rows) and self.C5_stable

    def to_dict(self) -> dict:
        return asdict(self)


def _sample_point(x, gp: GroupParams) -> np.ndarray:
    if isinstance(x, GroupPoint):
        x = x.as_array()
    a = np.atleast_1d(np.asarray(x, dtype=float))
    if a.size == 1:
        return np.r_[a, np.zeros(gp.dim - 1)]
    if a.shape != (gp.dim,):
        raise ParameterError(f"sample point must have {gp.dim} coordinates")
    return a


def lemma_bounds(radii, s: float = 0.5, delta: float = 1.0, gp: GroupParams = GroupParams(),
                 qs: QuadSettings = QuadSettings(), stability: float = 0.02) -> LemmaReport:
    """Evaluate every integral at each sample.

    A sample is a gauge radius ``r`` (meaning ``xi = (r, 0, .., 0)``), a
    coordinate vector or a :class:`GroupPoint`.

    Each value is recomputed with :meth:`QuadSettings.refined`; a row is
    stable when no value changes by more than ``stability`` relatively. The
    envelope constant for ``C5`` is ``max_xi I(xi) (1 + d(xi)^{Q-2s})``.
    """
    if not delta > 0:
        raise ParameterError("delta must be positive")
    xis = [_sample_point(x, gp) for x in radii]
    radii = [float(norm(x, gp.gauge)) for x in xis]
    Q = gp.Q
    rows = []
    env = env_ref = math.nan
    for key, ig in lemma_integrands(Q, s, delta).items():
        coarse = [singular_integral(ig, x, gp, qs) for x in xis]
        fine = [singular_integral(ig, x, gp, qs.refined()) for x in xis]
        vals = np.array([c.value for c in coarse])
        vref = np.array([f.value for f in fine])
        finite = bool(np.all(np.isfinite(vals)))
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.abs(vref - vals) / np.abs(vref)
        rel_max = float(np.max(rel[np.isfinite(rel)])) if np.any(np.isfinite(rel)) else math.inf
        notes = sorted({c.note for c in coarse if c.note})
        if key == "C5":
            w = 1.0 + np.asarray(radii) ** (Q - 2 * s)
            env = float(np.max(vals * w))
            env_ref = float(np.max(vref * w))
        rows.append(LemmaRow(key, vals.tolist(), [c.error for c in coarse], vref.tolist(),
                             float(np.max(vals)), rel_max, finite and rel_max <= stability,
                             finite, notes))
    c5_stable = bool(math.isfinite(env) and abs(env_ref - env) <= stability * abs(env_ref))
    return LemmaReport(Q, s, delta, radii, rows, env, env_ref, c5_stable)


# test functions and mass bounds ------------------------------------------------------------


def test_exponent(p: float) -> float:
    """``l = 1 + p/(p-1)``."""
    if not p > 1:
        raise ParameterError("p must exceed 1")
    return 1.0 + p / (p - 1.0)


@dataclass(frozen=True)
class BlowupTestFunction:
    """``phi(xi, t) = phi1(xi)^l phi2(t)^l`` with ``phi1 = Phi(||xi|| / sqrt(T))``,
    ``phi2 = Phi(t / T^s)`` for a cutoff profile ``Phi``."""

    T: float
    p: float
    s: float
    profile: CutoffProfile = CutoffProfile()
    gp: GroupParams = GroupParams()

    @property
    def l(self) -> float:
        return test_exponent(self.p)

    @property
    def support_radius(self) -> float:
        return self.profile.outer * math.sqrt(self.T)

    @property
    def final_time(self) -> float:
        return self.profile.outer * self.T ** self.s

    def phi1(self, pts):
        return self.profile(norm(pts, self.gp.gauge) / math.sqrt(self.T))

    def space(self, pts):
        return self.phi1(pts) ** self.l

    def time(self, t):
        return self.profile(np.asarray(t, dtype=float) / self.T ** self.s) ** self.l

    def dtime(self, t):
        x = np.asarray(t, dtype=float) / self.T ** self.s
        return self.l * self.profile(x) ** (self.l - 1) * self.profile.derivative(x) / self.T ** self.s

    def __call__(self, pts, t):
        return self.space(pts) * self.time(t)


def build_test_function(T: float, p: float, s: float, profile: CutoffProfile = CutoffProfile(),
                        gp: GroupParams = GroupParams()) -> BlowupTestFunction:
    if not T > 0:
        raise ParameterError("T must be positive")
    return BlowupTestFunction(T, p, s, profile, gp)


@dataclass
class MassBoundReport:
    T_values: list
    L_values: list
    envelope: list
    envelope_exponent: float
    fitted_slope: float
    lower_bound: float
    crossing_T: float | None
    verdict: str

    def to_dict(self):
        return asdict(self)


def _radial_integral(g, gp, upper, breaks=None):
    """Radial integral split at the kinks ``breaks`` of a piecewise-smooth profile."""
    if breaks is None:
        return polar_integrate_radial(g, gp, upper=upper, epsrel=1e-10)
    breaks = np.asarray(breaks, dtype=float)
    edge = min(upper, float(breaks[-1]))
    inner = breaks[(breaks > 0) & (breaks < edge)]
    total = 0.0
    for lo, hi in zip(np.r_[0.0, inner], np.r_[inner, edge]):
        total += polar_integrate_radial(g, gp, upper=hi, lower=lo, epsrel=1e-10)
    if upper > edge:
        total += polar_integrate_radial(g, gp, upper=upper, lower=edge, epsrel=1e-10)
    return total


def young_envelope(T: float, p: float, s: float, gp: GroupParams = GroupParams(),
                   profile: CutoffProfile = CutoffProfile()) -> float:
    """Upper bound on ``int f phi1`` left by the Young split of the time-derivative term.

    ``(p-1) p^{-p'} int int phi^{-p'/p} |d_t phi|^{p'} / int phi2^l``, which scales
    like ``T^{Q/2 - sp/(p-1)}``. The nonlocal term scales identically but its
    weighted integral needs a pointwise convexity bound and is not evaluated.
    """
    l = test_exponent(p)
    pp = p / (p - 1.0)
    Ts = T ** s
    space = polar_integrate_radial(lambda r: profile(r / math.sqrt(T)) ** l, gp,
                                   upper=profile.outer * math.sqrt(T), epsrel=1e-10)

    def dt_term(t):
        x = t / Ts
        ph = float(profile(x))
        if ph <= 0.0:
            return 0.0
        d = l * ph ** (l - 1) * float(profile.derivative(x)) / Ts
        return abs(d) ** pp * ph ** (-l * pp / p)

    lo, hi = profile.inner * Ts, profile.outer * Ts
    timep = integrate.quad(dt_term, lo, hi, epsabs=0.0, epsrel=1e-10, limit=200)[0]
    mass2 = integrate.quad(lambda t: float(profile(t / Ts)) ** l, 0.0, hi, points=[lo],
                           epsabs=0.0, epsrel=1e-10, limit=200)[0]
    return (p - 1.0) * p ** (-pp) * space * timep / mass2


def subcritical_mass_bound(T_values, p: float, s: float, f_profile: Callable,
                           gp: GroupParams = GroupParams(), breaks=None) -> MassBoundReport:
    """``L(T) = int f phi1`` against the envelope of :func:`young_envelope`.

    ``f_profile`` is the gauge-radial forcing ``f(d)``. The envelope slope is
    fitted in log-log on the sampled ``T``; the verdict is ``Contradiction``
    once the decaying envelope drops below ``L(T)``, which is nondecreasing in
    ``T`` and so bounded below by ``L(T_1) > 0``. ``breaks`` lists radii
    where the profile has kinks (grid nodes of an interpolated forcing).
    """
    Q = gp.Q
    pF = Q / (Q - 2 * s)
    if not p < pF:
        raise ParameterError(f"subcritical bound needs p < p_F = {pF:.6g}")
    T = np.asarray(T_values, dtype=float)
    if T.size < 2 or np.any(np.diff(T) <= 0):
        raise ParameterError("T_values must be increasing with at least two entries")
    total = _radial_integral(f_profile, gp, math.inf, breaks)
    if not total > 0:
        raise ParameterError("the forcing must have positive integral")
    prof = CutoffProfile()
    L = np.array([_radial_integral(lambda r, t=t: f_profile(r) * prof(r / math.sqrt(t)), gp,
                                   prof.outer * math.sqrt(t), breaks) for t in T])
    env = np.array([young_envelope(t, p, s, gp, prof) for t in T])
    slope = float(np.polyfit(np.log(T), np.log(env), 1)[0])
    below = np.nonzero(env < L)[0]
    crossing = float(T[below[0]]) if below.size else None
    verdict = "Contradiction" if crossing is not None else "NoCrossingObserved"
    return MassBoundReport(T.tolist(), L.tolist(), env.tolist(), Q / 2 - s * p / (p - 1), slope,
                           float(L.min()), crossing, verdict)


@dataclass
class CriticalGrowthReport:
    alpha: float
    T_values: list
    values: list
    fitted_exponent: float
    expected_exponent: float
    tolerance: float
    passed: bool
    verdict: str

    def to_dict(self):
        return asdict(self)


def critical_mass_growth(alpha: float, T_values, gp: GroupParams = GroupParams(),
                         tolerance: float = 0.05) -> CriticalGrowthReport:
    """``int_{1 <= ||xi|| <= sqrt(T)} ||xi||^{alpha-Q}`` and its growth exponent in ``T``."""
    Q = gp.Q
    if not 0 < alpha < Q:
        raise ParameterError(f"alpha must lie in (0, Q={Q})")
    T = np.asarray(T_values, dtype=float)
    vals = np.array([polar_integrate_radial(lambda r: r ** (alpha - Q), gp, upper=math.sqrt(t),
                                            lower=1.0, epsrel=1e-12) for t in T])
    slope = float(np.polyfit(np.log(T), np.log(vals), 1)[0])
    ok = abs(slope - alpha / 2) <= tolerance and bool(np.all(np.diff(vals) > 0))
    return CriticalGrowthReport(alpha, T.tolist(), vals.tolist(), slope, alpha / 2, tolerance, ok,
                                "Unbounded" if ok else "Inconclusive")


__all__ = ["LemmaIntegrand", "lemma_integrands", "QuadSettings", "IntegralValue", "singular_integral",
           "LemmaRow", "LemmaReport", "lemma_bounds", "test_exponent", "BlowupTestFunction",
           "build_test_function", "MassBoundReport", "young_envelope", "subcritical_mass_bound",
           "CriticalGrowthReport", "critical_mass_growth"]
