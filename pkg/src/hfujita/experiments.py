"""Fujita dichotomy experiments and their reports.

Every experiment runs at the unit radial normalisation ``c_Ns = 1/c_Q`` unless
the config says otherwise: the jump density of the operator in the gauge
radius is then exactly ``rho^{-1-2s}``. Any other constant is a rescaling of
time, so the dichotomy does not depend on it.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy
from scipy import optimize, stats
from scipy.special import gamma

from . import lemmas as _lemmas
from .errors import ConstraintError, ParameterError
from .fractional import FracParams
from .grid import GridFunction, GridSpec
from .group import Gauge, GroupParams
from .measure import sphere_constant
from .mol import assemble_operator
from .semigroup import SemigroupBackend, gauge_sphere_constant
from .solver import (ProblemData, SolutionTrajectory, Status, load_checkpoint, residual_blowup_time,
                     solve)

from . import __version__


class Mode(enum.Enum):
    SUBCRITICAL = "sub"
    CRITICAL = "crit"
    SUPERCRITICAL = "super"


class Verdict(enum.Enum):
    GLOBAL_CONFIRMED = "GlobalConfirmedAtHorizon"
    BLOW_UP = "BlowUpDetected"
    BOUND_VIOLATED = "BoundViolated"
    LEMMA_BOUNDS_OK = "LemmaBoundsOk"
    NO_GLOBAL = "NoGlobalSolution"
    INCONCLUSIVE = "Inconclusive"


# configuration ------------------------------------------------------------------------------


@dataclass
class FujitaConfig:
    """Parameters of one experiment. ``c_Ns = None`` means ``1/c_Q``."""

    N: int = 1
    gauge: str = "paper"
    s: float = 0.5
    p: float = 2.0
    epsilon: float = 0.01
    delta_decay: float = 1.0
    alpha: float = 2.0
    M: Optional[float] = None
    horizon: float = 50.0
    seed: int = 0
    c_Ns: Optional[float] = None
    R: float = 16.0
    n_r: int = 21
    n_w: int = 41
    dt: float = 0.5
    substeps: int = 1
    picard_tol: float = 1e-10
    blowup_factor: float = 1e6
    max_halvings: int = 8
    exploratory_horizon: float = 2.0
    data: str = "paper"  # solve subcommand: paper | bump | critical

    def __post_init__(self):
        self.gauge = Gauge(self.gauge).value
        gp = self.gp
        if not 0 < self.s < 1:
            raise ParameterError(f"s must lie in (0,1), got {self.s}")
        if not self.p > 1:
            raise ParameterError(f"p must exceed 1, got {self.p}")
        if not self.epsilon > 0:
            raise ParameterError("epsilon must be positive")
        if not self.delta_decay > 0:
            raise ParameterError("delta_decay must be positive")
        if not 0 < self.alpha < gp.Q:
            raise ParameterError(f"alpha must lie in (0, Q={gp.Q}), got {self.alpha}")
        if self.M is not None and not self.M > 0:
            raise ParameterError("M must be positive")
        if not self.horizon > 0:
            raise ParameterError("horizon must be positive")
        if self.data not in ("paper", "bump", "critical"):
            raise ParameterError(f"unknown data {self.data!r}; use paper, bump or critical")

    @property
    def gp(self) -> GroupParams:
        return GroupParams(self.N, Gauge(self.gauge))

    @property
    def rate(self) -> float:
        return 1.0 / gauge_sphere_constant(self.gp) if self.c_Ns is None else self.c_Ns

    def frac_params(self) -> FracParams:
        return FracParams(s=self.s, c_Ns=self.rate)

    def grid(self) -> GridSpec:
        return GridSpec.build(self.R, self.n_r, self.n_w, self.gp)

    def replace(self, **kw) -> "FujitaConfig":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_text(cls, text: str) -> "FujitaConfig":
        """Parse flat ``key = value`` lines; ``#`` starts a comment."""
        types = {f.name: f for f in dataclasses.fields(cls)}
        kw = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"config line {lineno}: expected key = value")
            key, val = (x.strip() for x in line.split("=", 1))
            if key not in types:
                raise ParameterError(f"config line {lineno}: unknown key {key!r}")
            kw[key] = _coerce(types[key], val)
        return cls(**kw)

    @classmethod
    def from_file(cls, path) -> "FujitaConfig":
        return cls.from_text(Path(path).read_text())

    def to_text(self) -> str:
        return "".join(f"{k} = {'none' if v is None else v}\n" for k, v in self.to_dict().items())


def _coerce(f: dataclasses.Field, val: str):
    if val.lower() == "none":
        return None
    kind = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", "")
    if "int" in kind:
        return int(val)
    if "float" in kind:
        return float(val)
    return val


# exponents ------------------------------------------------------------------------------------


def fujita_exponent(gp: GroupParams, s: float) -> float:
    """``p_F = Q/(Q-2s)``."""
    return gp.Q / (gp.Q - 2.0 * s)


def exponent_gap(p: float, gp: GroupParams, s: float) -> float:
    """``Q/2 - s p/(p-1)``: negative below ``p_F``, zero at it, positive above."""
    if not p > 1:
        raise ParameterError(f"p must exceed 1, got {p}")
    return gp.Q / 2.0 - s * p / (p - 1.0)


def check_decay_condition(p: float, s: float, delta: float, gp: GroupParams):
    """``(Q-2s) p >= Q + delta``, needed for ``|v|^p`` to inherit the decay of ``f``."""
    lhs, rhs = (gp.Q - 2 * s) * p, gp.Q + delta
    if lhs < rhs:
        raise ConstraintError(f"decay condition (Q-2s)p >= Q+delta violated: "
                              f"{lhs:.6g} < {rhs:.6g} (p={p}, s={s}, delta={delta})")


# data -------------------------------------------------------------------------------------------


def paper_data(config: FujitaConfig, spec: GridSpec | None = None):
    """``u0 = eps d^{Q-1}/(1+d^{2Q-s+delta})`` and ``f = eps/(1+d^{Q+delta})``."""
    gp, s, dl, eps = config.gp, config.s, config.delta_decay, config.epsilon
    check_decay_condition(config.p, s, dl, gp)
    spec = config.grid() if spec is None else spec
    Q = gp.Q
    u0 = GridFunction.from_radial(lambda d: eps * d ** (Q - 1) / (1 + d ** (2 * Q - s + dl)),
                                  spec, Q - s + 1 + dl)
    f = GridFunction.from_radial(lambda d: eps / (1 + d ** (Q + dl)), spec, Q + dl)
    return u0, f


def unit_bump_profile(gp: GroupParams):
    """``exp(-d^4)`` scaled to unit integral."""
    mass = gauge_sphere_constant(gp) * gamma(gp.Q / 4) / 4
    return lambda d: np.exp(-np.asarray(d, dtype=float) ** 4) / mass


def critical_forcing_profile(epsilon: float, alpha: float, Q: int):
    """``epsilon`` inside the unit gauge ball, ``d^{alpha-Q}`` outside."""
    def f(d):
        d = np.asarray(d, dtype=float)
        return np.where(d < 1.0, epsilon, np.maximum(d, 1.0) ** (alpha - Q))
    return f


# barrier --------------------------------------------------------------------------------------


@dataclass
class BarrierReport:
    M: float
    passed: bool
    worst_margin: float
    worst_time: float
    worst_node: dict
    n_violations: int
    margins: list  # per stored state: min over nodes of min(u, barrier - u)
    tail_ok: bool
    detail: str = ""

    def to_dict(self):
        return asdict(self)


def barrier_check(traj: SolutionTrajectory, M: float, gp: GroupParams, s: float,
                  tol: float = 1e-12) -> BarrierReport:
    """``0 <= u <= M/(1+d^{Q-2s})`` at every stored state and node.

    The margin at a node is ``min(u, barrier - u)``; ``tol * M`` absorbs
    rounding. Beyond the grid the tail model ``A (1+d)^{-beta}`` stays below
    the barrier when ``A <= M`` and ``beta >= Q-2s``, which is also checked.
    """
    if not M > 0:
        raise ParameterError("M must be positive")
    if not traj.states:
        raise ParameterError("empty trajectory")
    spec = traj.states[0].spec
    d = spec.gauge()
    bar = M / (1.0 + d ** (gp.Q - 2 * s))
    margins, worst, where, bad, tail_ok = [], math.inf, None, 0, True
    for t, g in zip(traj.times, traj.states):
        m = np.minimum(g.values, bar - g.values)
        k = int(np.argmin(m))
        margins.append(float(m.flat[k]))
        bad += int(np.count_nonzero(m < -tol * M))
        if m.flat[k] < worst:
            worst, where = float(m.flat[k]), (float(t), k)
        if g.tail.A > M * (1 + tol) or (g.tail.A > 0 and g.tail.beta < gp.Q - 2 * s):
            tail_ok = False
    i, j = np.unravel_index(where[1], spec.shape)
    node = {"r": float(spec.r_nodes[i]), "w": float(spec.w_nodes[j]), "d": float(d[i, j]),
            "index": [int(i), int(j)]}
    passed = bad == 0 and tail_ok
    detail = "" if passed else (f"{bad} node violations, worst margin {worst:.3g} at t={where[0]:.6g}, "
                                f"r={node['r']:.4g}, w={node['w']:.4g}"
                                + ("" if tail_ok else "; tail model exceeds the barrier"))
    return BarrierReport(float(M), passed, worst, where[0], node, bad, margins, tail_ok, detail)


# report -----------------------------------------------------------------------------------------


@dataclass
class ExperimentReport:
    """One experiment: config echo, verdict, measured constants, provenance.

    ``measured`` maps a name to ``{"value": ..., "error": ...}``.
    """

    experiment: str
    config: dict
    verdict: str
    verdict_detail: dict
    expected: str
    measured: dict = field(default_factory=dict)
    certificates: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    time_series: list = field(default_factory=list)  # rows (t, sup_norm, barrier_margin)

    @property
    def as_expected(self) -> bool:
        return self.verdict == self.expected

    def measure(self, name: str, value, error):
        self.measured[name] = {"value": _plain(value), "error": _plain(error)}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["as_expected"] = self.as_expected
        return _plain(d)

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, allow_nan=True)
        if path is not None:
            Path(path).write_text(text)
        return text

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "sup_norm", "barrier_margin"])
            for t, sup, margin in self.time_series:
                w.writerow([repr(t), repr(sup), "" if margin is None else repr(margin)])


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, enum.Enum):
        return x.value
    return x


def _provenance(config: FujitaConfig, started: float, **extra) -> dict:
    gp = config.gp
    sc = sphere_constant(gp)
    return {"seed": config.seed, "runtime_s": time.time() - started,
            "tolerances": {"picard_tol": config.picard_tol, "blowup_factor": config.blowup_factor},
            "c_Ns": config.rate,
            "sphere_constant": {"value": sc.value, "stderr": sc.stderr, "n_samples": sc.n_samples},
            "versions": {"hfujita": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
            **extra}


def _series(traj: SolutionTrajectory, barrier: BarrierReport | None = None) -> list:
    margins = barrier.margins if barrier is not None else [None] * len(traj.times)
    return [(float(t), float(s), m) for t, s, m in zip(traj.times, traj.sup_norms, margins)]


def _slope_with_error(x, y):
    fit = stats.linregress(np.log(x), np.log(y))
    return float(fit.slope), float(fit.stderr)


# lemma and mass-bound experiments ----------------------------------------------------------------


def lemma_bounds(config: FujitaConfig, xi_samples, qs: _lemmas.QuadSettings = _lemmas.QuadSettings(),
                 stability: float = 0.02) -> ExperimentReport:
    """Lemma integrals at every sample, wrapped in a report.

    Verdict ``LemmaBoundsOk`` lists the constants when every value is finite
    and stable under refinement; otherwise ``BoundViolated`` names the
    offending constants.
    """
    started = time.time()
    rep = _lemmas.lemma_bounds(xi_samples, config.s, config.delta_decay, config.gp, qs, stability)
    report = ExperimentReport("lemmas", config.to_dict(), "", {}, Verdict.LEMMA_BOUNDS_OK.value)
    failing = []
    for row in rep.rows:
        err = max(max(row.errors), abs(row.max_value - max(row.refined_values)))
        report.measure(row.constant, row.max_value, err)
        if not (row.finite and row.stable):
            failing.append({"constant": row.constant, "finite": row.finite,
                            "max_relative_change": row.max_relative_change, "notes": row.notes})
    report.measure("C5_envelope", rep.C5_envelope, abs(rep.C5_envelope_refined - rep.C5_envelope))
    if not rep.C5_stable:
        failing.append({"constant": "C5_envelope", "stable": False})
    report.certificates["lemmas"] = rep.to_dict()
    if failing:
        report.verdict = Verdict.BOUND_VIOLATED.value
        report.verdict_detail = {"failing": failing}
    else:
        report.verdict = Verdict.LEMMA_BOUNDS_OK.value
        report.verdict_detail = {"constants": [r.constant for r in rep.rows] + ["C5_envelope"]}
    report.provenance = _provenance(config, started, quad={"epsrel": qs.epsrel, "n_psi": qs.n_psi,
                                                           "n_dirs": qs.n_dirs, "stability": stability})
    return report


def radial_profile(g: GridFunction):
    """Gauge-radial profile ``r -> g(r, 0, .., 0)`` of a rotation-invariant grid function."""
    dim = g.spec.gp.dim

    def prof(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        pts = np.zeros(r.shape + (dim,))
        pts[..., 0] = r
        out = g(pts)
        return out if out.size > 1 else float(out[0])
    return prof


def subcritical_mass_bound(T_values, config: FujitaConfig, f: GridFunction) -> _lemmas.MassBoundReport:
    """Mass bound of the blow-up argument for a forcing given on the grid."""
    return _lemmas.subcritical_mass_bound(T_values, config.p, config.s, radial_profile(f), config.gp,
                                          breaks=f.spec.r_nodes)


# dichotomy ---------------------------------------------------------------------------------------

SUB_T_VALUES = (10.0, 1e2, 1e3, 1e4)
CRIT_T_VALUES = (1e2, 1e3, 1e4, 1e5)


def check_mode(config: FujitaConfig, mode: Mode):
    pF = fujita_exponent(config.gp, config.s)
    p = config.p
    critical = abs(p - pF) <= 1e-12 * pF
    ok = {Mode.SUBCRITICAL: p < pF and not critical, Mode.CRITICAL: critical,
          Mode.SUPERCRITICAL: p > pF and not critical}[mode]
    if not ok:
        raise ConstraintError(f"mode {mode.value} does not match p={p!r}: p_F = Q/(Q-2s) = {pF!r}")


def _problem(config: FujitaConfig, u0: GridFunction, f: GridFunction, beta: float) -> ProblemData:
    return ProblemData(u0, f, config.p, config.s, config.gp, config.frac_params(), state_beta=beta)


def _run(config: FujitaConfig, pd: ProblemData, horizon: float, dt: float, substeps: int,
         exploratory: bool = False, checkpoint=None, resume=None, progress=None) -> SolutionTrajectory:
    threshold = config.blowup_factor * max(1.0, pd.delta)
    return solve(pd, horizon, threshold, SemigroupBackend(fp=pd.fp), dt=dt, substeps=substeps,
                 picard_tol=config.picard_tol, exploratory=exploratory, checkpoint=checkpoint,
                 resume=resume, progress=progress)


def run_dichotomy(config: FujitaConfig, mode, progress=None) -> ExperimentReport:
    """Run one side of the dichotomy and assemble its report."""
    mode = Mode(mode)
    check_mode(config, mode)
    runner = {Mode.SUBCRITICAL: _subcritical, Mode.CRITICAL: _critical,
              Mode.SUPERCRITICAL: _supercritical}[mode]
    started = time.time()
    report = runner(config, progress)
    report.measure("fujita_exponent", fujita_exponent(config.gp, config.s), 0.0)
    report.measure("exponent_gap", exponent_gap(config.p, config.gp, config.s), 0.0)
    report.provenance = _provenance(config, started, **report.provenance)
    return report


def _subcritical(config: FujitaConfig, progress) -> ExperimentReport:
    """Unit-mass bump forcing, zero initial datum, two time resolutions."""
    gp, spec = config.gp, config.grid()
    beta = gp.Q - 2 * config.s
    f = GridFunction.from_radial(unit_bump_profile(gp), spec, beta)
    pd = _problem(config, GridFunction.zeros(spec, beta), f, beta)
    runs = []
    for dt, sub in ((config.dt, config.substeps), (config.dt / 2, 2 * config.substeps)):
        t0 = time.time()
        traj = _run(config, pd, config.horizon, dt, sub, progress=progress)
        runs.append((dt, sub, traj, time.time() - t0))
    blown = all(tr.status is Status.BLOW_UP for _, _, tr, _ in runs)
    overlap = blown and max(tr.bracket[0] for _, _, tr, _ in runs) <= min(tr.bracket[1] for _, _, tr, _ in runs)
    mass = subcritical_mass_bound(SUB_T_VALUES, config, f)
    report = ExperimentReport("dichotomy-sub", config.to_dict(), "", {}, Verdict.BLOW_UP.value)
    report.certificates["runs"] = [
        {"dt": dt, "substeps": sub, "status": tr.status.value, "t_estimate": tr.t_estimate,
         "bracket": tr.bracket, "max_contraction": tr.max_contraction, "windows": len(tr.windows),
         "message": tr.message, "runtime_s": wall} for dt, sub, tr, wall in runs]
    report.certificates["mass_bound"] = mass.to_dict()
    report.certificates["bracket_overlap"] = overlap
    report.measure("forcing_mass", f.integral(), abs(f.integral() - 1.0))
    slope, err = _slope_with_error(mass.T_values, mass.envelope)
    report.measure("envelope_slope", slope, err)
    fine = runs[1][2]
    report.time_series = _series(fine)
    if overlap:
        tc = [tr.t_estimate for _, _, tr, _ in runs]
        report.measure("t_blowup", fine.t_estimate,
                       max(abs(tc[0] - tc[1]), fine.bracket[1] - fine.t_estimate))
        report.verdict = Verdict.BLOW_UP.value
        report.verdict_detail = {"t": fine.t_estimate, "brackets": [tr.bracket for _, _, tr, _ in runs],
                                 "residual_time": residual_blowup_time(config.blowup_factor, config.p)}
    elif all(tr.status is Status.REACHED_HORIZON for _, _, tr, _ in runs):
        report.verdict = Verdict.GLOBAL_CONFIRMED.value
        report.verdict_detail = {"horizon": config.horizon, "sup_norm": fine.sup_norms[-1]}
    else:
        report.verdict = Verdict.INCONCLUSIVE.value
        report.verdict_detail = {"statuses": [tr.status.value for _, _, tr, _ in runs],
                                 "reason": "blow-up not confirmed at both resolutions with overlapping brackets"}
    return report


def _critical(config: FujitaConfig, progress) -> ExperimentReport:
    """Mass-growth certificate plus an exploratory solver run."""
    gp, spec = config.gp, config.grid()
    growth = _lemmas.critical_mass_growth(config.alpha, CRIT_T_VALUES, gp)
    beta = gp.Q - config.alpha
    f = GridFunction.from_radial(critical_forcing_profile(config.epsilon, config.alpha, gp.Q), spec, beta)
    pd = _problem(config, GridFunction.zeros(spec, beta), f, beta)
    traj = _run(config, pd, config.exploratory_horizon, config.dt, config.substeps, exploratory=True,
                progress=progress)
    report = ExperimentReport("dichotomy-crit", config.to_dict(), "", {}, Verdict.NO_GLOBAL.value)
    report.certificates["mass_growth"] = growth.to_dict()
    report.certificates["exploratory_run"] = {
        "horizon": config.exploratory_horizon, "status": traj.status.value, "t_estimate": traj.t_estimate,
        "final_sup_norm": traj.sup_norms[-1], "certified_windows": sum(w.certified for w in traj.windows),
        "windows": len(traj.windows), "message": traj.message}
    slope, err = _slope_with_error(growth.T_values, growth.values)
    report.measure("growth_exponent", slope, err)
    report.time_series = _series(traj)
    if growth.passed:
        report.verdict = Verdict.NO_GLOBAL.value
        report.verdict_detail = {"growth_exponent": slope, "expected": growth.expected_exponent,
                                 "reason": "forcing mass on B_sqrt(T) grows without bound"}
    else:
        report.verdict = Verdict.INCONCLUSIVE.value
        report.verdict_detail = {"growth_exponent": slope, "expected": growth.expected_exponent}
    return report


@dataclass
class BarrierConstants:
    """Constants of the fixed-point inequality ``C (C M^p + eps) <= M``.

    ``C_u0`` bounds the weighted norm of ``S(t) u0 / eps`` over sampled times,
    ``C_f`` the weighted Riesz potential of ``f / eps`` in the discrete model,
    ``C_p`` the factor turning ``(1+d^{Q-2s})^{-p}`` into ``(1+d^{Q+delta})^{-1}``.
    """

    C_u0: float
    C_f: float
    C_p: float

    @property
    def C(self) -> float:
        return max(self.C_u0 + self.C_f, self.C_p)

    def smallest_M(self, eps: float, p: float) -> float | None:
        C = self.C
        h = lambda M: M - C * C * M ** p - C * eps
        top = (1.0 / (p * C * C)) ** (1.0 / (p - 1.0))
        if h(top) < 0:
            return None
        return float(optimize.brentq(h, 0.0, top, xtol=1e-15, rtol=1e-12))


def barrier_constants(config: FujitaConfig, spec: GridSpec | None = None) -> BarrierConstants:
    gp, s, Q = config.gp, config.s, config.gp.Q
    spec = config.grid() if spec is None else spec
    beta = Q - 2 * s
    u0, f = paper_data(config.replace(epsilon=1.0), spec)
    weight = 1.0 + spec.gauge() ** (Q - 2 * s)
    fp = config.frac_params()
    op = assemble_operator(spec, fp, beta)
    v = np.linalg.solve(op.matrix, f.values.ravel()).reshape(spec.shape)
    C_f = float(np.max(weight * v))
    backend = SemigroupBackend(fp=fp)
    g = GridFunction(spec, u0.values, GridFunction.fit_tail(spec, u0.values, beta))
    C_u0, t = float(np.max(weight * g.values)), 0.125
    g = backend.apply(g, t)
    while True:
        C_u0 = max(C_u0, float(np.max(weight * g.values)))
        if t >= config.horizon:
            break
        g, t = backend.apply(g, t), 2 * t
    d = np.geomspace(1e-3, 1e6, 4001)
    C_p = float(np.max((1 + d ** (Q + config.delta_decay)) / (1 + d ** (Q - 2 * s)) ** config.p))
    return BarrierConstants(C_u0, C_f, C_p)


def _supercritical(config: FujitaConfig, progress) -> ExperimentReport:
    """Halve epsilon until the barrier holds over the whole horizon."""
    gp, spec, s = config.gp, config.grid(), config.s
    check_decay_condition(config.p, s, config.delta_decay, gp)
    beta = gp.Q - 2 * s
    consts = barrier_constants(config, spec)
    report = ExperimentReport("dichotomy-super", config.to_dict(), "", {}, Verdict.GLOBAL_CONFIRMED.value)
    attempts, eps, found = [], config.epsilon, None
    last_bar = traj = None
    for _ in range(config.max_halvings + 1):
        M = config.M if config.M is not None else consts.smallest_M(eps, config.p)
        if M is None:
            attempts.append({"epsilon": eps, "M": None, "reason": "no M satisfies C(CM^p + eps) <= M"})
            eps /= 2
            continue
        u0, f = paper_data(config.replace(epsilon=eps), spec)
        pd = _problem(config, u0, f, beta)
        traj = _run(config, pd, config.horizon, config.dt, config.substeps, progress=progress)
        last_bar = barrier_check(traj, M, gp, s)
        attempts.append({"epsilon": eps, "M": M, "status": traj.status.value, "barrier": last_bar.passed,
                         "worst_margin": last_bar.worst_margin})
        if traj.status is Status.REACHED_HORIZON and last_bar.passed:
            found = (eps, M)
            break
        eps /= 2
    report.certificates["constants"] = asdict(consts) | {"C": consts.C}
    report.certificates["search"] = attempts
    report.measure("C_u0", consts.C_u0, 0.0)
    report.measure("C_f", consts.C_f, 0.0)
    report.measure("C_p", consts.C_p, 0.0)
    if last_bar is not None:
        report.certificates["barrier"] = {k: v for k, v in last_bar.to_dict().items() if k != "margins"}
        report.time_series = _series(traj, last_bar)
    if found is not None:
        report.measure("epsilon", found[0], 0.0)
        report.measure("M", found[1], 0.0)
        report.measure("max_contraction", traj.max_contraction, config.picard_tol)
        report.verdict = Verdict.GLOBAL_CONFIRMED.value
        report.verdict_detail = {"epsilon": found[0], "M": found[1], "horizon": config.horizon,
                                 "worst_margin": last_bar.worst_margin}
    elif last_bar is not None:
        report.verdict = Verdict.BOUND_VIOLATED.value
        report.verdict_detail = {"detail": last_bar.detail or traj.message, "status": traj.status.value}
    else:
        report.verdict = Verdict.INCONCLUSIVE.value
        report.verdict_detail = {"reason": "no epsilon in the search admits a barrier constant"}
    return report


# single solver runs -----------------------------------------------------------------------------


def build_data(config: FujitaConfig):
    """``(u0, f, state_beta)`` for the ``data`` key of a config."""
    gp, spec = config.gp, config.grid()
    if config.data == "paper":
        u0, f = paper_data(config, spec)
        return u0, f, gp.Q - 2 * config.s
    if config.data == "bump":
        beta = gp.Q - 2 * config.s
        return GridFunction.zeros(spec, beta), GridFunction.from_radial(unit_bump_profile(gp), spec, beta), beta
    beta = gp.Q - config.alpha
    f = GridFunction.from_radial(critical_forcing_profile(config.epsilon, config.alpha, gp.Q), spec, beta)
    return GridFunction.zeros(spec, beta), f, beta


def run_solve(config: FujitaConfig, out, resume=None, progress=None) -> ExperimentReport:
    """One solver run with checkpoints under ``out/checkpoint``; resumable."""
    started = time.time()
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    u0, f, beta = build_data(config)
    pd = _problem(config, u0, f, beta)
    prior = load_checkpoint(resume, config.gp) if resume is not None else None
    traj = _run(config, pd, config.horizon, config.dt, config.substeps, checkpoint=out / "checkpoint",
                resume=prior, progress=progress)
    above = config.p > fujita_exponent(config.gp, config.s)
    expected = Verdict.GLOBAL_CONFIRMED if above else Verdict.BLOW_UP
    verdict = {Status.REACHED_HORIZON: Verdict.GLOBAL_CONFIRMED, Status.BLOW_UP: Verdict.BLOW_UP,
               Status.STEP_FAILURE: Verdict.INCONCLUSIVE}[traj.status]
    bar = barrier_check(traj, config.M, config.gp, config.s) if config.M is not None else None
    if bar is not None and not bar.passed:
        verdict = Verdict.BOUND_VIOLATED
    report = ExperimentReport("solve", config.to_dict(), verdict.value,
                              {"status": traj.status.value, "t_estimate": traj.t_estimate,
                               "bracket": traj.bracket, "message": traj.message}, expected.value)
    report.time_series = _series(traj, bar)
    report.measure("final_sup_norm", traj.sup_norms[-1], 0.0)
    report.measure("max_contraction", traj.max_contraction, config.picard_tol)
    if bar is not None:
        report.certificates["barrier"] = {k: v for k, v in bar.to_dict().items() if k != "margins"}
    report.provenance = _provenance(config, started, resumed_from=None if resume is None else str(resume))
    report.to_json(out / "report.json")
    report.write_csv(out / "series.csv")
    return report


__all__ = ["Mode", "Verdict", "FujitaConfig", "fujita_exponent", "exponent_gap", "check_decay_condition",
           "paper_data", "unit_bump_profile", "critical_forcing_profile", "BarrierReport",
           "barrier_check", "ExperimentReport", "lemma_bounds", "radial_profile",
           "subcritical_mass_bound", "check_mode", "run_dichotomy", "BarrierConstants",
           "barrier_constants", "build_data", "run_solve", "SUB_T_VALUES", "CRIT_T_VALUES"]
