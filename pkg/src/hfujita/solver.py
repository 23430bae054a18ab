"""Mild solutions of ``u_t + (-Delta_H)^s u = |u|^p + f`` by windowed Picard iteration.

Each window ``[t0, t0 + n*dt]`` is no longer than the certified local existence
time of its starting datum. Inside it the Duhamel map is discretised with the
composite midpoint rule on the window's own nodes, which gives the recursion

    u_{k+1} = S(dt) u_k + dt * S(dt/2) F((u_k + u_{k+1}) / 2),   F(v) = |v|^p + f

evaluated on the previous iterate. Only ``S(dt)`` and ``S(dt/2)`` are ever
needed, and ``dt`` is a dyadic fraction of the base step so propagators are
shared between windows.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import BackendError, ConstraintError, ParameterError
from .fractional import FracParams, frac_sublaplacian_many
from .grid import GridFunction, GridSpec, TailModel
from .group import GroupParams
from .semigroup import SemigroupBackend

PICARD_TOL = 1e-10
MAX_PICARD = 80
BLOWUP_FACTOR = 1e6
BISECT_STEPS = 0


@dataclass
class ProblemData:
    u0: GridFunction
    f: GridFunction
    p: float
    s: float
    gp: GroupParams = GroupParams()
    fp: Optional[FracParams] = None
    state_beta: Optional[float] = None  # tail exponent carried by every solver state

    def __post_init__(self):
        if not self.p > 1:
            raise ParameterError(f"p must exceed 1, got {self.p}")
        if not 0 < self.s < 1:
            raise ParameterError(f"s must lie in (0,1), got {self.s}")
        self.fp = FracParams(s=self.s) if self.fp is None else replace(self.fp, s=self.s)
        if self.state_beta is None:
            self.state_beta = float(min(self.u0.tail.beta, self.f.tail.beta))
        sp = self.u0.spec
        if not (np.array_equal(sp.r_nodes, self.f.spec.r_nodes)
                and np.array_equal(sp.w_nodes, self.f.spec.w_nodes)):
            raise ParameterError("u0 and f must live on the same grid")
        # every state shares one tail exponent so the MOL operator is assembled once
        self.u0 = _retail(self.u0, self.state_beta)
        self.f = replace(_retail(self.f, self.state_beta), spec=sp)

    @property
    def spec(self) -> GridSpec:
        return self.u0.spec

    @property
    def delta(self) -> float:
        return max(self.u0.sup_norm, self.f.sup_norm)

    def nonlinearity(self, v: np.ndarray) -> np.ndarray:
        return np.abs(v) ** self.p + self.f.values


def _retail(g: GridFunction, beta: float) -> GridFunction:
    return GridFunction(g.spec, g.values, GridFunction.fit_tail(g.spec, g.values, beta))


@dataclass(frozen=True)
class LocalExistenceBudget:
    delta: float
    T_star: float
    lipschitz_bound: float

    @property
    def trivial(self) -> bool:
        return math.isinf(self.T_star)


def local_existence_time(pd_or_delta, p: float | None = None) -> LocalExistenceBudget:
    """Certified window length for data of size ``delta``.

    ``T* = min(delta / ((2 delta)^p + delta), 1 / (2 * 2^{p-1} * p * (2 delta)^{p-1}))``:
    the first branch keeps the ball of radius ``2 delta`` invariant, the second
    makes the Duhamel map a 1/2-contraction on it (``C(p) = p``).
    ``lipschitz_bound`` is the Lipschitz constant of ``|x|^p`` on that ball.
    """
    if isinstance(pd_or_delta, ProblemData):
        delta, p = pd_or_delta.delta, pd_or_delta.p
    else:
        delta = float(pd_or_delta)
    if not math.isfinite(delta) or delta < 0:
        raise ParameterError("delta must be finite and nonnegative")
    if delta == 0:
        return LocalExistenceBudget(0.0, math.inf, 0.0)
    b = 2.0 * delta
    t1 = delta / (b ** p + delta)
    t2 = 1.0 / (2.0 * 2.0 ** (p - 1) * p * b ** (p - 1))
    return LocalExistenceBudget(delta, min(t1, t2), p * b ** (p - 1))


# trajectory ---------------------------------------------------------------------------


class Status(enum.Enum):
    REACHED_HORIZON = "ReachedHorizon"
    BLOW_UP = "BlowUp"
    STEP_FAILURE = "StepFailure"


@dataclass
class WindowRecord:
    t0: float
    length: float
    dt: float
    iterations: int
    ratios: list
    certified: bool


@dataclass
class SolutionTrajectory:
    times: list
    states: list
    sup_norms: list
    status: Status = Status.REACHED_HORIZON
    t_estimate: Optional[float] = None
    bracket: Optional[tuple] = None
    windows: list = field(default_factory=list)
    message: str = ""

    def append(self, t: float, g: GridFunction):
        self.times.append(float(t))
        self.states.append(g)
        self.sup_norms.append(g.sup_norm)

    @property
    def final_time(self) -> float:
        return self.times[-1]

    @property
    def max_contraction(self) -> float:
        r = [x for w in self.windows if w.certified for x in w.ratios]
        return max(r) if r else 0.0

    def values(self) -> np.ndarray:
        return np.stack([g.values for g in self.states])


# Picard iteration ---------------------------------------------------------------------


def picard_step(states: list, dt: float, pd: ProblemData, backend: SemigroupBackend,
                t0: float = 0.0) -> list:
    """One application of the discrete Duhamel map on a uniform window.

    ``states[0]`` is the window datum and stays fixed; ``states[k]`` is the
    current iterate at ``t0 + k*dt``.
    """
    out = [states[0]]
    beta = pd.state_beta
    for k in range(len(states) - 1):
        mid = 0.5 * (states[k].values + states[k + 1].values)
        F = _grid(pd.spec, pd.nonlinearity(mid), beta)
        try:
            lin = backend.apply(out[k], dt)
            src = backend.apply(F, 0.5 * dt)
        except BackendError as exc:
            raise BackendError(f"at t={t0 + k * dt:.6g}: {exc}") from exc
        out.append(_grid(pd.spec, lin.values + dt * src.values, beta))
    return out


def _grid(spec, values, beta):
    return GridFunction(spec, values, GridFunction.fit_tail(spec, values, beta))


def _sup_dist(a: list, b: list) -> float:
    return max(float(np.max(np.abs(x.values - y.values))) for x, y in zip(a, b))


def _solve_window(datum: GridFunction, n: int, dt: float, pd: ProblemData,
                  backend: SemigroupBackend, t0: float, tol: float, certified: bool):
    states = [datum] * (n + 1)
    dists = []
    for it in range(1, MAX_PICARD + 1):
        new = picard_step(states, dt, pd, backend, t0)
        d = _sup_dist(new, states)
        dists.append(d)
        states = new
        if d <= tol:
            break
    else:
        return states, WindowRecord(t0, n * dt, dt, MAX_PICARD, _ratios(dists, tol), certified), False
    return states, WindowRecord(t0, n * dt, dt, it, _ratios(dists, tol), certified), True


def _ratios(dists, tol):
    # ratios near the tolerance floor are dominated by rounding
    return [dists[i + 1] / dists[i] for i in range(len(dists) - 1)
            if dists[i + 1] > 100 * tol and dists[i] > 0]


def _dyadic_step(base: float, window: float) -> float:
    dt = base
    while dt > window:
        dt *= 0.5
    return dt


def solve(pd: ProblemData, horizon: float, blowup_threshold: float | None = None,
          backend: SemigroupBackend | None = None, dt: float = 0.25,
          substeps: int = 1, picard_tol: float = PICARD_TOL, exploratory: bool = False,
          resume: SolutionTrajectory | None = None,
          checkpoint: str | Path | None = None, checkpoint_every: int = 20,
          progress: Callable | None = None, bisect_steps: int = BISECT_STEPS) -> SolutionTrajectory:
    """March the mild solution to ``horizon`` in certified windows.

    ``dt`` is the base time step and every window is split into at least
    ``substeps`` steps, each a dyadic fraction of ``dt``; halving ``dt`` and
    doubling ``substeps`` halves every step of the run. ``exploratory=True``
    allows windows of length ``dt`` even beyond the certified time (flagged in
    the window record).
    """
    if not horizon > 0:
        raise ParameterError("horizon must be positive")
    if substeps < 1:
        raise ParameterError("substeps must be a positive integer")
    backend = SemigroupBackend(fp=pd.fp) if backend is None else backend
    if backend.fp.s != pd.s:
        backend = replace(backend, fp=replace(backend.fp, s=pd.s))
    delta0 = pd.delta
    threshold = BLOWUP_FACTOR * max(1.0, delta0) if blowup_threshold is None else blowup_threshold
    if threshold <= 10 * delta0:
        raise ParameterError("blow-up threshold must exceed 10 * delta")
    if resume is not None:
        traj = resume
        traj.status = Status.REACHED_HORIZON
        traj.message = ""
    else:
        traj = SolutionTrajectory([], [], [])
        traj.append(0.0, pd.u0)
    zero = pd.delta == 0.0
    n_windows = 0
    while traj.final_time < horizon * (1 - 1e-12):
        t0 = traj.final_time
        datum = traj.states[-1]
        if zero:
            traj.append(horizon, datum)
            break
        budget = local_existence_time(max(datum.sup_norm, pd.f.sup_norm), pd.p)
        remaining = horizon - t0
        window = min(budget.T_star, remaining)
        certified = True
        if exploratory and window < min(dt, remaining):
            window, certified = min(dt, remaining), False
        step = _dyadic_step(dt, window / substeps)
        n = max(1, int(math.floor(window / step * (1 + 1e-12))))
        if window >= remaining * (1 - 1e-12):
            # last window: land exactly on the horizon
            n = max(1, math.ceil(remaining / step - 1e-9))
            step = remaining / n
        tol = picard_tol * max(1.0, budget.delta)
        states, rec, ok = _solve_window(datum, n, step, pd, backend, t0, tol, certified)
        traj.windows.append(rec)
        if not ok:
            traj.status = Status.STEP_FAILURE
            traj.message = (f"Picard iteration did not converge in window starting at t={t0:.6g} "
                            f"(length {n * step:.3g}, last ratios {rec.ratios[-3:]})")
            break
        crossed = next((k for k in range(1, n + 1) if states[k].sup_norm > threshold), None)
        stop = n if crossed is None else crossed
        for k in range(1, stop + 1):
            traj.append(t0 + k * step, states[k])
        if crossed is not None:
            a, b = _bisect_blowup(states[crossed - 1], t0 + (crossed - 1) * step, step, pd,
                                  backend, threshold, picard_tol, bisect_steps)
            traj.status = Status.BLOW_UP
            traj.t_estimate = 0.5 * (a + b)
            traj.bracket = (a, b + residual_blowup_time(threshold, pd.p))
            traj.message = (f"sup norm crossed {threshold:.3g} in [{a:.6g}, {b:.6g}]; the bracket "
                            f"adds the residual time of u' = u^p above the threshold")
            break
        n_windows += 1
        if checkpoint is not None and n_windows % checkpoint_every == 0:
            save_checkpoint(traj, checkpoint, pd)
        if progress is not None:
            progress(traj)
    if checkpoint is not None:
        save_checkpoint(traj, checkpoint, pd)
    return traj


def residual_blowup_time(level: float, p: float) -> float:
    """Time for ``u' = u^p`` to go from ``level`` to infinity."""
    return level ** (1.0 - p) / (p - 1.0)


def _bisect_blowup(state_a, a, length, pd, backend, threshold, picard_tol, steps):
    """Bracket the threshold crossing inside ``[a, a + length]`` by halving.

    The bracket stays a fixed fraction of the local step, so it shrinks with
    ``dt`` at first order while the scheme error shrinks at second order.
    """
    b = a + length
    for _ in range(steps):
        h = 0.5 * (b - a)
        tol = picard_tol * max(1.0, state_a.sup_norm)
        states, _, ok = _solve_window(state_a, 1, h, pd, backend, a, tol, False)
        if not ok:
            break
        if states[1].sup_norm > threshold:
            b = a + h
        else:
            a, state_a = a + h, states[1]
    return a, b


# checkpoints ----------------------------------------------------------------------------


def save_checkpoint(traj: SolutionTrajectory, directory, pd: ProblemData | None = None) -> Path:
    """``meta.json`` plus ``states.npy`` (float64, shape ``(n_times, n_r, n_w)``)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    spec = traj.states[0].spec
    meta = {
        "times": traj.times,
        "sup_norms": traj.sup_norms,
        "status": traj.status.value,
        "t_estimate": traj.t_estimate,
        "bracket": list(traj.bracket) if traj.bracket else None,
        "message": traj.message,
        "r_nodes": spec.r_nodes.tolist(),
        "w_nodes": spec.w_nodes.tolist(),
        "N": spec.gp.N,
        "gauge": spec.gp.gauge.value,
        "tail_beta": [g.tail.beta for g in traj.states],
        "windows": [vars(w) for w in traj.windows],
    }
    if pd is not None:
        meta["problem"] = {"p": pd.p, "s": pd.s, "state_beta": pd.state_beta}
    tmp = d / "states.npy.tmp"
    with open(tmp, "wb") as fh:
        np.save(fh, traj.values())
    tmp.replace(d / "states.npy")
    (d / "meta.json").write_text(json.dumps(meta, indent=1))
    return d


def load_checkpoint(directory, gp: GroupParams | None = None) -> SolutionTrajectory:
    d = Path(directory)
    meta = json.loads((d / "meta.json").read_text())
    vals = np.load(d / "states.npy")
    if gp is None:
        from .group import Gauge
        gp = GroupParams(meta["N"], Gauge(meta["gauge"]))
    spec = GridSpec(np.array(meta["r_nodes"]), np.array(meta["w_nodes"]), gp)
    states = [GridFunction(spec, v, GridFunction.fit_tail(spec, v, b))
              for v, b in zip(vals, meta["tail_beta"])]
    traj = SolutionTrajectory(list(meta["times"]), states, list(meta["sup_norms"]),
                              Status(meta["status"]), meta["t_estimate"],
                              tuple(meta["bracket"]) if meta["bracket"] else None,
                              [WindowRecord(**w) for w in meta["windows"]], meta["message"])
    return traj


# weak formulation -----------------------------------------------------------------------


@dataclass
class SeparableTestFunction:
    """``phi(t, xi) = time(t) * space(xi)``; ``space`` acts on point arrays."""

    space: Callable
    time: Callable
    dtime: Callable


def weak_residual(traj: SolutionTrajectory, pd: ProblemData, test_functions: list,
                  fp: FracParams | None = None) -> list:
    """``|lhs - rhs|`` of the weak identity for each test function.

    lhs ``= -int int u (phi_t - (-Delta)^s phi)``, rhs ``= int int |u|^p phi +
    int u0 phi(0) + int int f phi``. Space integrals use the grid trapezoid
    weights, time integrals the trapezoid rule on the trajectory times, and
    ``(-Delta)^s phi`` comes from the singular quadrature, not from the MOL
    matrix.
    """
    fp = pd.fp if fp is None else fp
    times = np.asarray(traj.times)
    T = times[-1]
    spec = pd.spec
    qw = spec.quadrature_weights()
    pts = spec.node_points()
    U = traj.values()
    out = []
    for tf in test_functions:
        if abs(float(tf.time(T))) > 1e-12:
            raise ConstraintError("test function must vanish at the final time of the trajectory")
        psi = np.asarray(tf.space(pts), dtype=float).reshape(spec.shape)
        if not np.any(psi):
            out.append(0.0)
            continue
        Lpsi = np.asarray(frac_sublaplacian_many(tf.space, pts, fp, spec.gp, check=False).value,
                          dtype=float).reshape(spec.shape)
        a = np.array([float(tf.time(t)) for t in times])
        da = np.array([float(tf.dtime(t)) for t in times])
        u_psi = np.einsum("kij,ij->k", U, qw * psi)
        u_Lpsi = np.einsum("kij,ij->k", U, qw * Lpsi)
        nl_psi = np.einsum("kij,ij->k", np.abs(U) ** pd.p, qw * psi)
        f_psi = float(np.sum(qw * psi * pd.f.values))
        lhs = -np.trapezoid(u_psi * da - u_Lpsi * a, times)
        rhs = np.trapezoid(nl_psi * a, times) + float(np.sum(qw * psi * pd.u0.values)) * a[0] \
            + f_psi * np.trapezoid(a, times)
        out.append(float(abs(lhs - rhs)))
    return out


__all__ = ["ProblemData", "residual_blowup_time", "LocalExistenceBudget", "local_existence_time",
           "Status", "WindowRecord", "SolutionTrajectory", "picard_step", "solve", "save_checkpoint",
           "load_checkpoint", "SeparableTestFunction", "weak_residual", "TailModel"]
