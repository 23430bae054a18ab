"""Method-of-lines discretisation of ``(-Delta_H)^s`` on a cylindrical grid.

Row ``k`` of the operator matrix is the singular-integral rule of
:mod:`hfujita.fractional` evaluated at the node ``a_k = (r_k, 0, .., 0, w_k)``
with the function replaced by its grid interpolant. Offsets shorter than the
local cell size are replaced by the Taylor term ``K_inner * Delta_H u(a_k)``
with ``Delta_H`` discretised by finite differences in ``(r, w)``; the
bilinear interpolant has a kink at each node, so resolving those offsets
would only add error. All off-diagonal entries of ``-L`` are then
nonnegative, so explicit Euler with ``h * max diag(L) <= 1`` preserves
positivity and never increases the sup-norm.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError, StabilityError
from .fractional import FracParams, operator_rule
from .grid import GridFunction, GridSpec, split_points, tail_factor
from .group import mul
from .measure import angular_rule

STABILITY_SAFETY = 0.5
SUP_GROWTH_LIMIT = 0.05
TAYLOR_LENGTH = 4.0


def mol_frac_params(spec: GridSpec, fp: FracParams) -> FracParams:
    """Coarser rule whose innermost annulus sits below the finest grid step."""
    rho0 = min(float(spec.r_nodes[1]), math.sqrt(float(np.min(np.diff(spec.w_nodes)))))
    levels = max(1, int(math.ceil(math.log2(fp.near_radius / rho0))))
    return replace(fp, inner_levels=levels, order=6, n_psi=16, n_dirs=24, outer_ratio=2.0)


def local_taylor_levels(spec: GridSpec, rule_fp: FracParams,
                        taylor_length: float = TAYLOR_LENGTH) -> np.ndarray:
    """Per node, how many inner annuli are replaced by the Taylor term.

    With cell size ``h = min(dr, sqrt(dw))`` the interpolation error of the
    annuli just outside radius ``rho`` is ``O(h^2 rho^{-2s})`` while the
    Taylor remainder inside is ``O(rho^{4-2s})``; ``rho ~ sqrt(h * taylor_length)``
    balances the two. ``taylor_length = 0`` cuts at one cell.
    """
    r, w = spec.r_nodes, spec.w_nodes
    dr = np.diff(r)
    dr = np.minimum(np.concatenate([dr, dr[-1:]]), np.concatenate([dr[:1], dr]))
    dw = np.diff(w)
    dw = np.minimum(np.concatenate([dw, dw[-1:]]), np.concatenate([dw[:1], dw]))
    scale = np.minimum(dr[:, None], np.sqrt(dw)[None, :])
    scale = np.maximum(scale, np.sqrt(scale * taylor_length))
    lev = np.floor(np.log2(scale / rule_fp.inner_radius)).astype(int)
    return np.clip(lev, 0, rule_fp.inner_levels).ravel()


def fd_sub_laplacian(spec: GridSpec) -> np.ndarray:
    """Finite-difference ``Delta_H`` for rotation-invariant data.

    ``U_rr + (2N-1)/r U_r + 4 r^2 U_ww`` with the even reflection ``2N U_rr``
    at ``r = 0``. Rows of nodes on the box boundary are left empty.
    """
    r, w = spec.r_nodes, spec.w_nodes
    nr, nw = r.size, w.size
    n2 = spec.gp.N
    D = np.zeros((nr * nw, nr * nw))
    for i in range(nr - 1):
        for j in range(1, nw - 1):
            k = i * nw + j
            if i == 0:
                h = r[1]
                c = 2 * n2 * 2.0 / h ** 2
                D[k, nw + j] += c
                D[k, k] -= c
                continue
            hm, hp = r[i] - r[i - 1], r[i + 1] - r[i]
            cm = 2.0 / (hm * (hm + hp))
            cp = 2.0 / (hp * (hm + hp))
            g1 = (2 * n2 - 1) / r[i]
            # three-point U_r is second order; fall back to a forward
            # difference if it would make the left weight negative
            lm, lp = -hp / (hm * (hm + hp)), hm / (hp * (hm + hp))
            if cm + g1 * lm >= 0:
                D[k, k - nw] += cm + g1 * lm
                D[k, k + nw] += cp + g1 * lp
                D[k, k] -= cm + cp + g1 * (lm + lp)
            else:
                cf = g1 / hp
                D[k, k - nw] += cm
                D[k, k + nw] += cp + cf
                D[k, k] -= cm + cp + cf
            gm, gp_ = w[j] - w[j - 1], w[j + 1] - w[j]
            a = 4.0 * r[i] ** 2
            dm = a * 2.0 / (gm * (gm + gp_))
            dp = a * 2.0 / (gp_ * (gm + gp_))
            D[k, k - 1] += dm
            D[k, k + 1] += dp
            D[k, k] -= dm + dp
    return D


@dataclass(eq=False)
class MolOperator:
    spec: GridSpec
    fp: FracParams
    beta: float
    matrix: np.ndarray
    spectral_bound: float
    max_step: float
    _powers: dict = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def euler_matrix(self, h: float) -> np.ndarray:
        return np.eye(self.n) - h * self.matrix

    def propagator(self, t: float, steps: int) -> np.ndarray:
        """``(I - (t/steps) L)^steps``, cached; ``steps`` is any positive integer."""
        key = (float(t), int(steps))
        if self._powers is None:
            self._powers = {}
        if key not in self._powers:
            h = t / steps
            _check_step(self, h)
            self._powers[key] = _matrix_power(self.euler_matrix(h), steps)
        return self._powers[key]

    def apply(self, values: np.ndarray, t: float, steps: int) -> np.ndarray:
        v = np.asarray(values, dtype=float).ravel()
        h = t / steps
        _check_step(self, h)
        key = (float(t), int(steps))
        if self._powers and key in self._powers:
            return self._powers[key] @ v
        # n matvecs cost one matrix product
        if steps < self.n:
            M = self.euler_matrix(h)
            for _ in range(steps):
                v = M @ v
            return v
        return self.propagator(t, steps) @ v


def _check_step(op: MolOperator, h: float):
    if h > op.max_step * (1 + 1e-12):
        raise StabilityError(
            f"explicit step {h:.3e} exceeds the stability bound {op.max_step:.3e}; "
            f"use at least {math.ceil(h / op.max_step)}x more steps")


def _matrix_power(M: np.ndarray, k: int) -> np.ndarray:
    result = None
    base = M
    while k:
        if k & 1:
            result = base.copy() if result is None else result @ base
        k >>= 1
        if k:
            base = base @ base
    return result


def _power_iteration(L: np.ndarray, iters: int = 200, seed: int = 0) -> float:
    v = np.random.default_rng(seed).standard_normal(L.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        wv = L @ v
        nrm = np.linalg.norm(wv)
        if nrm == 0:
            return 0.0
        v = wv / nrm
        if abs(nrm - lam) <= 1e-6 * nrm:
            lam = nrm
            break
        lam = nrm
    return float(lam)


_CACHE: "weakref.WeakKeyDictionary[GridSpec, dict]" = weakref.WeakKeyDictionary()


def assemble_operator(spec: GridSpec, fp: FracParams, beta: float, rule_fp: FracParams | None = None,
                      chunk_nodes: int = 32, taylor_length: float = TAYLOR_LENGTH) -> MolOperator:
    """Dense matrix ``L`` with ``(L U)_k ~ (-Delta_H)^s u(a_k)``; cached per grid."""
    rule_fp = mol_frac_params(spec, fp) if rule_fp is None else rule_fp
    per_spec = _CACHE.setdefault(spec, {})
    key = (rule_fp, float(beta), float(taylor_length))
    if key in per_spec:
        return per_spec[key]
    gp = spec.gp
    rule = operator_rule(rule_fp, gp)
    nodes = spec.node_points()
    n = nodes.shape[0]
    K = rule.points.shape[0]
    n_ang = angular_rule(gp.N, gp.gauge, rule_fp.n_psi, rule_fp.n_dirs).points.shape[0]
    ring = slice(K - n_ang * rule_fp.order, K)
    n_ring = 2 * (K - ring.start)
    annulus = np.arange(K) // (n_ang * rule_fp.order)
    skip = local_taylor_levels(spec, rule_fp, taylor_length)
    kept = np.zeros(n)
    tail_fac = rule.kernel_mass * rule_fp.far_radius ** (-2 * rule_fp.s) / (2 * rule_fp.s)
    P = np.zeros((n, n))
    for k0 in range(0, n, chunk_nodes):
        a = nodes[k0:k0 + chunk_nodes]
        m = a.shape[0]
        for sign in (1.0, -1.0):
            pts = mul(a[:, None, :], sign * rule.points[None, :, :])
            idx, wts, inside, rc, wc = spec.interp_weights(pts)
            r, w = split_points(pts)
            wts = wts * tail_factor(r, w, rc, wc, inside, beta)[..., None]
            qw = np.broadcast_to(rule.weights[None, :, None], wts.shape).copy()
            qw[annulus[None, :] < skip[k0:k0 + m, None]] = 0.0
            kept[k0:k0 + m] = qw[:, :, 0].sum(axis=1)
            # far field beyond far_radius: modelled by the outermost-ring mean
            qw[:, ring, :] += 2.0 * tail_fac / n_ring
            rows = np.broadcast_to(np.arange(m)[:, None, None], idx.shape)
            P[k0:k0 + m] += np.bincount((rows * n + idx).ravel(), (qw * wts).ravel(),
                                        minlength=m * n).reshape(m, n)
    taylor = rule.inner_coeff * 2.0 ** ((2 - 2 * rule_fp.s) * skip)
    A = P + taylor[:, None] * fd_sub_laplacian(spec)
    A[np.diag_indices(n)] -= 2.0 * (kept + tail_fac)
    off = A.copy()
    off[np.diag_indices(n)] = 0.0
    if off.min() < -1e-12 * np.abs(A).max():
        raise ParameterError("assembled off-diagonal weights are negative; positivity would fail")
    L = -0.5 * rule_fp.c_Ns * A
    lam = _power_iteration(L)
    dmax = float(np.max(np.diag(L)))
    max_step = STABILITY_SAFETY / max(lam, dmax)
    op = MolOperator(spec, rule_fp, float(beta), L, lam, max_step)
    per_spec[key] = op
    return op


def stable_steps(op: MolOperator, t: float, power_of_two: bool = True) -> int:
    n = max(1, math.ceil(t / op.max_step))
    if power_of_two:
        n = 1 << (n - 1).bit_length()
    return n


def semigroup_apply_mol(g: GridFunction, t: float, fp: FracParams = FracParams(),
                        steps: int | None = None, rule_fp: FracParams | None = None) -> GridFunction:
    """``e^{-t(-Delta)^s} g`` by explicit Euler on the assembled operator.

    ``steps`` defaults to the smallest power of two meeting the stability
    bound. Raises :class:`StabilityError` if the step is too large or the
    sup-norm grows by more than 5%.
    """
    if not t > 0:
        raise ParameterError(f"t must be positive, got {t}")
    op = assemble_operator(g.spec, fp, g.tail.beta, rule_fp)
    steps = stable_steps(op, t) if steps is None else int(steps)
    if steps < 1:
        raise ParameterError("steps must be a positive integer")
    out = op.apply(g.values, t, steps).reshape(g.spec.shape)
    sup_in = g.sup_norm
    if np.max(np.abs(out)) > (1 + SUP_GROWTH_LIMIT) * sup_in + 1e-300:
        raise StabilityError("sup-norm grew by more than 5%; reduce the time step")
    return g.with_values(out)
