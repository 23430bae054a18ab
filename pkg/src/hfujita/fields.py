"""Left-invariant horizontal vector fields and the local sub-Laplacian.

Functions on H^N are vectorised callables ``u(pts)`` acting on arrays of shape
``(..., 2N+1)``. A :class:`SmoothFunction` may additionally carry analytic
gradient and Hessian callables; without them central finite differences are
used.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .group import GroupPoint

FD_STEP = 1e-5
FD_STEP_HESS = 1e-4


class Field(enum.Enum):
    X = "X"
    Y = "Y"
    W = "W"


class SubLaplacianForm(enum.Enum):
    VECTOR_FIELD = "vector_field"
    EUCLIDEAN = "euclidean"


def _pts(a):
    if isinstance(a, GroupPoint):
        return a.as_array()
    return np.asarray(a, dtype=float)


def fd_gradient(u: Callable, p: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    d = p.shape[-1]
    h = step * (1.0 + np.abs(p))
    out = np.empty(p.shape)
    for j in range(d):
        e = np.zeros(d)
        e[j] = 1.0
        hj = h[..., j:j + 1]
        out[..., j] = (u(p + hj * e) - u(p - hj * e)) / (2.0 * h[..., j])
    return out


def fd_hessian(u: Callable, p: np.ndarray, step: float = FD_STEP_HESS) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    d = p.shape[-1]
    h = step * (1.0 + np.abs(p))
    out = np.empty(p.shape + (d,))
    u0 = u(p)
    eye = np.eye(d)
    for j in range(d):
        hj = h[..., j:j + 1]
        ej = hj * eye[j]
        out[..., j, j] = (u(p + ej) - 2.0 * u0 + u(p - ej)) / h[..., j] ** 2
        for k in range(j + 1, d):
            ek = h[..., k:k + 1] * eye[k]
            val = (u(p + ej + ek) - u(p + ej - ek) - u(p - ej + ek) + u(p - ej - ek)) \
                / (4.0 * h[..., j] * h[..., k])
            out[..., j, k] = val
            out[..., k, j] = val
    return out


@dataclass
class SmoothFunction:
    """Callable with an optional analytic derivative bundle."""

    func: Callable
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None

    def __call__(self, pts):
        return self.func(np.asarray(pts, dtype=float))

    def gradient(self, pts):
        pts = np.asarray(pts, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(pts), dtype=float)
        return fd_gradient(self.func, pts)

    def hessian(self, pts):
        pts = np.asarray(pts, dtype=float)
        if self.hess is not None:
            return np.asarray(self.hess(pts), dtype=float)
        if self.grad is not None:
            return _hessian_from_grad(self.grad, pts)
        return fd_hessian(self.func, pts)

    @classmethod
    def wrap(cls, u) -> "SmoothFunction":
        return u if isinstance(u, SmoothFunction) else cls(u)

    @classmethod
    def from_sympy(cls, expr, symbols) -> "SmoothFunction":
        """Build from a sympy expression in ``symbols = (x_1..x_N, y_1..y_N, w)``."""
        import sympy as sp

        d = len(symbols)
        grad_e = [sp.diff(expr, s) for s in symbols]
        hess_e = [[sp.diff(g, s) for s in symbols] for g in grad_e]
        f_l = sp.lambdify(symbols, expr, "numpy")
        g_l = [sp.lambdify(symbols, g, "numpy") for g in grad_e]
        h_l = [[sp.lambdify(symbols, h, "numpy") for h in row] for row in hess_e]

        def unpack(p):
            return [p[..., j] for j in range(d)]

        def f(p):
            return np.broadcast_to(f_l(*unpack(p)), p.shape[:-1]).astype(float)

        def g(p):
            cols = [np.broadcast_to(gl(*unpack(p)), p.shape[:-1]) for gl in g_l]
            return np.stack(cols, axis=-1).astype(float)

        def h(p):
            rows = [np.stack([np.broadcast_to(hl(*unpack(p)), p.shape[:-1]) for hl in row], axis=-1)
                    for row in h_l]
            return np.stack(rows, axis=-2).astype(float)

        return cls(f, g, h)


def _hessian_from_grad(grad, p, step=FD_STEP):
    d = p.shape[-1]
    h = step * (1.0 + np.abs(p))
    out = np.empty(p.shape + (d,))
    for j in range(d):
        e = np.zeros(d)
        e[j] = 1.0
        hj = h[..., j:j + 1]
        out[..., j, :] = (grad(p + hj * e) - grad(p - hj * e)) / (2.0 * hj)
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def _coefficients(field: Field, i: int, p: np.ndarray, n: int) -> np.ndarray:
    c = np.zeros(p.shape)
    if field is Field.X:
        c[..., i] = 1.0
        c[..., 2 * n] = 2.0 * p[..., n + i]
    elif field is Field.Y:
        c[..., n + i] = 1.0
        c[..., 2 * n] = -2.0 * p[..., i]
    else:
        c[..., 2 * n] = 1.0
    return c


def apply_field(field: Field, u, i: int = 0) -> SmoothFunction:
    """The function ``V u`` for ``V`` one of X_i, Y_i, W, with its gradient.

    The gradient of ``V u`` is assembled from the Hessian of ``u`` so that a
    second application stays exact when ``u`` carries analytic derivatives.
    """
    u = SmoothFunction.wrap(u)
    field = Field(field)

    def vu(p):
        n = (p.shape[-1] - 1) // 2
        return np.sum(_coefficients(field, i, p, n) * u.gradient(p), axis=-1)

    def grad_vu(p):
        n = (p.shape[-1] - 1) // 2
        c = _coefficients(field, i, p, n)
        g = np.einsum("...jk,...k->...j", u.hessian(p), c)
        du_w = u.gradient(p)[..., 2 * n]
        if field is Field.X:
            g[..., n + i] += 2.0 * du_w
        elif field is Field.Y:
            g[..., i] -= 2.0 * du_w
        return g

    return SmoothFunction(vu, grad_vu)


def vector_field_apply(field: Field, u, a, i: int = 0) -> float:
    """``(V u)(a)`` for ``V`` in {X_i, Y_i, W}; ``i`` is zero-based."""
    p = _pts(a)
    return float(apply_field(field, u, i)(p)) if p.ndim == 1 else apply_field(field, u, i)(p)


def commutator_apply(u, a, i: int = 0):
    """``(X_i Y_i - Y_i X_i) u`` at ``a``."""
    p = _pts(a)
    xy = apply_field(Field.X, apply_field(Field.Y, u, i), i)(p)
    yx = apply_field(Field.Y, apply_field(Field.X, u, i), i)(p)
    return xy - yx


def sub_laplacian(u, a, form: SubLaplacianForm = SubLaplacianForm.EUCLIDEAN):
    """Local sub-Laplacian ``sum_i X_i^2 + Y_i^2`` at ``a``."""
    u = SmoothFunction.wrap(u)
    p = _pts(a)
    n = (p.shape[-1] - 1) // 2
    form = SubLaplacianForm(form)
    if form is SubLaplacianForm.VECTOR_FIELD:
        total = 0.0
        for i in range(n):
            total = total + apply_field(Field.X, apply_field(Field.X, u, i), i)(p)
            total = total + apply_field(Field.Y, apply_field(Field.Y, u, i), i)(p)
        return total
    H = u.hessian(p)
    x = p[..., :n]
    y = p[..., n:2 * n]
    idx = np.arange(n)
    uxx = H[..., idx, idx]
    uyy = H[..., n + idx, n + idx]
    uxw = H[..., idx, 2 * n]
    uyw = H[..., n + idx, 2 * n]
    uww = H[..., 2 * n, 2 * n]
    return np.sum(uxx + uyy + 4.0 * y * uxw - 4.0 * x * uyw, axis=-1) \
        + 4.0 * np.sum(x ** 2 + y ** 2, axis=-1) * uww


@dataclass(frozen=True)
class CutoffProfile:
    """C^2 cutoff: 1 on [0,1], quintic smoothstep of ``2-r`` on [1,2], 0 beyond."""

    inner: float = 1.0
    outer: float = 2.0

    def _t(self, r):
        r = np.asarray(r, dtype=float)
        return np.clip((self.outer - r) / (self.outer - self.inner), 0.0, 1.0)

    def __call__(self, r):
        t = self._t(r)
        return t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)

    def derivative(self, r):
        t = self._t(r)
        return -30.0 * t * t * (1.0 - t) ** 2 / (self.outer - self.inner)

    def second_derivative(self, r):
        t = self._t(r)
        return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (self.outer - self.inner) ** 2
