"""Rotation-invariant functions sampled on a cylindrical ``(|z|, w)`` grid.

All experiment data depend on a point only through ``r = |z|`` and ``w``, so a
function on H^N is stored as a matrix over ``r_nodes x w_nodes``. Inside the
box values are bilinear in ``(r, w)``. Outside, the value at the clamped point
is damped by ``((1 + d_c) / (1 + d))**beta`` where ``d`` is the gauge; this
keeps the map from node values to point values linear and nonnegative and
respects the tail bound ``|u| <= A (1+d)^{-beta}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import kernels
from .errors import DimensionError, ParameterError
from .group import GroupParams


@dataclass(frozen=True)
class TailModel:
    """``|u(xi)| <= A * (1 + d(xi))**(-beta)`` outside the grid box."""

    A: float
    beta: float

    def __call__(self, d):
        return self.A * (1.0 + np.asarray(d, dtype=float)) ** (-self.beta)


def geometric_r_nodes(R: float, n: int, h0: float | None = None) -> np.ndarray:
    """``0`` followed by ``n-1`` geometrically spaced nodes ending at ``R``."""
    if n < 3:
        raise ParameterError("need at least 3 radial nodes")
    h0 = R / (4.0 * (n - 1)) if h0 is None else h0
    if h0 >= R:
        raise ParameterError("first radial step must be below R")
    return np.concatenate([[0.0], np.geomspace(h0, R, n - 1)])


def stretched_w_nodes(W: float, n: int, stretch: float = 4.0) -> np.ndarray:
    """Symmetric nodes on ``[-W, W]``, clustered near 0 by a sinh map.

    ``stretch = 0`` gives uniform spacing.
    """
    if n < 3 or n % 2 == 0:
        raise ParameterError("need an odd number (>= 3) of vertical nodes")
    v = np.linspace(-1.0, 1.0, n)
    if stretch <= 0:
        return W * v
    return W * np.sinh(stretch * v) / math.sinh(stretch)


def radial_gauge(r, w):
    """Gauge of a point from ``(|z|, w)``; valid for N=1 or the standard gauge."""
    return (np.asarray(r, float) ** 4 + np.asarray(w, float) ** 2) ** 0.25


def split_points(pts: np.ndarray):
    pts = np.asarray(pts, dtype=float)
    n = (pts.shape[-1] - 1) // 2
    r = np.sqrt(np.sum(pts[..., :2 * n] ** 2, axis=-1))
    return r, pts[..., 2 * n]


@dataclass(frozen=True, eq=False)
class GridSpec:
    r_nodes: np.ndarray
    w_nodes: np.ndarray
    gp: GroupParams = GroupParams()

    def __post_init__(self):
        r = np.asarray(self.r_nodes, dtype=float)
        w = np.asarray(self.w_nodes, dtype=float)
        if r.ndim != 1 or w.ndim != 1 or r.size < 2 or w.size < 2:
            raise DimensionError("grid axes must be 1-D with at least two nodes")
        if r[0] != 0.0:
            raise ParameterError("r_nodes must start at 0")
        if np.any(np.diff(r) <= 0) or np.any(np.diff(w) <= 0):
            raise ParameterError("grid nodes must be strictly increasing")
        if not self.gp.radial_symmetric:
            raise ParameterError("cylindrical grids need N=1 or the standard gauge")
        object.__setattr__(self, "r_nodes", r)
        object.__setattr__(self, "w_nodes", w)

    @classmethod
    def build(cls, R: float, n_r: int = 30, n_w: int = 61, gp: GroupParams = GroupParams(),
              stretch: float = 4.0, h0: float | None = None) -> "GridSpec":
        """Grid covering the gauge ball of radius ``R`` (``W = R**2``)."""
        return cls(geometric_r_nodes(R, n_r, h0), stretched_w_nodes(R * R, n_w, stretch), gp)

    @property
    def shape(self):
        return (self.r_nodes.size, self.w_nodes.size)

    @property
    def size(self) -> int:
        return self.r_nodes.size * self.w_nodes.size

    @property
    def radius(self) -> float:
        """Largest gauge radius whose ball lies inside the grid box."""
        return float(min(self.r_nodes[-1], math.sqrt(min(-self.w_nodes[0], self.w_nodes[-1]))))

    def mesh(self):
        return np.meshgrid(self.r_nodes, self.w_nodes, indexing="ij")

    def gauge(self) -> np.ndarray:
        rr, ww = self.mesh()
        return radial_gauge(rr, ww)

    def node_points(self) -> np.ndarray:
        """One representative point per node, ``(r, 0, ..., 0, w)``."""
        rr, ww = self.mesh()
        pts = np.zeros(self.shape + (self.gp.dim,))
        pts[..., 0] = rr
        pts[..., -1] = ww
        return pts.reshape(-1, self.gp.dim)

    def boundary_mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        m[-1, :] = True
        m[:, 0] = True
        m[:, -1] = True
        return m

    def interp_weights(self, pts):
        """Linear map from node values to values at ``pts``.

        Returns ``(idx, wts)`` of shape ``(..., 4)`` into the flattened node
        array; all weights are nonnegative.
        """
        r, w = split_points(pts)
        i, j, fr, fw, inside, rc, wc = kernels.bilinear_locate(self.r_nodes, self.w_nodes,
                                                               r.ravel(), w.ravel())
        nw = self.w_nodes.size
        idx = np.stack([i * nw + j, i * nw + j + 1, (i + 1) * nw + j, (i + 1) * nw + j + 1], axis=-1)
        wts = np.stack([(1 - fr) * (1 - fw), (1 - fr) * fw, fr * (1 - fw), fr * fw], axis=-1)
        return idx.reshape(r.shape + (4,)), wts.reshape(r.shape + (4,)), inside.reshape(r.shape), \
            rc.reshape(r.shape), wc.reshape(r.shape)

    def quadrature_weights(self) -> np.ndarray:
        """Trapezoid weights for ``int u d(xi)`` over the grid box.

        The Haar measure in ``(r, w)`` is ``|S^{2N-1}| r^{2N-1} dr dw``.
        """
        n = self.gp.N
        area = 2.0 * math.pi ** n / math.gamma(n)
        wr = _trapz_weights(self.r_nodes) * self.r_nodes ** (2 * n - 1) * area
        ww = _trapz_weights(self.w_nodes)
        return np.outer(wr, ww)


def _trapz_weights(x: np.ndarray) -> np.ndarray:
    w = np.zeros_like(x)
    dx = np.diff(x)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    return w


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Function on H^N sampled on a :class:`GridSpec` with an analytic tail."""

    spec: GridSpec
    values: np.ndarray
    tail: TailModel
    rotation_invariant: bool = field(default=True)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.spec.shape:
            raise DimensionError(f"values shape {v.shape} does not match grid {self.spec.shape}")
        if not np.all(np.isfinite(v)):
            raise ParameterError("grid values must be finite")
        bm = self.spec.boundary_mask()
        lim = self.tail(self.spec.gauge()[bm])
        if np.any(np.abs(v[bm]) > lim * (1 + 1e-9) + 1e-300):
            raise ParameterError("boundary values exceed the tail bound")
        object.__setattr__(self, "values", v)

    # construction -------------------------------------------------------

    @classmethod
    def from_function(cls, func: Callable, spec: GridSpec, beta: float,
                      A: float | None = None) -> "GridFunction":
        """Sample ``func(r, w)`` and fit the smallest admissible tail amplitude."""
        rr, ww = spec.mesh()
        vals = np.asarray(func(rr, ww), dtype=float) * np.ones(spec.shape)
        return cls(spec, vals, cls.fit_tail(spec, vals, beta) if A is None else TailModel(A, beta))

    @classmethod
    def from_radial(cls, g: Callable, spec: GridSpec, beta: float,
                    A: float | None = None) -> "GridFunction":
        """Sample a gauge-radial profile ``g(d)``."""
        return cls.from_function(lambda r, w: g(radial_gauge(r, w)), spec, beta, A)

    @classmethod
    def zeros(cls, spec: GridSpec, beta: float = 1.0) -> "GridFunction":
        return cls(spec, np.zeros(spec.shape), TailModel(0.0, beta))

    @staticmethod
    def fit_tail(spec: GridSpec, values: np.ndarray, beta: float) -> TailModel:
        """Smallest ``A`` with ``|u| <= A (1+d)^{-beta}`` on the boundary nodes."""
        bm = spec.boundary_mask()
        A = float(np.max(np.abs(values[bm]) * (1.0 + spec.gauge()[bm]) ** beta))
        return TailModel(A, beta)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        values = np.asarray(values, dtype=float).reshape(self.spec.shape)
        return replace(self, values=values, tail=self.fit_tail(self.spec, values, self.tail.beta))

    # evaluation ---------------------------------------------------------

    def __call__(self, pts):
        idx, wts, inside, rc, wc = self.spec.interp_weights(pts)
        r, w = split_points(pts)
        flat = self.values.ravel()
        out = np.sum(flat[idx] * wts, axis=-1)
        return out * tail_factor(r, w, rc, wc, inside, self.tail.beta)

    @property
    def sup_norm(self) -> float:
        # the extrapolation only damps boundary values, so nodes carry the sup
        return float(np.max(np.abs(self.values)))

    def integral(self) -> float:
        return float(np.sum(self.spec.quadrature_weights() * self.values))

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def _combine(self, other, op):
        if isinstance(other, GridFunction):
            _same_grid(self, other)
            beta = min(self.tail.beta, other.tail.beta)
            v = op(self.values, other.values)
            return GridFunction(self.spec, v, self.fit_tail(self.spec, v, beta))
        return self.with_values(op(self.values, other))

    def __mul__(self, c: float):
        return GridFunction(self.spec, self.values * c, TailModel(self.tail.A * abs(c), self.tail.beta))

    __rmul__ = __mul__


def tail_factor(r, w, rc, wc, inside, beta):
    d = radial_gauge(r, w)
    dc = radial_gauge(rc, wc)
    fac = np.where(inside, 1.0, ((1.0 + dc) / (1.0 + d)) ** beta)
    return fac


def _same_grid(a: GridFunction, b: GridFunction):
    if a.spec is b.spec:
        return
    if not (np.array_equal(a.spec.r_nodes, b.spec.r_nodes)
            and np.array_equal(a.spec.w_nodes, b.spec.w_nodes)):
        raise DimensionError("grid functions live on different grids")


__all__ = ["TailModel", "GridSpec", "GridFunction", "geometric_r_nodes", "stretched_w_nodes",
           "radial_gauge", "split_points", "tail_factor"]
