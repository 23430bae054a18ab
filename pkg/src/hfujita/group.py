"""Group law, dilations and gauges on the Heisenberg group H^N.

Points are stored as flat arrays ``(x_1..x_N, y_1..y_N, w)``; every batch
function accepts arrays of shape ``(..., 2N+1)``. :class:`GroupPoint` wraps a
single point for the scalar API.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParameterError


class Gauge(enum.Enum):
    """Which quartic horizontal term enters the homogeneous norm.

    ``PAPER`` squares each pair separately, ``sum_i (x_i^2+y_i^2)^2``;
    ``STANDARD`` squares the total, ``(sum_i x_i^2+y_i^2)^2``. They coincide
    for N=1.
    """

    PAPER = "paper"
    STANDARD = "standard"


@dataclass(frozen=True)
class GroupParams:
    N: int = 1
    gauge: Gauge = Gauge.PAPER

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ParameterError(f"N must be a positive integer, got {self.N}")
        if not isinstance(self.gauge, Gauge):
            object.__setattr__(self, "gauge", Gauge(self.gauge))

    @property
    def Q(self) -> int:
        return 2 * self.N + 2

    @property
    def dim(self) -> int:
        return 2 * self.N + 1

    @property
    def radial_symmetric(self) -> bool:
        """True when the gauge is invariant under the full U(N) rotation."""
        return self.N == 1 or self.gauge is Gauge.STANDARD


@dataclass(frozen=True)
class GroupPoint:
    x: np.ndarray
    y: np.ndarray
    w: float
    _flat: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if x.ndim != 1 or x.shape != y.shape:
            raise DimensionError(f"x and y must be vectors of equal length, got {x.shape}, {y.shape}")
        flat = np.concatenate([x, y, [float(self.w)]])
        if not np.all(np.isfinite(flat)):
            raise ParameterError("GroupPoint components must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "w", float(self.w))
        object.__setattr__(self, "_flat", flat)

    @property
    def N(self) -> int:
        return self.x.size

    def as_array(self) -> np.ndarray:
        return self._flat.copy()

    @classmethod
    def from_array(cls, arr) -> "GroupPoint":
        arr = np.asarray(arr, dtype=float).ravel()
        if arr.size % 2 != 1:
            raise DimensionError(f"flat point must have odd length 2N+1, got {arr.size}")
        n = arr.size // 2
        return cls(arr[:n], arr[n:2 * n], arr[2 * n])

    @classmethod
    def identity(cls, N: int = 1) -> "GroupPoint":
        return cls(np.zeros(N), np.zeros(N), 0.0)

    def __matmul__(self, other: "GroupPoint") -> "GroupPoint":
        return group_mul(self, other)

    def __eq__(self, other):
        return isinstance(other, GroupPoint) and np.array_equal(self._flat, other._flat)

    def __hash__(self):
        return hash(self._flat.tobytes())


def _dim_of(arr: np.ndarray) -> int:
    d = arr.shape[-1]
    if d % 2 != 1:
        raise DimensionError(f"last axis must have length 2N+1, got {d}")
    return d // 2


def mul(a, b) -> np.ndarray:
    """Batch group law ``a o b`` on flat arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] != b.shape[-1]:
        raise DimensionError(f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}")
    n = _dim_of(a)
    out = np.asarray(a + b, dtype=float)
    twist = np.sum(a[..., n:2 * n] * b[..., :n] - a[..., :n] * b[..., n:2 * n], axis=-1)
    out[..., 2 * n] += 2.0 * twist
    return out


def inv(a) -> np.ndarray:
    return -np.asarray(a, dtype=float)


def dil(lam, a) -> np.ndarray:
    """Anisotropic dilation: horizontal by ``lam``, vertical by ``lam**2``."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ParameterError(f"dilation factor must be positive, got {lam}")
    a = np.asarray(a, dtype=float)
    n = _dim_of(a)
    out = a * lam[..., None] if lam.ndim else a * lam
    out[..., 2 * n] = out[..., 2 * n] * lam
    return out


def norm(a, gauge: Gauge = Gauge.PAPER) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    n = _dim_of(a)
    sq = a[..., :n] ** 2 + a[..., n:2 * n] ** 2
    if gauge is Gauge.PAPER:
        quartic = np.sum(sq * sq, axis=-1)
    else:
        quartic = np.sum(sq, axis=-1) ** 2
    return (quartic + a[..., 2 * n] ** 2) ** 0.25


def dist(a, b, gauge: Gauge = Gauge.PAPER) -> np.ndarray:
    """Left-invariant quasi-distance ``||b^{-1} o a||``."""
    return norm(mul(inv(b), a), gauge)


# scalar API ---------------------------------------------------------------


def _check_same(a: GroupPoint, b: GroupPoint):
    if a.N != b.N:
        raise DimensionError(f"points live in H^{a.N} and H^{b.N}")


def group_mul(a: GroupPoint, b: GroupPoint) -> GroupPoint:
    _check_same(a, b)
    return GroupPoint.from_array(mul(a.as_array(), b.as_array()))


def inverse(a: GroupPoint) -> GroupPoint:
    return GroupPoint.from_array(inv(a.as_array()))


def dilate(lam: float, a: GroupPoint) -> GroupPoint:
    if not lam > 0:
        raise ParameterError(f"dilation factor must be positive, got {lam}")
    return GroupPoint.from_array(dil(lam, a.as_array()))


def gauge_norm(a: GroupPoint, params: GroupParams | None = None) -> float:
    gauge = params.gauge if params is not None else Gauge.PAPER
    return float(norm(a.as_array(), gauge))


def gauge_distance(a: GroupPoint, b: GroupPoint, params: GroupParams | None = None) -> float:
    _check_same(a, b)
    gauge = params.gauge if params is not None else Gauge.PAPER
    return float(dist(a.as_array(), b.as_array(), gauge))


def in_ball(center: GroupPoint, R: float, a: GroupPoint, params: GroupParams | None = None) -> bool:
    """Open Korányi ball membership; the boundary sphere is excluded."""
    if not R > 0:
        raise ParameterError(f"ball radius must be positive, got {R}")
    return gauge_distance(a, center, params) < R


def pseudo_triangle_constant(params: GroupParams, n_samples: int = 200_000, seed: int = 0,
                             spread: float = 2.0) -> float:
    """Empirical sup of d(a,b) / (d(a,m) + d(m,b)) over random triples."""
    rng = np.random.default_rng(seed)
    d = params.dim
    pts = rng.standard_normal((3, n_samples, d)) * spread
    # vertical coordinate on the quadratic scale so all gauge shapes are probed
    pts[..., -1] *= spread
    a, b, m = pts
    num = dist(a, b, params.gauge)
    den = dist(a, m, params.gauge) + dist(m, b, params.gauge)
    ok = den > 1e-12
    return float(np.max(num[ok] / den[ok]))
