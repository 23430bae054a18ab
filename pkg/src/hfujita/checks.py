"""Property suite for the group, the local sub-Laplacian and the fractional operator."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .fields import SmoothFunction, SubLaplacianForm, commutator_apply, sub_laplacian
from .fractional import FracParams, bump, frac_sublaplacian, frac_sublaplacian_many, \
    self_adjointness_defect
from .group import GroupParams, dil, dist, inv, mul, norm

DILATIONS = (0.5, 2.0, 4.0)
SA_DOMAIN = ([-1.0, -1.0, -1.0], [1.5, 1.0, 1.0])


def standard_bump_pair():
    """Unit bumps at the origin and at ``(0.5, 0, 0)``, with a box covering both."""
    return bump(radius=1.0), bump(center=[0.5, 0.0, 0.0], radius=1.0), SA_DOMAIN


def gaussian() -> SmoothFunction:
    g = lambda p: np.exp(-np.sum(p ** 2, axis=-1))
    return SmoothFunction(g, lambda p: -2.0 * p * g(p)[..., None])


def cubic_polynomial() -> SmoothFunction:
    """``x^3 y + x w^2 + y^2 w`` on H^1 with exact derivatives."""
    def f(p):
        x, y, w = p[..., 0], p[..., 1], p[..., 2]
        return x ** 3 * y + x * w ** 2 + y ** 2 * w

    def g(p):
        x, y, w = p[..., 0], p[..., 1], p[..., 2]
        return np.stack([3 * x ** 2 * y + w ** 2, x ** 3 + 2 * y * w, 2 * x * w + y ** 2], axis=-1)

    def h(p):
        x, y, w = p[..., 0], p[..., 1], p[..., 2]
        z = np.zeros_like(x)
        return np.stack([np.stack([6 * x * y, 3 * x ** 2, 2 * w], -1),
                         np.stack([3 * x ** 2, 2 * w, 2 * y], -1),
                         np.stack([2 * w, 2 * y, 2 * x + z], -1)], axis=-2)

    return SmoothFunction(f, g, h)


@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool
    runtime_s: float


@dataclass
class CheckSuite:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, value, tol, started):
        value = float(value)
        self.checks.append(Check(name, value, tol, bool(value <= tol), time.time() - started))

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [asdict(c) for c in self.checks]}


def group_checks(n_cases: int = 1000, seed: int = 0, gp: GroupParams = GroupParams()) -> CheckSuite:
    """Group-law identities on random points; values are max absolute errors."""
    rng = np.random.default_rng(seed)
    a, b, c = (rng.normal(size=(n_cases, gp.dim)) for _ in range(3))
    lam = rng.uniform(0.2, 5.0, size=n_cases)
    suite = CheckSuite()
    t = time.time()
    suite.add("associativity", np.max(np.abs(mul(mul(a, b), c) - mul(a, mul(b, c)))), 1e-12, t)
    t = time.time()
    suite.add("inverse", np.max(np.abs(mul(a, inv(a)))), 1e-12, t)
    t = time.time()
    suite.add("dilation_automorphism",
              np.max(np.abs(dil(lam, mul(a, b)) - mul(dil(lam, a), dil(lam, b)))), 1e-12, t)
    t = time.time()
    suite.add("gauge_homogeneity",
              np.max(np.abs(norm(dil(lam, a), gp.gauge) - lam * norm(a, gp.gauge)) / (1 + lam)), 1e-12, t)
    t = time.time()
    suite.add("gauge_symmetry", np.max(np.abs(norm(inv(a), gp.gauge) - norm(a, gp.gauge))), 1e-12, t)
    t = time.time()
    suite.add("left_invariance",
              np.max(np.abs(dist(mul(c, a), mul(c, b), gp.gauge) - dist(a, b, gp.gauge))), 1e-12, t)
    return suite


def operator_checks(fp: FracParams = FracParams(), sa_nodes: int = 12) -> CheckSuite:
    """Operator properties at N=1; values are errors or defects."""
    gp = GroupParams()
    suite = CheckSuite()
    a = np.array([0.3, 0.2, 0.1])
    t = time.time()
    const = SmoothFunction(lambda p: np.ones(p.shape[:-1]))
    suite.add("annihilates_constants", abs(frac_sublaplacian(const, a, fp, gp)), fp.quad_tol, t)
    g = gaussian()
    for lam in DILATIONS:
        t = time.time()
        scaled = SmoothFunction(lambda p, lam=lam: g(dil(lam, p)))
        lhs = frac_sublaplacian(scaled, a, fp, gp)
        rhs = lam ** (2 * fp.s) * frac_sublaplacian(g, dil(lam, a), fp, gp)
        suite.add(f"dilation_homogeneity_{lam:g}", abs(lhs - rhs) / abs(rhs), 5e-3, t)
    t = time.time()
    u, v, dom = standard_bump_pair()
    suite.add("self_adjointness", self_adjointness_defect(u, v, fp, gp, dom, sa_nodes), 1e-2, t)
    t = time.time()
    poly = cubic_polynomial()
    pts = np.random.default_rng(1).normal(size=(200, 3))
    forms = np.abs(sub_laplacian(poly, pts, SubLaplacianForm.VECTOR_FIELD)
                   - sub_laplacian(poly, pts, SubLaplacianForm.EUCLIDEAN))
    suite.add("sub_laplacian_forms", np.max(forms), 1e-10, t)
    t = time.time()
    bracket = np.abs(commutator_apply(poly, pts) + 4.0 * poly.gradient(pts)[..., 2])
    suite.add("bracket_identity", np.max(bracket), 1e-10, t)
    t = time.time()
    ev = frac_sublaplacian_many(g, np.zeros((1, 3)), fp, gp)
    suite.add("finite_at_origin", 0.0 if np.all(np.isfinite(ev.value)) else np.inf, 0.0, t)
    return suite


__all__ = ["Check", "CheckSuite", "group_checks", "operator_checks", "standard_bump_pair",
           "gaussian", "cubic_polynomial", "DILATIONS"]
