"""Constraint sets with fixed second and fourth power sums and their extremal points.

``A(alpha, beta)`` is the set of x in R^n with sum x_i^2 = alpha^2 and
sum x_i^4 = beta^4.  For a function Phi with convex fourth derivative the
Rademacher average E Phi(<x, eps>) is maximised on A at P+ = (a, b, ..., b)
and minimised at P- = (b, ..., b, a, 0, ..., 0).  This module builds those
points, the three-dimensional special points, the linear change of variables
onto a zero-sum hyperplane of R^4, and the scalar inequalities about |u|^p used to
establish the extremality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .moments import rademacher_moment_rows

Layout = Literal["plus", "minus"]

BOUNDARY_RTOL = 1e-12
NEWTON_MAX_ITER = 50
NEWTON_TOL = 1e-12


class InfeasibleSpec(ValueError):
    """The requested constraint set is empty."""


@dataclass(frozen=True)
class ConstraintSpec:
    alpha: float
    beta: float
    n: int

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def from_beta4(cls, alpha: float, beta4: float, n: int) -> "ConstraintSpec":
        if beta4 <= 0:
            raise ValueError("beta^4 must be positive")
        return cls(float(alpha), float(beta4) ** 0.25, n)

    @property
    def beta4(self) -> float:
        return self.beta**4

    @property
    def raw_ratio(self) -> float:
        return self.alpha**4 / self.beta4

    @property
    def feasible(self) -> bool:
        r = self.raw_ratio
        return 1.0 - BOUNDARY_RTOL <= r <= self.n * (1.0 + BOUNDARY_RTOL)

    @property
    def ratio(self) -> float:
        """alpha^4 / beta^4, clamped onto [1, n] within the boundary tolerance."""
        if not self.feasible:
            raise InfeasibleSpec(
                f"need beta^4 <= alpha^4 <= n beta^4; got alpha^4/beta^4 = {self.raw_ratio!r}, n = {self.n}"
            )
        return min(max(self.raw_ratio, 1.0), float(self.n))

    @property
    def gamma(self) -> float:
        """beta^4 / alpha^4, equal to 1/ratio."""
        return 1.0 / self.ratio


@dataclass(frozen=True)
class ExtremalConfig:
    """P+ = (big, small x (n-1)) or P- = (small x l, big, 0 x zeros)."""

    big: float
    small: float
    zeros: int
    layout: Layout
    n: int

    def vector(self) -> np.ndarray:
        if self.layout == "plus":
            return np.array([self.big] + [self.small] * (self.n - 1))
        repeated = self.n - 1 - self.zeros
        return np.array([self.small] * repeated + [self.big] + [0.0] * self.zeros)


def _sqrt0(v: float) -> float:
    return math.sqrt(max(v, 0.0))


def p_plus(spec: ConstraintSpec) -> ExtremalConfig:
    n = spec.n
    a2 = spec.alpha**2
    beta4 = a2 * a2 / spec.ratio
    root = _sqrt0(beta4 / ((n - 1) * n) - a2 * a2 / ((n - 1) * n * n))
    big2 = a2 / n + (n - 1) * root
    small2 = a2 / n - root
    return ExtremalConfig(_sqrt0(big2), _sqrt0(small2), 0, "plus", n)


def _snapped_integer(r: float) -> int | None:
    m = round(r)
    return m if abs(r - m) <= BOUNDARY_RTOL * r else None


def p_minus(spec: ConstraintSpec) -> ExtremalConfig:
    """The minimiser.  At integer alpha^4/beta^4 = m < n the point is
    (b, ..., b, 0, ..., 0) with m copies of b; it is reported with a = 0 in
    the "big" slot, so ``zeros`` = n - m - 1."""
    n = spec.n
    a2 = spec.alpha**2
    r = spec.ratio
    m = _snapped_integer(r)
    if m is not None and m < n:
        return ExtremalConfig(0.0, math.sqrt(a2 / m), n - m - 1, "minus", n)
    level = min(int(math.floor(r)), n - 1)
    beta4 = a2 * a2 / r
    root = _sqrt0(beta4 / (level * (level + 1)) - a2 * a2 / (level * (level + 1) ** 2))
    big2 = a2 / (level + 1) - level * root
    small2 = a2 / (level + 1) + root
    return ExtremalConfig(_sqrt0(big2), _sqrt0(small2), n - level - 1, "minus", n)


def special_point(gamma: float, branch: Layout) -> np.ndarray:
    """Representative (x >= y >= z >= 0) of the special point of A_gamma in R^3."""
    if not (1.0 / 3.0 - BOUNDARY_RTOL <= gamma <= 1.0 + BOUNDARY_RTOL):
        raise ValueError(f"gamma must lie in [1/3, 1], got {gamma!r}")
    gamma = min(max(gamma, 1.0 / 3.0), 1.0)
    d = _sqrt0(6.0 * gamma - 2.0)
    if branch == "plus":
        b = _sqrt0((2.0 - d) / 6.0)
        return np.array([_sqrt0((1.0 + d) / 3.0), b, b])
    if branch != "minus":
        raise ValueError(f"branch must be 'plus' or 'minus', got {branch!r}")
    if gamma <= 0.5:
        b = _sqrt0((2.0 + d) / 6.0)
        return np.array([b, b, _sqrt0((1.0 - d) / 3.0)])
    e = _sqrt0(2.0 * gamma - 1.0)
    return np.array([_sqrt0((1.0 + e) / 2.0), _sqrt0((1.0 - e) / 2.0), 0.0])


# --------------------------------------------------------------------------
# Change of variables R^3 -> H = {a + b + c + d = 0}
# --------------------------------------------------------------------------

LAMBDA = np.array(
    [
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ]
)
LAMBDA.setflags(write=False)


def lambda_transform(point: Sequence[float]) -> np.ndarray:
    x = np.asarray(point, dtype=float)
    if x.shape != (3,):
        raise ValueError("expected a point of R^3")
    return LAMBDA @ x


def lambda_inverse(q: Sequence[float], tol: float = 1e-12) -> np.ndarray:
    a, b, c, d = np.asarray(q, dtype=float)
    if abs(a + b + c + d) > tol * max(1.0, abs(a), abs(b), abs(c), abs(d)):
        raise ValueError(f"point {tuple(q)} is off the zero-sum hyperplane")
    return np.array([-(c + d) / 2.0, -(d + b) / 2.0, -(b + c) / 2.0])


def jacobian_matrix(q: Sequence[float]) -> np.ndarray:
    """Derivative of q -> (sum q, sum q^2, prod q)."""
    a, b, c, d = np.asarray(q, dtype=float)
    return np.array(
        [
            [1.0, 1.0, 1.0, 1.0],
            [2 * a, 2 * b, 2 * c, 2 * d],
            [b * c * d, c * d * a, d * a * b, a * b * c],
        ]
    )


def jacobian_rank(q: Sequence[float], tol: float = 1e-8) -> int:
    """Numerical rank: singular values above ``tol`` times the largest."""
    s = np.linalg.svd(jacobian_matrix(q), compute_uv=False)
    return int(np.sum(s > tol * s[0]))


def is_induced_special(q: Sequence[float], tol: float = 1e-12) -> bool:
    """True when two of |a|, |b|, |c|, |d| coincide (non-trivial stabiliser)."""
    m = np.sort(np.abs(np.asarray(q, dtype=float)))
    return bool(np.any(np.diff(m) <= tol * max(1.0, m[-1])))


# --------------------------------------------------------------------------
# Sampling A(alpha, beta)
# --------------------------------------------------------------------------


def _constraint_residual(x: np.ndarray, spec: ConstraintSpec) -> np.ndarray:
    a2 = spec.alpha**2
    beta4 = a2 * a2 / spec.ratio
    r2 = np.abs(np.sum(x * x, axis=-1) - a2) / a2
    r4 = np.abs(np.sum(x**4, axis=-1) - beta4) / beta4
    return np.maximum(r2, r4)


def _random_symmetries(points: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    m, n = points.shape
    signs = rng.choice([-1.0, 1.0], size=(m, n))
    perms = np.argsort(rng.random((m, n)), axis=1)
    return np.take_along_axis(points, perms, axis=1) * signs


def _sweep_three(spec: ConstraintSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    # fix the smallest coordinate z, solve x^2 + y^2 = s, x^4 + y^4 = f
    a2 = spec.alpha**2
    beta4 = a2 * a2 / spec.ratio
    z_hi = p_plus(spec).small
    z_lo = float(np.min(p_minus(spec).vector()))
    u = rng.uniform(z_lo**2, z_hi**2, size=count)
    s = a2 - u
    f = beta4 - u * u
    disc = np.sqrt(np.maximum(2.0 * f - s * s, 0.0))
    x = np.sqrt(np.maximum((s + disc) / 2.0, 0.0))
    y = np.sqrt(np.maximum((s - disc) / 2.0, 0.0))
    return np.column_stack([x, y, np.sqrt(u)])


def _newton_project(x: np.ndarray, spec: ConstraintSpec) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Newton minimum-norm steps onto both constraints, row by row."""
    a2 = spec.alpha**2
    beta4 = a2 * a2 / spec.ratio
    done = np.zeros(len(x), dtype=bool)
    for _ in range(NEWTON_MAX_ITER):
        res = _constraint_residual(x, spec)
        done = res <= NEWTON_TOL
        if np.all(done):
            break
        act = ~done
        xa = x[act]
        g = np.column_stack([np.sum(xa**2, axis=1) - a2, np.sum(xa**4, axis=1) - beta4])
        j1 = 2.0 * xa
        j2 = 4.0 * xa**3
        m11 = np.sum(j1 * j1, axis=1)
        m12 = np.sum(j1 * j2, axis=1)
        m22 = np.sum(j2 * j2, axis=1)
        det = m11 * m22 - m12 * m12
        ok = det > 1e-300
        det = np.where(ok, det, 1.0)
        l1 = (m22 * g[:, 0] - m12 * g[:, 1]) / det
        l2 = (-m12 * g[:, 0] + m11 * g[:, 1]) / det
        step = np.where(ok[:, None], l1[:, None] * j1 + l2[:, None] * j2, 0.0)
        # backtrack until the residual decreases
        current = res[act]
        t = np.ones(len(xa))
        trial = xa - step
        for _ in range(30):
            worse = _constraint_residual(trial, spec) > current
            if not np.any(worse):
                break
            t[worse] *= 0.5
            trial[worse] = xa[worse] - t[worse, None] * step[worse]
        x[act] = trial
    else:
        done = _constraint_residual(x, spec) <= NEWTON_TOL
    return x, done


def _directions_in_squares(spec: ConstraintSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    # squared coordinates lie on a sphere about alpha^2/n (1, ..., 1) inside sum u = alpha^2
    n = spec.n
    a2 = spec.alpha**2
    radius = math.sqrt(max(a2 * a2 / spec.ratio - a2 * a2 / n, 0.0))
    d = rng.normal(size=(count, n))
    d -= d.mean(axis=1, keepdims=True)
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    u = np.maximum(a2 / n + radius * d, 0.0)
    u *= a2 / np.sum(u, axis=1, keepdims=True)
    return np.sqrt(u)


def sample_constraint_set(spec: ConstraintSpec, count: int, seed: int = 0) -> tuple[np.ndarray, int]:
    """Deterministic sample of ``count`` draws from A(alpha, beta).

    Returns ``(points, dropped)``; ``dropped`` counts draws whose Newton
    projection did not converge.  Points are spread over the whole set by
    random coordinate permutations and reflections.
    """
    if spec.n < 3:
        raise ValueError("sampling needs n >= 3")
    rng = np.random.default_rng(seed)
    r = spec.ratio
    n = spec.n
    if _snapped_integer(r) in (1, n):
        base = p_plus(spec).vector() if _snapped_integer(r) == n else p_minus(spec).vector()
        return _random_symmetries(np.tile(base, (count, 1)), rng), 0
    if n == 3:
        pts = _sweep_three(spec, count, rng)
        ok = _constraint_residual(pts, spec) <= 1e-10
    else:
        pts, ok = _newton_project(_directions_in_squares(spec, count, rng), spec)
    pts = pts[ok]
    return _random_symmetries(pts, rng), int(count - np.count_nonzero(ok))


@dataclass(frozen=True)
class ExtremalityReport:
    holds: bool
    p: float
    lower: float
    upper: float
    sample_min: float
    sample_max: float
    count: int
    dropped: int
    worst_slack: float


def verify_extremality(spec: ConstraintSpec, p: float, count: int = 10_000, seed: int = 0,
                       tol: float = 1e-10) -> ExtremalityReport:
    """Check E|<x, eps>|^p over sampled x in A lies within [value(P-), value(P+)]."""
    if p < 5:
        raise ValueError(f"extremality is claimed for p >= 5, got {p}")
    hi = float(rademacher_moment_rows(p_plus(spec).vector(), p)[0])
    lo = float(rademacher_moment_rows(p_minus(spec).vector(), p)[0])
    pts, dropped = sample_constraint_set(spec, count, seed)
    values = rademacher_moment_rows(pts, p)
    smin, smax = float(values.min()), float(values.max())
    slack = min(smin - lo, hi - smax)
    return ExtremalityReport(
        holds=bool(slack >= -tol),
        p=float(p),
        lower=lo,
        upper=hi,
        sample_min=smin,
        sample_max=smax,
        count=len(values),
        dropped=dropped,
        worst_slack=slack,
    )


# --------------------------------------------------------------------------
# Scalar inequalities for Phi(u) = |u|^p
# --------------------------------------------------------------------------


def three_solutions_residual(u: np.ndarray, p: float, alpha: float) -> np.ndarray:
    """(u Phi'(u))''' - alpha u on u > 0; u Phi'(u) = p u^p."""
    u = np.asarray(u, dtype=float)
    return p * p * (p - 1.0) * (p - 2.0) * u ** (p - 3.0) - alpha * u


def _count_sign_changes(values: np.ndarray) -> int:
    s = np.sign(values)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def check_three_solutions(p: float, alpha: float, u_max: float = 10.0, grid: int = 10_000) -> int:
    """Number of positive roots of (u Phi')''' = alpha u seen on a grid of (0, u_max]."""
    if p < 5:
        raise ValueError(f"needs p >= 5, got {p}")
    u = np.linspace(u_max / grid, u_max, grid)
    return _count_sign_changes(three_solutions_residual(u, p, alpha))


def slope_values(p: float, a: float, r: np.ndarray) -> np.ndarray:
    """(Phi(sqrt(a+r)) - Phi(sqrt(a-r))) / 2r for Phi = |.|^p, cancellation-free."""
    r = np.asarray(r, dtype=float)
    m = 0.5 * p
    x = r / a
    # log1p(-1) = -inf gives expm1(-inf) = -1, the right limit at r = a
    with np.errstate(divide="ignore"):
        diff = np.expm1(m * np.log1p(x)) - np.expm1(m * np.log1p(-x))
    return a**m * diff / (2.0 * r)


def check_slope_monotone(p: float, a: float, grid: int | Sequence[float] = 100) -> bool:
    """Monotonicity of r -> (Phi(sqrt(a+r)) - Phi(sqrt(a-r)))/(2r) on (0, a].

    For p = 4 the function is constant and only non-decrease (within 1e-12)
    is required; for p > 4 every step must be >= 0 and at least one step must
    exceed 1e-10.
    """
    if p < 4 or a <= 0:
        raise ValueError("needs p >= 4 and a > 0")
    if isinstance(grid, (int, np.integer)):
        r = np.linspace(a / grid, a, int(grid))
    else:
        r = np.sort(np.asarray(grid, dtype=float))
        if r[0] <= 0 or r[-1] > a:
            raise ValueError("grid must lie in (0, a]")
    steps = np.diff(slope_values(p, a, r))
    if p == 4:
        return bool(np.all(steps >= -1e-12))
    return bool(np.all(steps >= 0.0) and np.any(steps > 1e-10))


def ko2_inequality(a: Sequence[float] | np.ndarray) -> tuple:
    """Both sides of sum a_i^2 (1 - 2a_i^2/3)^3 <= (1 - 2/3 sum a_i^4)^2.

    Works along the last axis, so a 2-D array gives one pair per row.
    """
    a = np.asarray(a, dtype=float)
    sq = a * a
    norms = np.sum(sq, axis=-1)
    if np.any(np.abs(norms - 1.0) > 1e-10):
        raise ValueError("ko2_inequality needs unit vectors")
    lhs = np.sum(sq * (1.0 - 2.0 * sq / 3.0) ** 3, axis=-1)
    rhs = (1.0 - 2.0 * np.sum(sq * sq, axis=-1) / 3.0) ** 2
    if a.ndim == 1:
        return float(lhs), float(rhs)
    return lhs, rhs
