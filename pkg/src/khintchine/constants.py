"""Dimension-dependent Khintchine constants and moment-comparison checks.

C(p, q, n) is the maximum of ||S_a||_p / ||S_a||_q over unit a in R^n.  For
q = 4 it reduces to a one-dimensional supremum over shifts of the binomial
sum, sup_{x >= 1} ||x + S_{n-1}||_p / ||x + S_{n-1}||_4, which is what
:func:`c_p4_reduced` evaluates; :func:`c_pq_bruteforce` optimises over the
sphere directly and serves as its independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import bisect, minimize

from .moments import (
    EPS,
    WeightVector,
    binomial_pmf,
    gaussian_norm,
    rademacher_moment,
    rademacher_moment_rows,
    shifted_binomial_moment,
)

GRID_POINTS = 512
TAIL_EPS = 1e-8
X_MAX_CAP = 2.0**16
GOLDEN_XTOL = 1e-10
CONJECTURE_XTOL = 1e-6
BRUTEFORCE_RESOLUTION = {2: 4001, 3: 201, 4: 61, 5: 25, 6: 15}
BRUTEFORCE_MAX_POINTS = 2_000_000

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ConstantEstimate:
    value: float
    lower: float
    upper: float
    argmax: tuple[float, ...]
    p: float
    q: float
    dim: int
    method: str
    # reduced method only: whether the supremum sits at x = 1, and how far from it
    at_one: bool | None = None
    argmax_distance: float | None = None
    heuristic: bool = False


@dataclass(frozen=True)
class RatioCurve:
    p: float
    q: float
    n: int
    samples: list[tuple[float, float]] = field(default_factory=list)


def _ratio_with_error(x: float, n: int, p: float, q: float) -> tuple[float, float]:
    mp = shifted_binomial_moment(x, n, p)
    mq = shifted_binomial_moment(x, n, q)
    value = mp.norm(p) / mq.norm(q)
    rel = mp.abs_error / (p * mp.value) + mq.abs_error / (q * mq.value)
    return value, rel * value


def ratio_fn(x: float, n: int, p: float, q: float) -> float:
    """f_n(x) = ||x + S_n||_p / ||x + S_n||_q."""
    if p <= 0 or q <= 0:
        raise ValueError("p and q must be positive")
    if p == q:
        return 1.0
    return _ratio_with_error(x, n, p, q)[0]


def ratio_curve(n: int, p: float, q: float, xs: Sequence[float]) -> RatioCurve:
    return RatioCurve(p, q, n, [(float(x), ratio_fn(x, n, p, q)) for x in xs])


def golden_section_max(f: Callable[[float], float], a: float, b: float,
                       xtol: float = GOLDEN_XTOL) -> tuple[float, float]:
    """Maximise f on [a, b]; endpoints are compared at the end so a boundary
    maximum is returned exactly."""
    fa, fb = f(a), f(b)
    lo, hi = a, b
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > xtol * max(1.0, abs(lo)):
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
    best = max([(fa, a), (fb, b), (fc, c), (fd, d)])
    return best[1], best[0]


def _tail_limit(f: Callable[[float], float], tail_eps: float, cap: float) -> float:
    x = 2.0
    while x < cap and f(x) >= 1.0 + tail_eps:
        x *= 2.0
    return min(x, cap)


def c_p4_reduced(p: float, dim: int, grid: int = GRID_POINTS, tail_eps: float = TAIL_EPS,
                 x_max_cap: float = X_MAX_CAP, xtol: float = GOLDEN_XTOL) -> ConstantEstimate:
    """C(p, 4, dim) as sup_{x >= 1} f_{dim-1}(x).

    A log-spaced grid on [1, X_max] locates candidate maxima; the three best
    local maxima are refined by golden-section search and the global best is
    kept.  The reduction is established for p >= 5; for 4 < p < 5 the result
    is flagged ``heuristic``.
    """
    if p < 4:
        raise ValueError(f"the reduction needs p >= 4, got {p}")
    if int(dim) != dim or dim < 2:
        raise ValueError(f"dim must be an integer >= 2, got {dim!r}")
    n = int(dim) - 1
    if p == 4:
        return ConstantEstimate(1.0, 1.0, 1.0, (1.0,), 4.0, 4.0, int(dim), "reduced", True, 0.0, False)

    def f(x: float) -> float:
        return _ratio_with_error(x, n, p, 4.0)[0]

    x_max = _tail_limit(f, tail_eps, x_max_cap)
    xs = np.geomspace(1.0, x_max, grid)
    fs = np.array([f(x) for x in xs])
    padded = np.concatenate([[-np.inf], fs, [-np.inf]])
    peaks = [i for i in range(grid) if padded[i + 1] >= padded[i] and padded[i + 1] >= padded[i + 2]]
    peaks = sorted(peaks, key=lambda i: fs[i], reverse=True)[:3]
    best_x, best_f = float(xs[int(np.argmax(fs))]), float(np.max(fs))
    for i in peaks:
        lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, grid - 1)]
        x, fx = golden_section_max(f, float(lo), float(hi), xtol)
        if fx > best_f:
            best_x, best_f = x, fx
    _, err = _ratio_with_error(best_x, n, p, 4.0)
    distance = best_x - 1.0
    return ConstantEstimate(
        value=best_f,
        lower=best_f - err,
        upper=best_f + err,
        argmax=(best_x,),
        p=float(p),
        q=4.0,
        dim=int(dim),
        method="reduced",
        at_one=bool(distance <= CONJECTURE_XTOL),
        argmax_distance=distance,
        heuristic=bool(p < 5),
    )


def _sphere_ratio_rows(t: np.ndarray, p: float, q: float) -> np.ndarray:
    # rows are a = (1, t_2, ..., t_n); the ratio is scale-invariant
    a = np.hstack([np.ones((len(t), 1)), t])
    return rademacher_moment_rows(a, p) ** (1.0 / p) / rademacher_moment_rows(a, q) ** (1.0 / q)


def _fundamental_grid(dim: int, resolution: int) -> np.ndarray:
    levels = np.linspace(0.0, 1.0, resolution)
    size = math.comb(resolution + dim - 2, dim - 1)
    if size > BRUTEFORCE_MAX_POINTS:
        raise ValueError(f"grid of {size} points exceeds the cap {BRUTEFORCE_MAX_POINTS}")
    idx = np.array(list(combinations_with_replacement(range(resolution - 1, -1, -1), dim - 1)))
    return levels[idx]


def c_pq_bruteforce(p: float, q: float, dim: int, resolution: int | None = None, seed: int = 0,
                    mode: str = "grid", starts: int = 8) -> ConstantEstimate:
    """C(p, q, dim) by direct search over sorted non-negative unit vectors.

    ``mode="grid"`` scans a lattice of (1, t_2, ..., t_n) with
    1 >= t_2 >= ... >= t_n >= 0 (dim <= 6); ``mode="multistart"`` draws
    ``resolution`` random points instead.  The ``starts`` best points are then
    polished with Powell's method inside [0, 1]^(dim-1).
    """
    if p <= 0 or q <= 0:
        raise ValueError("p and q must be positive")
    if int(dim) != dim or dim < 1:
        raise ValueError(f"dim must be a positive integer, got {dim!r}")
    dim = int(dim)
    if dim == 1:
        return ConstantEstimate(1.0, 1.0, 1.0, (1.0,), float(p), float(q), 1, "bruteforce")
    if dim > 16:
        raise ValueError("brute force is limited to dim <= 16")
    if mode == "grid":
        if dim > 6:
            raise ValueError("grid mode is limited to dim <= 6; use mode='multistart'")
        res = resolution or BRUTEFORCE_RESOLUTION[dim]
        cands = _fundamental_grid(dim, res)
    elif mode == "multistart":
        rng = np.random.default_rng(seed)
        cands = -np.sort(-rng.random((resolution or 256, dim - 1)), axis=1)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    vals = _sphere_ratio_rows(cands, p, q)
    order = np.argsort(-vals, kind="stable")[:starts]
    best_t, best_v = cands[order[0]], float(vals[order[0]])

    def neg(t: np.ndarray) -> float:
        return -float(_sphere_ratio_rows(np.clip(t, 0.0, 1.0)[None, :], p, q)[0])

    for i in order:
        res_opt = minimize(neg, cands[i], method="Powell", bounds=[(0.0, 1.0)] * (dim - 1),
                           options={"xtol": 1e-10, "ftol": 1e-15, "maxfev": 20_000})
        if -res_opt.fun > best_v:
            best_v, best_t = -float(res_opt.fun), np.clip(res_opt.x, 0.0, 1.0)
    a = WeightVector((1.0, *best_t)).canonical().normalized()
    mp, mq = rademacher_moment(a, p), rademacher_moment(a, q)
    err = best_v * (mp.abs_error / (p * mp.value) + mq.abs_error / (q * mq.value))
    return ConstantEstimate(best_v, best_v - err, best_v + err, a.coeffs, float(p), float(q), dim,
                            "bruteforce")


# --------------------------------------------------------------------------
# Verification of the main ceiling and its corollaries
# --------------------------------------------------------------------------


def equal_weights_ratio(n: int, p: float, q: float = 4.0) -> float:
    """||S_n||_p / ||S_n||_q, the ratio at a = n^{-1/2} (1, ..., 1)."""
    return shifted_binomial_moment(0.0, n, p).norm(p) / shifted_binomial_moment(0.0, n, q).norm(q)


def normalized_binomial_norm(n: int, p: float) -> float:
    """||S_n / sqrt(n)||_p."""
    return shifted_binomial_moment(0.0, n, p).norm(p) / math.sqrt(n)


@dataclass(frozen=True)
class TheoremReport:
    p: float
    ceiling: float
    estimates: list[ConstantEstimate]
    below_ceiling: bool
    non_decreasing: bool
    witness: float
    witness_lower: float
    witness_ok: bool

    @property
    def holds(self) -> bool:
        return self.below_ceiling and self.non_decreasing and self.witness_ok


def verify_theorem_cp4(p: float, dim_max: int = 14, ceiling_tol: float = 1e-9,
                       monotone_tol: float = 1e-10, **reduced_kw) -> TheoremReport:
    """C(p, 4, dim) <= gamma_p / gamma_4 for dim <= dim_max, non-decreasing in dim,
    and the equal-weights ratio at n = dim_max bracketed from below by the
    Gaussian comparison bound e^{-p/2n} gamma_p / ||S_n/sqrt n||_4."""
    if p < 4:
        raise ValueError(f"needs p >= 4, got {p}")
    ceiling = gaussian_norm(p) / gaussian_norm(4.0)
    ests = [c_p4_reduced(p, d, **reduced_kw) for d in range(2, dim_max + 1)]
    values = [e.value for e in ests]
    below = all(v <= ceiling + ceiling_tol for v in values)
    monotone = all(b >= a - monotone_tol for a, b in zip(values, values[1:]))
    n = dim_max
    witness = equal_weights_ratio(n, p)
    lower = math.exp(-p / (2.0 * n)) * gaussian_norm(p) / normalized_binomial_norm(n, 4.0)
    ok = lower <= witness <= ceiling + ceiling_tol
    return TheoremReport(float(p), ceiling, ests, below, monotone, witness, lower, ok)


def _unit(a) -> WeightVector:
    w = WeightVector.of(a)
    if abs(w.squared_norm - 1.0) > 1e-10:
        raise ValueError("expected a unit vector")
    return w


def stability_check(a, p: float) -> tuple[float, float]:
    """(||S||_p / ||G||_p, 1 - sum a_i^4 / 6) for unit a."""
    if p < 4:
        raise ValueError(f"needs p >= 4, got {p}")
    w = _unit(a)
    lhs = rademacher_moment(w, p).norm(p) / gaussian_norm(p)
    return lhs, 1.0 - w.power_sum(4) / 6.0


def fourth_norm_identity(a) -> tuple[float, float]:
    """(||S||_4 / gamma_4 by enumeration, (1 - 2/3 sum a_i^4)^{1/4})."""
    w = _unit(a)
    lhs = rademacher_moment(w, 4.0).norm(4.0) / gaussian_norm(4.0)
    return lhs, (1.0 - 2.0 * w.power_sum(4) / 3.0) ** 0.25


def interp_endpoint_sides(a, p: float) -> tuple[float, float]:
    """(sum a_i^2 (1 - 2a_i^2/3)^{(p-2)/2}, (1 - 2/3 sum a_i^4)^{p/4}) for unit a."""
    w = _unit(a)
    sq = w.as_array() ** 2
    lhs = math.fsum(sq * (1.0 - 2.0 * sq / 3.0) ** ((p - 2.0) / 2.0))
    return lhs, (1.0 - 2.0 * w.power_sum(4) / 3.0) ** (p / 4.0)


def cp2_check(a, p: float) -> tuple[float, float]:
    """(||S_a||_p, gamma_p) for unit a; the first never exceeds the second for p >= 3."""
    w = _unit(a)
    return rademacher_moment(w, p).norm(p), gaussian_norm(p)


def lower_bound_check(n: int, p: float) -> tuple[float, float]:
    """(||S_n / sqrt n||_p, e^{-p/2n} gamma_p)."""
    if p < 3:
        raise ValueError(f"needs p >= 3, got {p}")
    return normalized_binomial_norm(n, p), math.exp(-p / (2.0 * n)) * gaussian_norm(p)


def doubling_check(n: int, p: float) -> tuple[float, float]:
    """(||S_2n / sqrt 2n||_p, e^{p/4n} ||S_n / sqrt n||_p)."""
    if p < 3:
        raise ValueError(f"needs p >= 3, got {p}")
    return normalized_binomial_norm(2 * n, p), math.exp(p / (4.0 * n)) * normalized_binomial_norm(n, p)


def binomial_half_moment(n: int, p: float) -> float:
    """E X^{p/2} for X ~ Bin(n, 1/2) from the correctly rounded pmf."""
    k = np.arange(n + 1, dtype=float)
    return math.fsum(binomial_pmf(n) * k ** (p / 2.0))


def binomial_half_moment_check(n: int, p: float) -> tuple[float, float]:
    """(E X^{p/2}, (n/2)^{p/2} e^{p^2/4n})."""
    if p < 3:
        raise ValueError(f"needs p >= 3, got {p}")
    if n < 1:
        raise ValueError("n must be positive")
    return binomial_half_moment(n, p), (n / 2.0) ** (p / 2.0) * math.exp(p * p / (4.0 * n))


def q0_residual(q: float) -> float:
    return math.gamma((q + 1.0) / 2.0) - math.sqrt(math.pi) / 2.0


def q0_solve() -> float:
    """Root of Gamma((q+1)/2) = sqrt(pi)/2 in (1, 2).

    q = 2 is the other root of the same equation; the bracket [1, 1.9]
    excludes it (the residual is positive at 1 and negative at 1.9).
    """
    return bisect(q0_residual, 1.0, 1.9, xtol=4 * EPS, rtol=4 * EPS, maxiter=200)
