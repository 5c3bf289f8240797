"""Absolute moments of Rademacher sums, binomial sums and Gaussians.

All functions return the p-th *power* moment E|X|^p wrapped in a
:class:`MomentResult`; take ``result.norm(p)`` for the p-th root.

The ``abs_error`` attached to every result is a conservative floating-point
estimate (term count x machine epsilon x largest term, plus a quadrature
remainder estimate where a rule is involved).  It is not an interval
enclosure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence, Union

import numpy as np
from scipy.special import gammaln, roots_genlaguerre

EPS = float(np.finfo(float).eps)

ENUMERATION_CAP = 30
BINOMIAL_CAP = 4096
LEGENDRE_NODES = 64
HERMITE_NODES = 128

# exact binomial weights up to this n, log-Gamma weights above
_EXACT_BINOMIAL_MAX = 64
# |y| above which the plain Hermite rule is used for E|y+G|^p
_FOLD_MAX_SHIFT = 10.0
# sign patterns per enumeration block (2**20 doubles = 8 MB)
_BLOCK_BITS = 20
_GRADING_POWER = 4

METHODS = (
    "enumeration",
    "binomial-closed-form",
    "quadrature",
    "gamma-closed-form",
    "exact-rational",
)


@dataclass(frozen=True)
class WeightVector:
    """Coefficients a = (a_1, ..., a_n) of the Rademacher sum sum a_i eps_i."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        if not coeffs:
            raise ValueError("a weight vector needs at least one coefficient")
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError(f"non-finite coefficient in {coeffs!r}")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def of(cls, a: "WeightLike") -> "WeightVector":
        if isinstance(a, cls):
            return a
        return cls(tuple(np.asarray(a, dtype=float).ravel()))

    @property
    def n(self) -> int:
        return len(self.coeffs)

    def as_array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=float)

    def canonical(self) -> "WeightVector":
        """Non-negative entries sorted non-increasingly; moments are unchanged."""
        return WeightVector(tuple(sorted((abs(c) for c in self.coeffs), reverse=True)))

    def power_sum(self, k: float) -> float:
        return math.fsum(abs(c) ** k for c in self.coeffs)

    @property
    def squared_norm(self) -> float:
        return self.power_sum(2)

    def normalized(self) -> "WeightVector":
        s = self.squared_norm
        if s <= 0.0:
            raise ValueError("cannot normalize the zero vector")
        r = math.sqrt(s)
        return WeightVector(tuple(c / r for c in self.coeffs))


WeightLike = Union[WeightVector, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class MomentResult:
    value: float
    abs_error: float
    method: str

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not (self.value >= 0.0 and self.abs_error >= 0.0):
            raise ValueError(f"invalid moment result {self.value!r} +- {self.abs_error!r}")
        if self.method == "exact-rational" and self.abs_error != 0.0:
            raise ValueError("exact results carry no error")

    def norm(self, p: float) -> float:
        """The p-th root of the stored moment."""
        return self.value ** (1.0 / p)


def _check_exponent(p, *, allow_zero: bool) -> float:
    p = float(p)
    if not math.isfinite(p):
        raise ValueError(f"exponent must be finite, got {p}")
    if p < 0.0 or (p == 0.0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ValueError(f"exponent must be {bound}, got {p}")
    return p


def _abs_pow(t: np.ndarray, p: float) -> np.ndarray:
    # 0**p == 0 for p > 0 and |t|**0 == 1 everywhere (a.e. convention)
    if p == 0.0:
        return np.ones_like(t)
    return np.abs(t) ** p


# --------------------------------------------------------------------------
# Gaussian
# --------------------------------------------------------------------------


def _double_factorial(k: int) -> int:
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def gaussian_log_abs_moment(p: float) -> float:
    """log E|G|^p = (p/2) log 2 + log Gamma((p+1)/2) - log(pi)/2."""
    p = _check_exponent(p, allow_zero=True)
    return 0.5 * p * math.log(2.0) + math.lgamma(0.5 * (p + 1.0)) - 0.5 * math.log(math.pi)


def gaussian_abs_moment(p: float) -> MomentResult:
    """E|G|^p for a standard normal G.

    Integer exponents use double factorials: (p-1)!! for even p and
    (p-1)!! * sqrt(2/pi) for odd p.  Other exponents go through the Gamma
    function.
    """
    p = _check_exponent(p, allow_zero=True)
    if p == 0.0:
        return MomentResult(1.0, 0.0, "gamma-closed-form")
    if p.is_integer() and p <= 300:
        k = int(p)
        if k % 2 == 0:
            return MomentResult(float(_double_factorial(k - 1)), 0.0, "gamma-closed-form")
        value = _double_factorial(k - 1) * math.sqrt(2.0 / math.pi)
        return MomentResult(value, 2 * EPS * value, "gamma-closed-form")
    if p < 300:
        value = 2.0 ** (0.5 * p) * math.gamma(0.5 * (p + 1.0)) / math.sqrt(math.pi)
        return MomentResult(value, 4 * EPS * value, "gamma-closed-form")
    log_value = gaussian_log_abs_moment(p)
    value = math.exp(log_value)
    return MomentResult(value, (4 + abs(log_value)) * EPS * value, "gamma-closed-form")


def gaussian_norm(p: float) -> float:
    """gamma_p = (E|G|^p)^(1/p)."""
    p = _check_exponent(p, allow_zero=False)
    return math.exp(gaussian_log_abs_moment(p) / p)


@lru_cache(maxsize=32)
def _hermite_rule(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    # probabilists' normalisation: sum w f(x) ~ E f(G)
    z, w = np.polynomial.hermite.hermgauss(nodes)
    return z * math.sqrt(2.0), w / math.sqrt(math.pi)


@lru_cache(maxsize=256)
def _laguerre_rule(nodes: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    s, w = roots_genlaguerre(nodes, alpha)
    return s, w


def _folded_gaussian(y: float, p: float, nodes: int) -> float:
    # E|y+G|^p = 2^{p/2}/sqrt(pi) * int_0^inf s^{(p-1)/2} e^{-s} e^{-y^2/2} cosh(y sqrt(2s)) ds
    s, w = _laguerre_rule(nodes, 0.5 * (p - 1.0))
    r = np.sqrt(2.0 * s)
    g = 0.5 * (np.exp(y * r - 0.5 * y * y) + np.exp(-y * r - 0.5 * y * y))
    return 2.0 ** (0.5 * p) / math.sqrt(math.pi) * math.fsum(w * g)


def _hermite_gaussian(y: float, p: float, nodes: int) -> float:
    x, w = _hermite_rule(nodes)
    return math.fsum(w * _abs_pow(y + x, p))


def shifted_gaussian_moment(y: float, p: float, nodes: int = HERMITE_NODES) -> MomentResult:
    """E|y+G|^p by a Hermite-type rule.

    The integrand has a kink at x = -y, which ruins the plain Gauss-Hermite
    rule for non-even p.  For moderate |y| the integral is folded at the kink
    onto (0, inf) and evaluated with a generalized Gauss-Laguerre rule in
    s = t^2/2 (the half-range Hermite rule), whose weight absorbs |t|^p
    exactly.  Far shifts put the kink in the Gaussian tail, where the plain
    rule is accurate.  The error estimate compares against half the nodes.
    """
    p = _check_exponent(p, allow_zero=False)
    y = abs(float(y))
    if not math.isfinite(y):
        raise ValueError("shift must be finite")
    if y == 0.0:
        return gaussian_abs_moment(p)
    rule = _folded_gaussian if y <= _FOLD_MAX_SHIFT else _hermite_gaussian
    value = rule(y, p, nodes)
    coarse = rule(y, p, max(nodes // 2, 2))
    err = abs(value - coarse) + 8 * nodes * EPS * value
    return MomentResult(value, err, "quadrature")


# --------------------------------------------------------------------------
# Rademacher sums by enumeration
# --------------------------------------------------------------------------


def _all_sums(coeffs: np.ndarray) -> np.ndarray:
    """All 2^m signed sums of ``coeffs`` (m = len(coeffs))."""
    sums = np.zeros(1)
    for c in coeffs:
        sums = np.concatenate([sums + c, sums - c])
    return sums


def _sum_blocks(arr: np.ndarray) -> Iterator[np.ndarray]:
    """Yield the 2^(n-1) sums sum a_i eps_i with eps_1 = +1, in blocks."""
    head, rest = arr[0], arr[1:]
    inner_count = min(len(rest), _BLOCK_BITS)
    inner = _all_sums(rest[len(rest) - inner_count:])
    outer = head + _all_sums(rest[: len(rest) - inner_count])
    for base in outer:
        yield base + inner


def _as_weights(a: WeightLike) -> WeightVector:
    return WeightVector.of(a)


def rademacher_moment(a: WeightLike, p: float, cap: int = ENUMERATION_CAP) -> MomentResult:
    """E|sum a_i eps_i|^p by enumerating sign patterns.

    The first sign is fixed (the sum is symmetric), so 2^(n-1) patterns are
    visited; blocks are summed with ``math.fsum``.
    """
    w = _as_weights(a)
    p = _check_exponent(p, allow_zero=False)
    if w.n > cap:
        raise ValueError(f"dimension {w.n} exceeds enumeration cap {cap}")
    arr = w.as_array()
    partial = [math.fsum(_abs_pow(block, p)) for block in _sum_blocks(arr)]
    count = 2 ** (w.n - 1)
    value = math.fsum(partial) / count
    l1 = float(np.sum(np.abs(arr)))
    max_term = l1 ** p
    err = (p * w.n + 2) * EPS * max_term
    return MomentResult(value, err, "enumeration")


@lru_cache(maxsize=64)
def sign_matrix(n: int) -> np.ndarray:
    """The 2^(n-1) x n matrix of sign patterns with a leading +1 column."""
    if n < 1:
        raise ValueError("n must be positive")
    rows = ((np.arange(2 ** (n - 1))[:, None] >> np.arange(n - 1)) & 1) * -2 + 1
    m = np.hstack([np.ones((2 ** (n - 1), 1)), rows.astype(float)])
    m.setflags(write=False)
    return m


def rademacher_moment_rows(points: np.ndarray, p: float) -> np.ndarray:
    """Vectorised E|<x, eps>|^p for every row x of ``points`` (small n only)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    p = _check_exponent(p, allow_zero=False)
    n = points.shape[1]
    if n > 16:
        raise ValueError("row-wise enumeration is limited to n <= 16")
    sums = points @ sign_matrix(n).T
    return np.mean(np.abs(sums) ** p, axis=1)


def rademacher_moment_exact(a: Sequence, p: int) -> Fraction:
    """Exact E(sum a_i eps_i)^p for rational a and even integer p.

    Moments of the partial sums are updated coordinate by coordinate with
    E(S + c eps)^j = sum_{k even} C(j, k) c^k E S^(j-k).
    """
    if isinstance(p, bool) or int(p) != p or p <= 0 or int(p) % 2:
        raise ValueError(f"exact moments need an even positive integer exponent, got {p!r}")
    p = int(p)
    coeffs = [Fraction(c) for c in (a.coeffs if isinstance(a, WeightVector) else a)]
    moments = [Fraction(1)] + [Fraction(0)] * p
    for c in coeffs:
        powers = [c**k for k in range(p + 1)]
        moments = [
            sum((math.comb(j, k) * powers[k] * moments[j - k] for k in range(0, j + 1, 2)), Fraction(0))
            for j in range(p + 1)
        ]
    return moments[p]


def fourth_moment(a: WeightLike) -> float:
    """E S_a^4 = 3 (sum a_i^2)^2 - 2 sum a_i^4."""
    w = _as_weights(a)
    s2 = w.power_sum(2)
    s4 = w.power_sum(4)
    return 3.0 * s2 * s2 - 2.0 * s4


# --------------------------------------------------------------------------
# Shifted binomial sums x + S_n, S_n = eps_1 + ... + eps_n
# --------------------------------------------------------------------------


@lru_cache(maxsize=128)
def binomial_pmf(n: int) -> np.ndarray:
    """P(X = k), X ~ Bin(n, 1/2), correctly rounded from exact integers."""
    if n < 0:
        raise ValueError("n must be non-negative")
    denom, c, row = 2**n, 1, []
    for k in range(n + 1):
        row.append(c / denom)  # int / int rounds once
        c = c * (n - k) // (k + 1)
    pmf = np.array(row)
    pmf.setflags(write=False)
    return pmf


def _log_binomial_weights(n: int) -> np.ndarray:
    k = np.arange(n + 1, dtype=float)
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0) - n * math.log(2.0)


def shifted_binomial_moment(x: float, n: int, p: float, cap: int = BINOMIAL_CAP) -> MomentResult:
    """E|x + S_n|^p = 2^-n sum_k C(n, k) |x + n - 2k|^p.

    Weights are exact rationals rounded once for n <= 64 and evaluated in the
    log domain (log-Gamma, exponentiated per term) beyond that.
    """
    p = _check_exponent(p, allow_zero=False)
    if int(n) != n or n < 0:
        raise ValueError(f"n must be a non-negative integer, got {n!r}")
    n = int(n)
    if n > cap:
        raise ValueError(f"n = {n} exceeds binomial cap {cap}")
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("shift must be finite")
    if n == 0:
        return MomentResult(abs(x) ** p, 2 * EPS * abs(x) ** p, "binomial-closed-form")
    atoms = np.abs(x + n - 2.0 * np.arange(n + 1))
    if n <= _EXACT_BINOMIAL_MAX:
        value = math.fsum(binomial_pmf(n) * atoms**p)
        return MomentResult(value, (p + 3) * EPS * value, "binomial-closed-form")
    logw = _log_binomial_weights(n)
    nz = atoms > 0.0
    logt = logw[nz] + p * np.log(atoms[nz])
    value = math.fsum(np.exp(logt))
    log_scale = 3.0 * math.lgamma(n + 1.0) + float(np.max(np.abs(logt)))
    return MomentResult(value, (p + 4 + log_scale) * EPS * value, "binomial-closed-form")


# --------------------------------------------------------------------------
# Uniform smoothing of one coordinate
# --------------------------------------------------------------------------


@lru_cache(maxsize=32)
def _legendre_unit(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    # Gauss-Legendre on [0, 1]
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


def _graded_from_zero(upper: np.ndarray, q: float, nodes: int) -> np.ndarray:
    """int_0^X t^q dt for each X in ``upper``; nodes are graded towards t = 0."""
    v, w = _legendre_unit(nodes)
    k = _GRADING_POWER
    t = upper[:, None] * v[None, :] ** k
    jac = upper[:, None] * k * v[None, :] ** (k - 1)
    return np.sum(w[None, :] * jac * t**q, axis=1)


def _plain_segment(lo: np.ndarray, hi: np.ndarray, q: float, nodes: int) -> np.ndarray:
    """int_lo^hi t^q dt for 0 < lo < hi, kink far from the segment."""
    v, w = _legendre_unit(nodes)
    length = hi - lo
    t = lo[:, None] + length[:, None] * v[None, :]
    return length * np.sum(w[None, :] * t**q, axis=1)


def _power_mean_over_window(r: np.ndarray, half: float, q: float, nodes: int) -> np.ndarray:
    """(1/2h) int_{r-h}^{r+h} |t|^q dt for r >= 0, split at the kink t = 0."""
    lo = r - half
    hi = r + half
    out = np.empty_like(r)
    straddle = lo < 0.0
    if np.any(straddle):
        out[straddle] = _graded_from_zero(hi[straddle], q, nodes) + _graded_from_zero(-lo[straddle], q, nodes)
    near = ~straddle & (lo < 0.25 * (hi - lo))
    if np.any(near):
        out[near] = _graded_from_zero(hi[near], q, nodes) - _graded_from_zero(lo[near], q, nodes)
    far = ~straddle & ~near
    if np.any(far):
        out[far] = _plain_segment(lo[far], hi[far], q, nodes)
    return out / (2.0 * half)


def smoothed_moment(a: WeightLike, i: int, p: float, nodes: int = LEGENDRE_NODES,
                    cap: int = ENUMERATION_CAP) -> MomentResult:
    """E|S_i|^p where S_i is S_a with eps_i replaced by U ~ Uniform[-1, 1].

    ``i`` is a 0-based index.  The remaining signs are enumerated; for each
    pattern the U-integral is a window average of |t|^p, which is split at
    the kink t = 0 and integrated by Gauss-Legendre (nodes graded towards the
    kink on pieces that touch it).
    """
    w = _as_weights(a)
    p = _check_exponent(p, allow_zero=True)
    if not (-w.n <= i < w.n) or int(i) != i:
        raise IndexError(f"index {i} out of range for n = {w.n}")
    if w.n > cap:
        raise ValueError(f"dimension {w.n} exceeds enumeration cap {cap}")
    if p == 0.0:
        return MomentResult(1.0, 0.0, "quadrature")
    arr = w.as_array()
    half = abs(arr[i])
    rest = np.delete(arr, i)
    # U is symmetric, so the integrand is even in the remaining sum
    r = np.abs(np.concatenate(list(_sum_blocks(rest)))) if rest.size else np.zeros(1)
    if half == 0.0:
        values = _abs_pow(r, p)
        value = math.fsum(values) / r.size
        return MomentResult(value, (p * w.n + 2) * EPS * float(np.max(values)), "quadrature")
    fine = _power_mean_over_window(r, half, p, nodes)
    coarse = _power_mean_over_window(r, half, p, max(nodes // 2, 2))
    value = math.fsum(fine) / r.size
    coarse_value = math.fsum(coarse) / r.size
    max_term = float(np.sum(np.abs(arr))) ** p
    err = abs(value - coarse_value) + (p * w.n + 2 * nodes) * EPS * max_term
    return MomentResult(value, err, "quadrature")


def ko1_recursion_residual(a: WeightLike, p: float, nodes: int = LEGENDRE_NODES) -> float:
    """Relative residual of E|S|^p = (p-1) sum a_i^2 E|S_i|^(p-2)."""
    w = _as_weights(a)
    p = _check_exponent(p, allow_zero=False)
    if p < 2.0:
        raise ValueError(f"the smoothing recursion needs p >= 2, got {p}")
    lhs = rademacher_moment(w, p).value
    terms = [
        c * c * smoothed_moment(w, i, p - 2.0, nodes=nodes).value
        for i, c in enumerate(w.coeffs)
        if c != 0.0
    ]
    rhs = (p - 1.0) * math.fsum(terms)
    return abs(lhs - rhs) / lhs
