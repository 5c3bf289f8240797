"""Distribution-function comparison for shifted Gaussians.

To show ||y+G||_p / ||y+G||_q <= gamma_p / gamma_q one compares
f(x) = |Cx| and g(x) = |y+x| under the Gaussian measure, with C chosen
so that both have equal q-th moments.  The difference of their distribution
functions,

    h(t) = P(|y + G| <= t) - P(|C G| <= t),

changes sign exactly once (from - to +), and then the normalised moment gap
phi(s) = (C^s E|G|^s - E|y+G|^s) / (s y0^s) is non-decreasing in s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import bisect
from scipy.special import erf, ndtr

from .moments import gaussian_abs_moment, gaussian_norm, shifted_gaussian_moment

DEAD_BAND = 1e-14
TAIL_Z = 38.0
CROSSING_XTOL = 1e-12
SIGN_GRID = 10_000


def normal_tail(z):
    """P(Z > z), exactly 0 or 1 beyond |z| > 38."""
    z = np.asarray(z, dtype=float)
    out = ndtr(-z)
    out = np.where(z > TAIL_Z, 0.0, out)
    return np.where(z < -TAIL_Z, 1.0, out)


def normal_mass(a, b):
    """P(a < Z < b) for a <= b without cancellation on either side of 0."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    right = normal_tail(a) - normal_tail(b)
    left = normal_tail(-b) - normal_tail(-a)
    mid = 0.5 * (erf(b / math.sqrt(2.0)) - erf(a / math.sqrt(2.0)))
    return np.where(a >= 0.0, right, np.where(b <= 0.0, left, mid))


def compute_C(y: float, q: float) -> float:
    """||y+G||_q / ||G||_q."""
    if q <= 0:
        raise ValueError("q must be positive")
    if y == 0:
        return 1.0
    return shifted_gaussian_moment(y, q).norm(q) / gaussian_norm(q)


def h_function(y: float, C: float, t):
    """P(|y+G| <= t) - P(|CG| <= t), vectorised over t.

    Near the origin both probabilities are small and are taken as interval
    masses; once they approach 1 the identity
    h = 2 P(G > t/C) - P(G > t-y) - P(G > t+y) avoids the cancellation.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    inner = normal_mass(-t - y, t - y)
    scaled = normal_mass(-t / C, t / C)
    tail = 2.0 * normal_tail(t / C) - normal_tail(t - y) - normal_tail(t + y)
    out = np.where(scaled > 0.5, tail, inner - scaled)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SignChangeReport:
    y: float
    q: float
    C: float
    t0: float
    grid: np.ndarray
    h_values: np.ndarray
    crossings: list[tuple[float, float]]
    roots: list[float]
    count: int

    @property
    def y0(self) -> float:
        if not self.roots:
            raise ValueError("no sign change detected")
        return self.roots[0]

    @property
    def negative_to_positive(self) -> bool:
        live = self.h_values[np.abs(self.h_values) > DEAD_BAND]
        return bool(live.size and live[0] < 0 < live[-1])


def count_sign_changes(y: float, q: float, grid_size: int = SIGN_GRID,
                       dead_band: float = DEAD_BAND) -> SignChangeReport:
    """Scan h on a log-spaced grid and localise each sign change by bisection.

    The scan covers (0, T] with T = 2 t0, doubled until |h(T)| falls inside
    the dead band so that both grid ends sit where h has decayed to 0.
    Samples with |h| <= dead_band are ignored when detecting crossings.
    """
    if y <= 0:
        raise ValueError("y must be positive")
    C = compute_C(y, q)
    if not C > 1.0:
        raise ValueError(f"C = {C!r} is not > 1; y too small to resolve")
    t0 = C * y / (C - 1.0)
    upper = 2.0 * t0
    while abs(h_function(y, C, upper)) > dead_band:
        upper *= 2.0
    grid = np.geomspace(upper * 1e-9, upper, grid_size)
    hv = h_function(y, C, grid)
    live = np.flatnonzero(np.abs(hv) > dead_band)
    signs = np.sign(hv[live])
    flips = np.flatnonzero(signs[1:] != signs[:-1])
    crossings, roots = [], []
    for k in flips:
        lo, hi = float(grid[live[k]]), float(grid[live[k + 1]])
        crossings.append((lo, hi))
        roots.append(bisect(lambda t: h_function(y, C, t), lo, hi, xtol=CROSSING_XTOL))
    return SignChangeReport(float(y), float(q), C, t0, grid, hv, crossings, roots, len(crossings))


def phi_s(y: float, q: float, s: float, y0: float) -> float:
    """(C^s E|G|^s - E|y+G|^s) / (s y0^s) with C = compute_C(y, q)."""
    if y0 <= 0 or s <= 0:
        raise ValueError("s and y0 must be positive")
    C = compute_C(y, q)
    gap = C**s * gaussian_abs_moment(s).value - shifted_gaussian_moment(y, s).value
    return gap / (s * y0**s)


def h_moment_integral(y: float, q: float) -> tuple[float, float]:
    """(int_0^inf u^{q-1} h(u) du, int_0^inf u^{q-1} |h(u)| du).

    The first vanishes because both functions share the q-th moment; the
    second sets the scale for judging it.
    """
    report = count_sign_changes(y, q, grid_size=2000)
    C, upper = report.C, float(report.grid[-1])
    breaks = sorted({min(y, upper), min(report.t0, upper), *report.roots})

    def integrand(u: float) -> float:
        return u ** (q - 1.0) * h_function(y, C, u) if u > 0 else 0.0

    edges = [0.0, *breaks, upper]
    total = sum(quad(integrand, a, b, epsabs=1e-15, epsrel=1e-12, limit=200)[0]
                for a, b in zip(edges, edges[1:]) if b > a)
    scale = sum(quad(lambda u: abs(integrand(u)), a, b, epsabs=1e-15, epsrel=1e-12, limit=200)[0]
                for a, b in zip(edges, edges[1:]) if b > a)
    return total, scale


@dataclass(frozen=True)
class XGaussRow:
    y: float
    ratio: float
    bound: float
    passed: bool


def x_gauss_check(y_grid: Sequence[float], p: float, q: float, tol: float = 1e-10) -> list[XGaussRow]:
    """||y+G||_p / ||y+G||_q against gamma_p / gamma_q for every y in the grid."""
    if not p > q > 0:
        raise ValueError("needs p > q > 0")
    bound = gaussian_norm(p) / gaussian_norm(q)
    rows = []
    for y in y_grid:
        ratio = shifted_gaussian_moment(y, p).norm(p) / shifted_gaussian_moment(y, q).norm(q)
        rows.append(XGaussRow(float(y), ratio, bound, ratio <= bound + tol))
    return rows


def log_cosh(x):
    x = np.abs(np.asarray(x, dtype=float))
    return x + np.log1p(np.exp(-2.0 * x)) - math.log(2.0)


def logcosh_concavity_check(y: float, t_grid: Sequence[float], tol: float = 1e-12) -> bool:
    """Concavity of t -> log cosh(sqrt(t) y) on the grid.

    Each interior sample is compared with the chord through its neighbours;
    the chord may not rise above the curve by more than ``tol``.
    """
    if y == 0:
        raise ValueError("y must be non-zero")
    t = np.sort(np.asarray(t_grid, dtype=float))
    if t.size < 3 or t[0] <= 0:
        raise ValueError("need at least three positive grid points")
    f = log_cosh(np.sqrt(t) * y)
    lam = (t[2:] - t[1:-1]) / (t[2:] - t[:-2])
    chord = lam * f[:-2] + (1.0 - lam) * f[2:]
    return bool(np.all(chord - f[1:-1] < tol))
