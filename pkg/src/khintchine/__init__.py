"""Moments of Rademacher sums, dimension-dependent Khintchine constants and
numeric checks of the comparison inequalities around C(p, 4) = gamma_p / gamma_4."""

from .constants import (
    ConstantEstimate,
    RatioCurve,
    c_p4_reduced,
    c_pq_bruteforce,
    q0_solve,
    ratio_curve,
    ratio_fn,
    verify_theorem_cp4,
)
from .extremal import (
    ConstraintSpec,
    ExtremalConfig,
    InfeasibleSpec,
    p_minus,
    p_plus,
    sample_constraint_set,
    special_point,
    verify_extremality,
)
from .moments import (
    MomentResult,
    WeightVector,
    gaussian_abs_moment,
    gaussian_norm,
    rademacher_moment,
    shifted_binomial_moment,
    shifted_gaussian_moment,
    smoothed_moment,
)
from .np_check import compute_C, count_sign_changes, h_function, phi_s, x_gauss_check

__version__ = "0.1.0"

__all__ = [
    "ConstantEstimate", "ConstraintSpec", "ExtremalConfig", "InfeasibleSpec", "MomentResult",
    "RatioCurve", "WeightVector", "c_p4_reduced", "c_pq_bruteforce", "compute_C",
    "count_sign_changes", "gaussian_abs_moment", "gaussian_norm", "h_function", "p_minus", "p_plus",
    "phi_s", "q0_solve", "rademacher_moment", "ratio_curve", "ratio_fn", "sample_constraint_set",
    "shifted_binomial_moment", "shifted_gaussian_moment", "smoothed_moment", "special_point",
    "verify_extremality", "verify_theorem_cp4", "x_gauss_check",
]
