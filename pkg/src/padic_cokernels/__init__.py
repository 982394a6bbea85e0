"""Cokernels of Haar-random matrices over p-adic rings: exact arithmetic, limit laws, simulation."""

__version__ = "0.1.0"

from .limits import (
    LimitValue,
    ModuleType,
    TooLarge,
    alpha,
    alpha_inf,
    aut_order,
    aut_order_bruteforce,
    cohen_lenstra_mass,
    full_rank_prob,
    joint_limit,
    bounded_shift_limit,
)
from .montecarlo import (
    ConfigError,
    EmpiricalJoint,
    ExperimentConfig,
    ShiftSpec,
    enum_fp_exact,
    run_joint,
    run_linearization,
    run_shift,
    sample_gl,
    sample_matrix,
    tv_distance,
)
from .rings import NotAUnit, RingParams, invert_unit, ring_arithmetic, valuation
from .smith import (
    CokernelClass,
    DegreeMismatch,
    LocalMatrix,
    PolynomialSpec,
    PolynomialSyntaxError,
    char_matrix,
    cokernel_class,
    p_rank,
    poly_eval_matrix,
    smith_normal_form,
)
