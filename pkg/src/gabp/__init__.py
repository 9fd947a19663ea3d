"""Gaussian belief propagation linear solver and benchmark harness."""

from .acceleration import AccelConfig, accelerated_solve, aitken_extrapolate, aitken_solve, steffensen_solve
from .classical import (
    ClassicalOptions,
    StationaryIteration,
    build_stationary,
    gauss_seidel_solve,
    jacobi_solve,
    optimal_sor_alpha,
    sor_solve,
)
from .graph import DegenerateProductError, GaussianGraph, ScalarGaussian, build_graph, gaussian_product
from .linalg import (
    MatrixMarketError,
    RectMatrix,
    SingularMatrixError,
    SpectralReport,
    SymSystem,
    ZeroDiagonalError,
    condition_number_normal,
    direct_solve_ge,
    dominance_class,
    parse_matrix_market,
    parse_vector,
    residual_norm_per_eq,
    spectral_radius_gabp_test,
    system_from_matrix_market,
    write_matrix_market,
    write_vector,
)
from .problems import ProblemInstance, decorrelator_detect, gen_cdma, gen_nonpsd3, gen_poisson, gen_random, gen_toy3, load_instance
from .pseudoinverse import AugmentedSystem, build_augmented, normal_equations_oracle, solve_least_squares
from .solver import (
    MessageState,
    SolveOptions,
    SolveReport,
    broadcast_sweep,
    compute_message,
    compute_message_max_product,
    infer_marginals,
    initial_state,
    jacobi_mode_solve,
    min_sum_solve,
    solve,
    sweep,
)

__all__ = [name for name in dir() if not name.startswith("_")]
