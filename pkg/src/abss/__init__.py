"""ABS solvers for linear systems with deterministic or Gaussian right-hand sides."""

from .core import (
    AbsSolution,
    AbsState,
    IllConditionedStep,
    IncompatibleSystem,
    InvalidInitialization,
    Problem,
    Strategy,
    Tolerances,
    UnsupportedShape,
    solve,
    solve_batch,
    variety_point,
    verify_factorization,
    verify_nullspace,
)
from .gaussian import (
    AffineScalar,
    AffineVector,
    DimensionError,
    DistSummary,
    GaussianBasis,
    combine,
    cov_of,
    cross_cov,
    is_surely_zero,
    mean_of,
)
from .montecarlo import McConfig, McReport, compare_cov, run_mc
from .stochastic import (
    StochasticProblem,
    alpha_interval,
    alpha_recursion,
    alpha_summary,
    residual_distribution,
    residual_form,
    solve_s,
)

__version__ = "0.1.0"
