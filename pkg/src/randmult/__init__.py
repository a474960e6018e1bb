"""Randomized multipliers for Gaussian elimination without pivoting and for
low-rank approximation by random sketching."""

from .elimination import (
    LuFactors,
    block_ge_factor,
    genp_factor,
    gepp_factor,
    iterative_refine,
    preprocess_solve,
    safety_report,
    schur_complement,
    solve_with_retry,
)
from .errors import (
    NumericalFailure,
    RankDeficientError,
    SingularMatrixError,
    SingularPivotBlockError,
    SvdConvergenceError,
    ZeroPivotError,
)
from .lowrank import error_bounds, posterior_estimate, range_find, srft_sketch_check, subspace_residual
from .multipliers import Kind, MultiplierSpec, generate, probe_norm_stats
from .structured import CirculantMatrix, ToeplitzBlock

__version__ = "0.1.0"
