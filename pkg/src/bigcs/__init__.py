"""Matrix-free compressive sensing for large grayscale images.

Sense with a structurally random projection (subsampled DCT of a randomly
permuted image), recover with a tree-weighted l1 solver.  No dense matrix
is ever formed; everything is driven through operator applications.
"""

from .bundle import MeasurementBundle, read_bundle, write_bundle
from .cli import RecoveryReport, recover_bundle, sense_array
from .errors import (BigcsError, DivergenceError, DomainError, FormatError,
                     ShapeError)
from .images import read_image, to_square_pow2, write_image
from .linop import (LinearOperator, SrmSpec, compose, dct_op, diag_op,
                    identity_op, materialize, perm_op, power_iteration,
                    srm_op, subsample_op)
from .metrics import psnr, ssim
from .solver import (LassoProblem, SolverConfig, SolverTrace, armijo_search,
                     default_lambda, delta, gradient_step, objective,
                     soft_threshold, solve_lasso)
from .tssp import (TsspConfig, TsspResult, WeightVector, correlations,
                   grow_level, init_weights, prune, recover_tssp,
                   select_roots)
from .wavelet import (CoefficientVector, WaveletLayout, default_levels, dwt2,
                      idwt2, wavelet_synthesis_op)

__version__ = "0.1.0"

__all__ = [
    "BigcsError", "CoefficientVector", "DivergenceError", "DomainError",
    "FormatError", "LassoProblem", "LinearOperator", "MeasurementBundle",
    "RecoveryReport", "ShapeError", "SolverConfig", "SolverTrace", "SrmSpec",
    "TsspConfig", "TsspResult", "WaveletLayout", "WeightVector",
    "armijo_search", "compose", "correlations", "dct_op", "default_lambda",
    "default_levels", "delta", "diag_op", "dwt2", "gradient_step",
    "grow_level", "identity_op", "idwt2", "init_weights", "materialize",
    "objective", "perm_op", "power_iteration", "prune", "psnr",
    "read_bundle", "read_image", "recover_bundle", "recover_tssp",
    "select_roots", "sense_array", "soft_threshold", "solve_lasso", "srm_op",
    "ssim", "subsample_op", "to_square_pow2", "wavelet_synthesis_op",
    "write_bundle", "write_image",
]
