"""Optimal designs for least squares estimation under correlated errors."""

from .basis import RegressionBasis
from .designs import (Design, DensityDesign, arcsine_design, equispaced_design, generalized_arcsine_design,
                      named_design, quantile_design, triangular_lattice_design, two_point_design, uniform_design)
from .errors import (ConfigError, DesignError, NearSingularError, NumericalError, QuadratureError,
                     SingularDiagonalError, StepRejectedError)
from .kernels import CovarianceKernel
from .moments import b_matrix, cov_matrix, exact_lse_cov, info_matrix, wlse_misspec_cov
from .optimality import (Criterion, OptimalityReport, c_optimality_check, necessary_condition_check,
                         universal_optimality_check)
from .solver import SolverConfig, efficiency, multiplicative_step, solve

__version__ = "0.1.0"
