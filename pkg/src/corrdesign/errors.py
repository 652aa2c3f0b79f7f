class DesignError(Exception):
    """Base class for errors raised by corrdesign."""


class ConfigError(DesignError, ValueError):
    """Invalid parameters or configuration (CLI exit code 2)."""


class DomainError(DesignError, ValueError):
    """A point lies outside the design space of a basis."""


class SmoothingRequiredError(DesignError):
    """A singular kernel was used where a finite Gram matrix is needed."""


class NumericalError(DesignError):
    """Numerical failure (CLI exit code 3)."""


class NearSingularError(NumericalError):
    def __init__(self, message, condition_number=float("inf")):
        super().__init__(f"{message} (condition number {condition_number:.3e})")
        self.condition_number = condition_number


class SingularDiagonalError(NumericalError):
    """Singular kernel evaluated at coinciding atoms under the 'error' policy."""


class StepRejectedError(NumericalError):
    def __init__(self, message, psi_value):
        super().__init__(f"{message} (psi = {psi_value:.6g})")
        self.psi_value = psi_value


class QuadratureError(NumericalError):
    """Quadrature did not reach the requested accuracy."""


class BracketError(NumericalError):
    """Root bracketing failed."""


class IncompatibleBasisError(DesignError, ValueError):
    """Bases do not span the same function space."""
