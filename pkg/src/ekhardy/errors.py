"""Exception hierarchy shared by all modules.

Each class carries the CLI exit code it maps to so that the command line
front end can translate failures without a lookup table.
"""


class EKHardyError(Exception):
    """Base class for all package errors."""

    exit_code = 1
    kind = "error"


class SpecError(EKHardyError, ValueError):
    """Malformed or invalid parameter specification."""

    exit_code = 2
    kind = "invalid_spec"


class DeltaNeutralityError(SpecError):
    """Kernel parameters violate the delta-neutral slope condition."""

    kind = "delta_neutrality"


class DomainError(EKHardyError, ValueError):
    """Argument outside the domain where the quantity is defined."""

    exit_code = 2
    kind = "domain"


class PoleError(DomainError):
    """Gamma function argument on (or numerically at) a pole."""

    kind = "pole"


class DivergenceError(EKHardyError, ArithmeticError):
    """An integral or series that the analysis predicts to diverge."""

    exit_code = 3
    kind = "divergence"


class QuadratureError(EKHardyError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    exit_code = 4
    kind = "quadrature"


class ConvergenceError(QuadratureError):
    """A series did not converge within the configured term cap."""

    kind = "non_convergence"
