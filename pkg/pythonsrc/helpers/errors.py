"""Exception hierarchy shared by the library, the handlers and the CLI.

Library code raises; only ``app.main`` turns exceptions into exit codes.
"""

EXIT_CONFIG_ERROR = 64
EXIT_NUMERICAL_ERROR = 70


class HDichotomyError(RuntimeError):
    exit_code = EXIT_NUMERICAL_ERROR


class ConfigError(HDichotomyError):
    """Invalid run configuration, unknown builtin or malformed input file."""

    exit_code = EXIT_CONFIG_ERROR


class NumericalError(HDichotomyError):
    """Base class for every failure of the numerical layer."""


class DomainError(NumericalError):
    """Argument outside the domain (t <= a0, y <= 0, mismatched families)."""


class ConvergenceError(NumericalError):
    pass


class SingularMatrixError(NumericalError):
    pass


class IntegrationError(NumericalError):
    """Non-finite values while integrating a matrix ODE."""


class DegenerateFitError(NumericalError):
    """All norm samples coincide, the envelope slope is undetermined."""


class RankError(NumericalError):
    pass


class EmptyRegionError(NumericalError):
    """No grid time satisfies h(t) >= e^C h(a0*)."""


class NoGapError(NumericalError):
    """No singular-value gap at the requested horizon."""


class ConditioningError(NumericalError):
    pass


class RangeError(NumericalError):
    """Constant outside the range where a formula is meaningful."""
