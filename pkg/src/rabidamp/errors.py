"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid parameters or configuration values."""


class NumericalError(ArithmeticError):
    """A numerical routine failed (step-size underflow, non-convergence)."""


class UnsupportedTransformError(NumericalError):
    """A spectral model has no regular time-domain correlation function."""


class NotApplicableError(ValueError):
    """Operation is not defined for the given model variant."""


class UnphysicalRateWarning(RuntimeWarning):
    """A dephasing rate came out negative and was clamped to zero."""
