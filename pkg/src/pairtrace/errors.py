"""Exception hierarchy and the exit codes used by the command line front end."""


class PairtraceError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ValidationError(PairtraceError):
    """Invalid configuration or physically inadmissible input."""

    exit_code = 2


class WavelengthRangeError(ValidationError):
    """Wavelength outside the validity range of a material model."""


class SamplingError(ValidationError):
    """Requested delay grid too coarse for the spectrum being transformed."""


class ConvergenceError(PairtraceError):
    """Quadrature did not converge; carries the best available estimate."""

    exit_code = 3

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class SolverError(PairtraceError):
    """Root bracketing or refinement failed."""

    exit_code = 4
