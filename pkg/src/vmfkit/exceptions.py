"""Exception hierarchy shared by all vmfkit modules."""


class VmfkitError(Exception):
    """Base class for library errors."""


class DomainError(VmfkitError, ValueError):
    """Argument outside the mathematical domain of a function."""


class DenominatorSingular(VmfkitError, ArithmeticError):
    """The ODE right-hand side denominator vanished (trajectory left the admissible branch)."""


class StepSizeUnderflow(VmfkitError, ArithmeticError):
    """Adaptive step size dropped below the representable minimum."""


class BoundaryTooClose(VmfkitError, ValueError):
    """Requested radius too close to the unit sphere."""


class OutOfRange(VmfkitError, ValueError):
    """Query beyond the solved radius of a profile."""


class NonPositiveDenominator(VmfkitError, ArithmeticError):
    """Refinement denominator ``1 - r**2 - 1/g''(r)`` is not positive."""


class NotConverged(VmfkitError, ArithmeticError):
    """Root finder residual above tolerance."""

    def __init__(self, message, kappa=None, residual=None):
        super().__init__(message)
        self.kappa = kappa
        self.residual = residual


class NotUnitNorm(VmfkitError, ValueError):
    """Input vector is not on the unit sphere."""


class EmptyData(VmfkitError, ValueError):
    """No data (or no positive weight) supplied."""


class DimensionMismatch(VmfkitError, ValueError):
    """Model and data dimensions differ."""


class LengthMismatch(VmfkitError, ValueError):
    """Paired sequences have different lengths."""


class SchemaVersionError(VmfkitError, ValueError):
    """Persisted file carries an unsupported schema version."""


class EmptyCorpus(VmfkitError, ValueError):
    """Corpus has no documents or an empty vocabulary."""


class ClassTooSmall(VmfkitError, ValueError):
    """A class has fewer documents than requested for subsampling."""
