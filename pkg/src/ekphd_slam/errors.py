"""Exception types shared across the package."""


class EkphdError(Exception):
    """Base class for all package-specific errors."""


class DegenerateGeometry(EkphdError):
    """A required direction vector is (numerically) zero-length."""


class SingularInformation(EkphdError):
    """Measurement information matrix is too ill-conditioned to invert."""


class SingularInnovation(EkphdError):
    """Stacked innovation covariance is not invertible to tolerance."""


class SingularPrior(EkphdError):
    """Prior covariance cannot be inverted."""


class SingularFim(EkphdError):
    """Fisher information matrix is not invertible to tolerance."""


class UnknownLandmark(EkphdError):
    """Requested landmark id is not present in the FIM index map."""


class LengthMismatch(EkphdError):
    """Per-run series do not all have the same length."""


class InvariantViolation(EkphdError):
    """An in-run filter consistency check failed."""


class ConfigError(EkphdError):
    """Invalid or unparseable experiment configuration."""
