"""Exception types raised across the package."""


class DeforgeError(Exception):
    """Base class for all package errors."""


class GridError(DeforgeError, ValueError):
    """Operation requested on a grid that cannot support it."""


class ReferenceZeroError(DeforgeError, ZeroDivisionError):
    """Relative metric requested against an all-zero reference."""


class SolvabilityError(DeforgeError, ValueError):
    """Periodic Poisson right-hand side with nonzero mean."""


class BandLimitError(DeforgeError, ValueError):
    """Field carries energy above the band an operation can represent."""


class ParameterError(DeforgeError, ValueError):
    """Equation or model parameter outside its admissible range."""


class StabilityError(DeforgeError, ValueError):
    """Time step too coarse for a stable integration."""


class SingularityError(DeforgeError, ValueError):
    """Prescribed trajectory approaches a division singularity."""


class RankDeficientError(DeforgeError, ArithmeticError):
    """Jacobian lacks full column rank."""


class DivergenceError(DeforgeError, RuntimeError):
    """Training loss exceeded the divergence guard."""


class BlobFormatError(DeforgeError, ValueError):
    """Malformed binary tensor blob."""


class DatasetError(DeforgeError, RuntimeError):
    """Missing or inconsistent dataset contents."""


class ConfigError(DeforgeError, ValueError):
    """Run configuration failed validation."""
