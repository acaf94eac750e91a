"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit 1,
estimation failures exit 3, anything else that goes wrong at run time
exits 2.
"""


class TwinphotonError(Exception):
    """Base class for package-specific failures."""


class ConfigError(TwinphotonError):
    """Invalid configuration file or parameter set."""


class TagFormatError(TwinphotonError):
    """Malformed or mis-ordered time-tag data.

    ``row`` is the 1-based data row that first violates the format,
    when known.
    """

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class EstimationError(TwinphotonError):
    """An estimator could not produce a result from the given data."""


class NoDipError(EstimationError):
    """No interference dip visible above the noise floor."""


class NoFringeError(EstimationError):
    """Fringe modulation indistinguishable from noise."""


class InsufficientCountsError(EstimationError):
    """Corrected count rates leave a non-positive denominator."""


class RankDeficiencyError(EstimationError):
    """Fit design matrix is rank deficient for the requested basis."""


class FitDomainError(EstimationError):
    """Fitted parameters left the physically meaningful domain."""
