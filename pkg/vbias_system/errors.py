"""Error and warning types.

Every failure the library raises derives from `VerificationBiasError` and
carries a machine-readable `category` plus the CLI exit code it maps to.
"""

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


class VerificationBiasError(Exception):
    category = "error"
    exit_code = 1


# --- usage / configuration ---------------------------------------------------

class UsageError(VerificationBiasError):
    category = "usage"
    exit_code = EXIT_USAGE


class InvalidConfig(UsageError, ValueError):
    category = "invalid_config"


class InvalidSpec(UsageError, ValueError):
    category = "invalid_spec"


# --- data -------------------------------------------------------------------

class DataError(VerificationBiasError):
    category = "data"
    exit_code = EXIT_DATA


class MalformedInput(DataError, ValueError):
    category = "malformed_input"


class EmptyDataset(DataError, ValueError):
    category = "empty_dataset"


# --- numerical --------------------------------------------------------------

class NumericalError(VerificationBiasError):
    category = "numerical"
    exit_code = EXIT_NUMERICAL


class RankDeficientDesign(NumericalError):
    category = "rank_deficient_design"


class SeparationDetected(NumericalError):
    category = "separation_detected"


class DimensionMismatch(NumericalError, ValueError):
    category = "dimension_mismatch"


class DegenerateMargin(NumericalError):
    category = "degenerate_margin"


class DegenerateImputation(NumericalError):
    category = "degenerate_imputation"


class TooManyFailedReplicates(NumericalError):
    category = "too_many_failed_replicates"


class DomainError(NumericalError, ValueError):
    category = "domain_error"


# --- warning states ---------------------------------------------------------

class NotConverged(UserWarning):
    """EM stopped at t_max; estimates are returned and flagged."""


class ZeroCell(UserWarning):
    """A variance term divides by a zero cell; the CI is reported absent."""


class DegenerateDistribution(UserWarning):
    """BCa could not be formed; the percentile interval (or a point) is used."""


class BoundaryFit(UserWarning):
    """A logistic fit hit quasi-complete separation; predictions sit at 0 or 1."""
