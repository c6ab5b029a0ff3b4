"""
Verification-Bias Toolkit Configuration

Centralized configuration management for the estimators and the CLI.
All numerical defaults are defined here as constants or configurable parameters.
"""

from typing import Optional, Tuple
from dataclasses import dataclass
import os

from .common import as_name_tuple
from .errors import InvalidConfig


# ============================================================================
# GENERAL CONFIGURATION
# ============================================================================

# Two-sided significance level for every interval
DEFAULT_ALPHA = 0.05

# Version of the JSON report layout (bump on breaking changes)
JSON_SCHEMA_VERSION = "1.0"

# Significant digits in text reports
TEXT_DIGITS = 7


# ============================================================================
# LOGISTIC REGRESSION (IRLS)
# ============================================================================

IRLS_TOL = 1e-8
IRLS_MAX_ITER = 100

# |coefficient| beyond this at the iteration cap means the likelihood is unbounded
SEPARATION_BOUND = 30.0

# Coefficients past this size with a flat likelihood are treated as a boundary fit
BOUNDARY_COEF = 15.0

# Predictions are clamped to [PROB_CLAMP, 1 - PROB_CLAMP]
PROB_CLAMP = 1e-12


# ============================================================================
# BOOTSTRAP CONFIGURATION
# ============================================================================

DEFAULT_REPLICATES = 999
DEFAULT_MAX_FAILED_FRACTION = 0.05
CI_TYPES = ("bca", "percentile")
RESAMPLE_MODES = ("verified", "all")


# ============================================================================
# MULTIPLE IMPUTATION
# ============================================================================

MIN_IMPUTATIONS = 2
MI_REDRAW_CAP = 100


# ============================================================================
# EM CONFIGURATION
# ============================================================================

DEFAULT_T_MAX = 5000
DEFAULT_T_MAX_COVARIATES = 50000
DEFAULT_CUTOFF = 0.0002
MARGINALIZATIONS = ("records", "patterns")


# ============================================================================
# CLI CONFIGURATION
# ============================================================================

OUTPUT_FORMATS = ("text", "json", "csv")
DEFAULT_FORMAT = "text"
DEFAULT_THREADS = 1


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise InvalidConfig(f"alpha must be in (0, 1), got {alpha}")


# ============================================================================
# CONFIG DATACLASSES
# ============================================================================

@dataclass(frozen=True)
class BootConfig:
    """
    Bootstrap settings shared by EBG and EM.

    `seed=None` draws fresh entropy; `threads` only changes scheduling,
    never the result.
    """
    replicates: int = DEFAULT_REPLICATES
    seed: Optional[int] = None
    ci_type: str = "bca"
    alpha: float = DEFAULT_ALPHA
    max_failed_fraction: float = DEFAULT_MAX_FAILED_FRACTION
    resample: str = "verified"
    threads: int = DEFAULT_THREADS

    def __post_init__(self):
        if self.replicates < 2:
            raise InvalidConfig(f"replicates must be >= 2, got {self.replicates}")
        _check_alpha(self.alpha)
        if self.ci_type not in CI_TYPES:
            raise InvalidConfig(f"ci_type must be one of {CI_TYPES}, got {self.ci_type!r}")
        if self.resample not in RESAMPLE_MODES:
            raise InvalidConfig(
                f"resample must be one of {RESAMPLE_MODES}, got {self.resample!r}"
            )
        if not 0.0 <= self.max_failed_fraction < 1.0:
            raise InvalidConfig(
                f"max_failed_fraction must be in [0, 1), got {self.max_failed_fraction}"
            )
        if self.threads < 1:
            raise InvalidConfig(f"threads must be >= 1, got {self.threads}")


@dataclass(frozen=True)
class MiConfig:
    """Multiple-imputation settings. `m=None` means `default_m(data)`."""
    m: Optional[int] = None
    seed: Optional[int] = None
    covariates: Tuple[str, ...] = ()
    alpha: float = DEFAULT_ALPHA
    threads: int = DEFAULT_THREADS
    redraw_cap: int = MI_REDRAW_CAP

    def __post_init__(self):
        if self.m is not None and self.m < MIN_IMPUTATIONS:
            raise InvalidConfig(f"m must be >= {MIN_IMPUTATIONS}, got {self.m}")
        _check_alpha(self.alpha)
        if self.threads < 1:
            raise InvalidConfig(f"threads must be >= 1, got {self.threads}")
        if self.redraw_cap < 1:
            raise InvalidConfig(f"redraw_cap must be >= 1, got {self.redraw_cap}")
        object.__setattr__(self, "covariates", as_name_tuple(self.covariates))


@dataclass(frozen=True)
class EmConfig:
    """
    EM settings.

    `t_max=None` resolves to 5000 without covariates and 50000 with them.
    `boot=None` skips the bootstrap and returns point estimates only.
    """
    covariates: Tuple[str, ...] = ()
    mnar: bool = True
    t_max: Optional[int] = None
    cutoff: float = DEFAULT_CUTOFF
    alpha: float = DEFAULT_ALPHA
    verification_interaction: bool = False
    marginalization: str = "records"
    boot: Optional[BootConfig] = None

    def __post_init__(self):
        object.__setattr__(self, "covariates", as_name_tuple(self.covariates))
        if self.t_max is None:
            default = DEFAULT_T_MAX_COVARIATES if self.covariates else DEFAULT_T_MAX
            object.__setattr__(self, "t_max", default)
        if self.t_max < 1:
            raise InvalidConfig(f"t_max must be >= 1, got {self.t_max}")
        if not self.cutoff > 0:
            raise InvalidConfig(f"cutoff must be > 0, got {self.cutoff}")
        _check_alpha(self.alpha)
        if self.marginalization not in MARGINALIZATIONS:
            raise InvalidConfig(
                f"marginalization must be one of {MARGINALIZATIONS}, "
                f"got {self.marginalization!r}"
            )
        if self.verification_interaction and not self.mnar:
            raise InvalidConfig("verification_interaction requires mnar=True")


@dataclass
class RunConfig:
    """
    Front-end settings that do not change any estimate.

    Loaded from the environment when not given explicitly.
    """
    threads: int = DEFAULT_THREADS
    output_format: str = DEFAULT_FORMAT
    quiet: bool = False

    def __post_init__(self):
        if self.threads < 1:
            raise InvalidConfig(f"threads must be >= 1, got {self.threads}")
        if self.output_format not in OUTPUT_FORMATS:
            raise InvalidConfig(
                f"output format must be one of {OUTPUT_FORMATS}, got {self.output_format!r}"
            )

    @classmethod
    def from_env(cls) -> "RunConfig":
        """Create configuration from environment variables."""
        try:
            threads = int(os.environ.get("VBIAS_THREADS", DEFAULT_THREADS))
        except ValueError as e:
            raise InvalidConfig(f"VBIAS_THREADS must be an integer: {e}") from e
        return cls(
            threads=threads,
            output_format=os.environ.get("VBIAS_FORMAT", DEFAULT_FORMAT),
            quiet=os.environ.get("VBIAS_QUIET", "").lower() in ("1", "true", "yes"),
        )
