"""
Synthetic cohorts with known accuracy and a chosen verification mechanism.

A cohort is generated in four vectorised draws: covariates, disease,
index test given disease, and verification. Disease status is then
blanked for unverified patients. The truth travels next to the Dataset in
`SimulationResult` and is never part of the Dataset itself.

Spec files are plain key/value text read with python-dotenv:

    N=100000
    PREVALENCE=0.3
    SE_TRUE=0.8
    SP_TRUE=0.7
    MECHANISM=MNAR             # MCAR | MAR | MNAR
    VERIFY_INTERCEPT=-2        # "inf" verifies everyone
    VERIFY_TEST=2
    VERIFY_DISEASE=1.5
    SEED=7
    COVARIATE_AGE="continuous mean=0 sd=1 disease=1.0 test=0.5 verify=0.5"
    COVARIATE_MALE="binary p=0.45 disease=0.3"
"""

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from dotenv import dotenv_values
from scipy.special import expit, logit

from ..common import log
from ..errors import InvalidSpec
from .dataset import Dataset

MECHANISMS = ("MCAR", "MAR", "MNAR")
COVARIATE_KINDS = ("binary", "continuous")
_RESERVED = ("T", "D", "V")


@dataclass(frozen=True)
class CovariateSpec:
    """One covariate and its effects on the disease, test and verification logits."""
    name: str
    kind: str = "binary"
    p: float = 0.5
    mean: float = 0.0
    sd: float = 1.0
    disease: float = 0.0
    test: float = 0.0
    verify: float = 0.0

    def __post_init__(self):
        if not self.name or self.name in _RESERVED:
            raise InvalidSpec(f"invalid covariate name {self.name!r}")
        if self.kind not in COVARIATE_KINDS:
            raise InvalidSpec(f"covariate kind must be one of {COVARIATE_KINDS}, got {self.kind!r}")
        if self.kind == "binary" and not 0.0 < self.p < 1.0:
            raise InvalidSpec(f"covariate {self.name}: p must be in (0, 1), got {self.p}")
        if self.kind == "continuous" and not self.sd > 0:
            raise InvalidSpec(f"covariate {self.name}: sd must be > 0, got {self.sd}")

    @classmethod
    def parse(cls, name: str, text: str) -> "CovariateSpec":
        """Parses 'binary p=0.4 disease=0.5 ...' style descriptions."""
        parts = text.split()
        if not parts:
            raise InvalidSpec(f"covariate {name}: empty description")
        values = {}
        for item in parts[1:]:
            key, sep, raw = item.partition("=")
            if not sep or key not in ("p", "mean", "sd", "disease", "test", "verify"):
                raise InvalidSpec(f"covariate {name}: cannot parse {item!r}")
            try:
                values[key] = float(raw)
            except ValueError as e:
                raise InvalidSpec(f"covariate {name}: {key} must be a number") from e
        return cls(name=name, kind=parts[0].lower(), **values)


@dataclass(frozen=True)
class SimSpec:
    """
    Cohort size, true accuracy and verification mechanism.

    Under MCAR only the verification intercept may be non-zero; under MAR
    the disease coefficient must be zero.
    """
    n: int
    prevalence: float
    se_true: float
    sp_true: float
    mechanism: str = "MCAR"
    verify_intercept: float = 0.0
    verify_test: float = 0.0
    verify_disease: float = 0.0
    covariates: Tuple[CovariateSpec, ...] = ()
    seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "covariates", tuple(self.covariates))
        if self.n < 1:
            raise InvalidSpec(f"n must be >= 1, got {self.n}")
        for name in ("prevalence", "se_true", "sp_true"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise InvalidSpec(f"{name} must be in (0, 1), got {value}")
        if self.mechanism not in MECHANISMS:
            raise InvalidSpec(f"mechanism must be one of {MECHANISMS}, got {self.mechanism!r}")
        if np.isnan(self.verify_intercept):
            raise InvalidSpec("verify_intercept must be a number or +/-inf")
        for name in ("verify_test", "verify_disease"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidSpec(f"{name} must be finite")
        names = [c.name for c in self.covariates]
        if len(set(names)) != len(names):
            raise InvalidSpec(f"duplicate covariate names: {names}")

        if self.mechanism == "MCAR":
            shifted = [c.name for c in self.covariates if c.verify != 0]
            if self.verify_test != 0 or self.verify_disease != 0 or shifted:
                raise InvalidSpec("MCAR verification may only have an intercept")
        elif self.mechanism == "MAR" and self.verify_disease != 0:
            raise InvalidSpec("MAR verification cannot depend on disease status")

    @property
    def covariate_names(self) -> Tuple[str, ...]:
        return tuple(c.name for c in self.covariates)


@dataclass(frozen=True)
class SimulationTruth:
    """True parameters plus accuracy in the complete (fully verified) cohort."""
    prevalence: float
    se_true: float
    sp_true: float
    mechanism: str
    empirical_prevalence: float
    empirical_se: float
    empirical_sp: float
    empirical_ppv: float
    empirical_npv: float
    verified_fraction: float
    seed: Optional[int] = None

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SimulationResult:
    dataset: Dataset
    truth: SimulationTruth
    complete: Dataset = field(repr=False)


def _ratio(num: float, den: float) -> float:
    return float(num / den) if den > 0 else float("nan")


def generate(spec: SimSpec) -> SimulationResult:
    """Draws one cohort; identical specs (seed included) give identical cohorts."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n

    x = np.empty((n, len(spec.covariates)))
    for j, cov in enumerate(spec.covariates):
        if cov.kind == "binary":
            x[:, j] = (rng.random(n) < cov.p).astype(float)
        else:
            x[:, j] = rng.normal(cov.mean, cov.sd, size=n)

    disease_shift = x @ np.array([c.disease for c in spec.covariates]) if spec.covariates else 0.0
    test_shift = x @ np.array([c.test for c in spec.covariates]) if spec.covariates else 0.0
    verify_shift = x @ np.array([c.verify for c in spec.covariates]) if spec.covariates else 0.0

    d = (rng.random(n) < expit(logit(spec.prevalence) + disease_shift)).astype(float)
    test_base = np.where(d == 1, logit(spec.se_true), logit(1.0 - spec.sp_true))
    t = (rng.random(n) < expit(test_base + test_shift)).astype(float)
    verify_logit = (
        spec.verify_intercept
        + spec.verify_test * t
        + spec.verify_disease * d
        + verify_shift
    )
    v = rng.random(n) < expit(verify_logit)

    names = spec.covariate_names
    complete = Dataset(t, d, x, names)
    observed = Dataset(t, np.where(v, d, np.nan), x, names)

    tp = float(np.sum((t == 1) & (d == 1)))
    tn = float(np.sum((t == 0) & (d == 0)))
    truth = SimulationTruth(
        prevalence=spec.prevalence,
        se_true=spec.se_true,
        sp_true=spec.sp_true,
        mechanism=spec.mechanism,
        empirical_prevalence=float(d.mean()),
        empirical_se=_ratio(tp, d.sum()),
        empirical_sp=_ratio(tn, (1 - d).sum()),
        empirical_ppv=_ratio(tp, t.sum()),
        empirical_npv=_ratio(tn, (1 - t).sum()),
        verified_fraction=float(v.mean()),
        seed=spec.seed,
    )
    log(f"Simulated {n} records ({spec.mechanism}), {truth.verified_fraction:.1%} verified")
    return SimulationResult(dataset=observed, truth=truth, complete=complete)


# ============================================================================
# SPEC FILES
# ============================================================================

def _number(values: dict, key: str, default: Optional[float] = None) -> float:
    raw = values.get(key)
    if raw is None or raw == "":
        if default is None:
            raise InvalidSpec(f"spec file is missing {key}")
        return default
    try:
        return float(raw)
    except ValueError as e:
        raise InvalidSpec(f"{key} must be a number, got {raw!r}") from e


def load_sim_spec(path: Union[str, Path]) -> SimSpec:
    """Reads a SimSpec from a key/value file (see module docstring)."""
    path = Path(path)
    if not path.is_file():
        raise InvalidSpec(f"spec file not found: {path}")
    values = dotenv_values(path)

    covariates = [
        CovariateSpec.parse(key[len("COVARIATE_"):], text or "")
        for key, text in values.items()
        if key.startswith("COVARIATE_")
    ]
    seed = values.get("SEED")
    try:
        n = int(_number(values, "N"))
        parsed_seed = int(seed) if seed not in (None, "") else None
    except ValueError as e:
        raise InvalidSpec(f"N and SEED must be integers: {e}") from e
    return SimSpec(
        n=n,
        prevalence=_number(values, "PREVALENCE"),
        se_true=_number(values, "SE_TRUE"),
        sp_true=_number(values, "SP_TRUE"),
        mechanism=(values.get("MECHANISM") or "MCAR").upper(),
        verify_intercept=_number(values, "VERIFY_INTERCEPT", 0.0),
        verify_test=_number(values, "VERIFY_TEST", 0.0),
        verify_disease=_number(values, "VERIFY_DISEASE", 0.0),
        covariates=tuple(covariates),
        seed=parsed_seed,
    )
