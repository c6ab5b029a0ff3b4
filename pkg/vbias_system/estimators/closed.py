"""
Closed-form and regression-based estimators under MAR.

- cca: complete case analysis, uncorrected, with Wald intervals
- bg:  Begg-Greenes Bayes-theorem correction with analytic Se/Sp intervals
- ebg: extended Begg-Greenes, logistic disease model with covariates,
       bootstrap intervals
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from ..common import as_name_tuple, log, warn_and_record
from ..config import DEFAULT_ALPHA, BootConfig
from ..data.dataset import Dataset, VerificationTable
from ..errors import BoundaryFit, DegenerateMargin, ZeroCell
from .logit import disease_design, fit_design, predict_prob
from .uncertainty import bootstrap_accuracy, wald_interval

MEASURES = ("Se", "Sp", "PPV", "NPV")


# ============================================================================
# RESULT TYPES
# ============================================================================

@dataclass(frozen=True)
class MeasureEstimate:
    estimate: float
    se: Optional[float] = None
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None

    @property
    def has_ci(self) -> bool:
        return self.ci_low is not None and self.ci_high is not None

    @property
    def ci_clipped(self) -> Optional[Tuple[float, float]]:
        """The interval clipped to [0, 1]."""
        if not self.has_ci:
            return None
        return max(0.0, self.ci_low), min(1.0, self.ci_high)

    @property
    def clipped(self) -> bool:
        return self.has_ci and (self.ci_low < 0.0 or self.ci_high > 1.0)


@dataclass(frozen=True)
class AccuracyResult:
    """
    Se, Sp, PPV and NPV from one estimator.

    `ci_kind` is wald, bca, percentile, rubin or none. `metadata` holds
    run settings (seed, replicates, m, covariates, convergence, warnings);
    `detail` the estimator-specific object (MiPooled, EmState, BootResult).
    """
    method: str
    measures: Dict[str, MeasureEstimate]
    ci_kind: str = "none"
    alpha: float = DEFAULT_ALPHA
    metadata: Dict[str, Any] = field(default_factory=dict)
    detail: Any = field(default=None, repr=False, compare=False)

    def __getitem__(self, measure: str) -> MeasureEstimate:
        return self.measures[measure]

    def estimates(self) -> np.ndarray:
        return np.array([self.measures[m].estimate for m in MEASURES])

    @property
    def se(self) -> float:
        return self.measures["Se"].estimate

    @property
    def sp(self) -> float:
        return self.measures["Sp"].estimate

    @property
    def ppv(self) -> float:
        return self.measures["PPV"].estimate

    @property
    def npv(self) -> float:
        return self.measures["NPV"].estimate


def _wald(estimate: float, se: Optional[float], alpha: float, ci: bool) -> MeasureEstimate:
    if not ci or se is None:
        return MeasureEstimate(estimate, se)
    low, high = wald_interval(estimate, se, alpha)
    return MeasureEstimate(estimate, se, low, high)


def from_bootstrap(method: str, point: np.ndarray, boot, alpha: float, metadata: dict) -> AccuracyResult:
    """AccuracyResult carrying bootstrap SEs and intervals."""
    measures = {
        m: MeasureEstimate(float(point[j]), float(boot.se[j]), float(boot.ci_low[j]), float(boot.ci_high[j]))
        for j, m in enumerate(MEASURES)
    }
    kinds = set(boot.ci_methods)
    metadata = dict(metadata)
    metadata.update(
        replicates=boot.requested,
        failed_replicates=boot.failed,
        seed=boot.seed,
        ci_methods=dict(zip(MEASURES, boot.ci_methods)),
    )
    kind = "bca" if "bca" in kinds else "percentile"
    return AccuracyResult(method, measures, kind, alpha, metadata, detail=boot)


def point_only(method: str, point: np.ndarray, alpha: float, metadata: dict, detail=None) -> AccuracyResult:
    measures = {m: MeasureEstimate(float(point[j])) for j, m in enumerate(MEASURES)}
    return AccuracyResult(method, measures, "none", alpha, metadata, detail)


# ============================================================================
# CCA
# ============================================================================

def _ratio_se(a: int, b: int) -> float:
    """SE of a/(a+b): sqrt(a b / (a+b)^3)."""
    return float(np.sqrt(a * b / (a + b) ** 3))


def _require_margins(table: VerificationTable) -> None:
    margins = {
        "s1+s0 (verified diseased)": table.s1 + table.s0,
        "r1+r0 (verified non-diseased)": table.r1 + table.r0,
        "s1+r1 (verified test-positive)": table.s1 + table.r1,
        "s0+r0 (verified test-negative)": table.s0 + table.r0,
    }
    empty = [name for name, value in margins.items() if value == 0]
    if empty:
        raise DegenerateMargin(f"zero margin(s): {', '.join(empty)}")


def cca(table: VerificationTable, alpha: float = DEFAULT_ALPHA, ci: bool = True) -> AccuracyResult:
    """Accuracy from the verified records only (biased unless MCAR)."""
    _require_margins(table)
    s1, s0, r1, r0 = table.s1, table.s0, table.r1, table.r0
    measures = {
        "Se": _wald(s1 / (s1 + s0), _ratio_se(s1, s0), alpha, ci),
        "Sp": _wald(r0 / (r1 + r0), _ratio_se(r0, r1), alpha, ci),
        "PPV": _wald(s1 / (s1 + r1), _ratio_se(s1, r1), alpha, ci),
        "NPV": _wald(r0 / (s0 + r0), _ratio_se(r0, s0), alpha, ci),
    }
    return AccuracyResult(
        "CCA", measures, "wald" if ci else "none", alpha,
        {"table": table.as_dict()},
    )


# ============================================================================
# BEGG-GREENES
# ============================================================================

def bg_point(table: VerificationTable) -> Tuple[float, float]:
    """(Se, Sp) with the verified disease rate of each test arm applied to the whole arm."""
    _require_margins(table)
    s1, s0, r1, r0 = table.s1, table.s0, table.r1, table.r0
    diseased_pos = table.n1 * s1 / (s1 + r1)
    diseased_neg = table.n0 * s0 / (s0 + r0)
    healthy_pos = table.n1 * r1 / (s1 + r1)
    healthy_neg = table.n0 * r0 / (s0 + r0)
    return (
        diseased_pos / (diseased_pos + diseased_neg),
        healthy_neg / (healthy_neg + healthy_pos),
    )


def bg_prevalence(table: VerificationTable) -> float:
    _require_margins(table)
    s1, s0, r1, r0 = table.s1, table.s0, table.r1, table.r0
    return (table.n1 * s1 / (s1 + r1) + table.n0 * s0 / (s0 + r0)) / table.n


def bg(table: VerificationTable, alpha: float = DEFAULT_ALPHA, ci: bool = True) -> AccuracyResult:
    """Begg-Greenes corrected Se/Sp; PPV and NPV are the complete-case ones."""
    complete = cca(table, alpha, ci)
    se, sp = bg_point(table)
    s1, s0, r1, r0 = table.s1, table.s0, table.r1, table.r0
    n, n1, n0 = table.n, table.n1, table.n0
    notes: list = []

    def corrected(name: str, estimate: float, cells: Tuple[int, int], terms) -> MeasureEstimate:
        if not ci:
            return MeasureEstimate(estimate)
        if 0 in cells:
            warn_and_record(notes, ZeroCell, f"zero cell in the variance of {name}; CI absent")
            return MeasureEstimate(estimate)
        var = (estimate * (1.0 - estimate)) ** 2 * (n / (n0 * n1) + terms())
        return _wald(estimate, float(np.sqrt(var)), alpha, True)

    measures = {
        "Se": corrected(
            "Se", se, (s1, s0),
            lambda: r1 / (s1 * (s1 + r1)) + r0 / (s0 * (s0 + r0)),
        ),
        "Sp": corrected(
            "Sp", sp, (r1, r0),
            lambda: s1 / (r1 * (s1 + r1)) + s0 / (r0 * (s0 + r0)),
        ),
        "PPV": complete["PPV"],
        "NPV": complete["NPV"],
    }
    metadata = {"table": table.as_dict(), "prevalence": bg_prevalence(table)}
    if notes:
        metadata["warnings"] = notes
    return AccuracyResult("BG", measures, "wald" if ci else "none", alpha, metadata)


# ============================================================================
# EXTENDED BEGG-GREENES
# ============================================================================

def accuracy_from_disease_probabilities(t: np.ndarray, p: np.ndarray) -> np.ndarray:
    """(Se, Sp, PPV, NPV) given P(D=1 | T, X) for every record.

    PPV and NPV go through Bayes' theorem with prevalence mean(p).
    """
    t = np.asarray(t, dtype=float)
    p = np.asarray(p, dtype=float)
    if t.sum() == 0 or (1.0 - t).sum() == 0:
        raise DegenerateMargin("every record has the same test result")
    se = np.sum(t * p) / np.sum(p)
    sp = np.sum((1.0 - t) * (1.0 - p)) / np.sum(1.0 - p)
    prev = float(np.mean(p))
    ppv = se * prev / (se * prev + (1.0 - sp) * (1.0 - prev))
    npv = sp * (1.0 - prev) / (sp * (1.0 - prev) + (1.0 - se) * prev)
    return np.array([se, sp, ppv, npv])


def ebg_point(
    data: Dataset,
    covariates: Sequence[str] = (),
    saturated: bool = False,
    notes: Optional[list] = None,
) -> np.ndarray:
    design = disease_design(covariates, saturated)
    columns = {"T": data.t}
    x = data.covariates(covariates)
    for j, name in enumerate(covariates):
        columns[name] = x[:, j]
    n = data.n
    rows = design.matrix(columns, n)
    verified = data.verified
    fitted = fit_design(
        design,
        {k: v[verified] for k, v in columns.items()},
        data.d[verified],
    )
    if fitted.boundary and notes is not None:
        notes.append(f"{BoundaryFit.__name__}: disease model at the separation boundary")
    return accuracy_from_disease_probabilities(data.t, predict_prob(fitted, rows))


def ebg(
    data: Dataset,
    covariates: Sequence[str] = (),
    saturated: bool = False,
    alpha: float = DEFAULT_ALPHA,
    boot: Optional[BootConfig] = None,
) -> AccuracyResult:
    """Extended Begg-Greenes. `boot=None` returns point estimates only."""
    covariates = as_name_tuple(covariates)
    notes: list = []
    point = ebg_point(data, covariates, saturated, notes)
    metadata = {"covariates": list(covariates), "saturated": saturated}
    if notes:
        metadata["warnings"] = notes
    if boot is None:
        return point_only("EBG", point, alpha, metadata)

    log(f"EBG bootstrap with covariates {list(covariates)}")
    result = bootstrap_accuracy(
        data,
        lambda d: ebg_point(d, covariates, saturated),
        boot,
        point=point,
    )
    return from_bootstrap("EBG", point, result, boot.alpha, metadata)
