"""
Multiple imputation of the missing disease status.

Each imputation draws the disease-model coefficients from their asymptotic
posterior, then every missing D from a Bernoulli with the implied
probability. Complete-case accuracy is computed per completed dataset and
pooled with Rubin's rules.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from ..common import as_name_tuple, log, root_entropy, substream, warn_and_record
from ..config import MIN_IMPUTATIONS, MiConfig
from ..data.dataset import Dataset, cross_table, missing_percentage
from ..errors import BoundaryFit, DegenerateImputation, DegenerateMargin
from .closed import MEASURES, AccuracyResult, MeasureEstimate, cca
from .logit import LogitFit, disease_design, fit_design
from .uncertainty import t_quantile


@dataclass(frozen=True)
class MiPooled:
    """Rubin pooling of m complete-data analyses (columns follow MEASURES)."""
    m: int
    estimates: np.ndarray       # m x 4, per-imputation point estimates
    variances: np.ndarray       # m x 4, per-imputation squared SEs
    qbar: np.ndarray
    ubar: np.ndarray
    b: np.ndarray
    t_total: np.ndarray
    df: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    redraws: int = 0


def default_m(data: Dataset) -> int:
    """Number of imputations: the missing percentage rounded up, at least 2."""
    return max(MIN_IMPUTATIONS, math.ceil(missing_percentage(data)))


def _design_columns(data: Dataset, covariates: Tuple[str, ...]) -> dict:
    columns = {"T": data.t}
    x = data.covariates(covariates)
    for j, name in enumerate(covariates):
        columns[name] = x[:, j]
    return columns


def fit_imputation_model(data: Dataset, covariates: Sequence[str] = ()) -> LogitFit:
    """D ~ T + X on the verified records."""
    covariates = as_name_tuple(covariates)
    design = disease_design(covariates)
    verified = data.verified
    columns = {k: v[verified] for k, v in _design_columns(data, covariates).items()}
    return fit_design(design, columns, data.d[verified])


def impute_once(
    data: Dataset,
    covariates: Sequence[str],
    rng: np.random.Generator,
    fitted: Optional[LogitFit] = None,
) -> Dataset:
    """One completed copy of `data`; verified records are left as they are."""
    if data.n_unverified == 0:
        return data
    covariates = as_name_tuple(covariates)
    if fitted is None:
        fitted = fit_imputation_model(data, covariates)
    missing = ~data.verified
    design = disease_design(covariates)
    rows = design.matrix(
        {k: v[missing] for k, v in _design_columns(data, covariates).items()},
        int(missing.sum()),
    )
    beta = rng.multivariate_normal(fitted.coefficients, fitted.covariance())
    prob = expit(rows @ beta)
    d = data.d.copy()
    d[missing] = (rng.random(prob.size) < prob).astype(float)
    return data.with_disease(d)


def pool(estimates: np.ndarray, variances: np.ndarray, alpha: float) -> dict:
    """Rubin's rules over an m x k array of estimates and within-variances."""
    Q = np.asarray(estimates, dtype=float)
    U = np.asarray(variances, dtype=float)
    m = Q.shape[0]
    same_q = np.all(Q == Q[0], axis=0)
    same_u = np.all(U == U[0], axis=0)
    qbar = np.where(same_q, Q[0], Q.mean(axis=0))
    ubar = np.where(same_u, U[0], U.mean(axis=0))
    b = np.where(same_q, 0.0, Q.var(axis=0, ddof=1))
    t_total = ubar + (1.0 + 1.0 / m) * b

    df = np.full(Q.shape[1], np.inf)
    between = b > 0
    df[between] = (m - 1) * (1.0 + ubar[between] / ((1.0 + 1.0 / m) * b[between])) ** 2

    half = np.array([t_quantile(1.0 - alpha / 2.0, v) for v in df]) * np.sqrt(t_total)
    return {
        "qbar": qbar, "ubar": ubar, "b": b, "t_total": t_total, "df": df,
        "ci_low": qbar - half, "ci_high": qbar + half,
    }


def acc_mi(data: Dataset, config: Optional[MiConfig] = None) -> AccuracyResult:
    """MI estimate of Se, Sp, PPV and NPV with Rubin intervals."""
    config = config or MiConfig()
    covariates = config.covariates
    m = config.m or default_m(data)
    notes: list = []

    fitted = fit_imputation_model(data, covariates)
    if fitted.boundary:
        warn_and_record(notes, BoundaryFit, "imputation model at the separation boundary")
    entropy = root_entropy(config.seed)

    def analyse(k: int):
        for attempt in range(config.redraw_cap):
            completed = impute_once(data, covariates, substream(entropy, k, attempt), fitted)
            try:
                result = cca(cross_table(completed), config.alpha, ci=False)
            except DegenerateMargin:
                continue
            q = result.estimates()
            u = np.array([result[name].se for name in MEASURES]) ** 2
            return q, u, attempt
        raise DegenerateImputation(
            f"imputation {k} left a zero margin after {config.redraw_cap} draws"
        )

    log(f"MI: {m} imputations of {data.n_unverified} missing disease values")
    if config.threads == 1:
        runs = [analyse(k) for k in range(m)]
    else:
        with ThreadPoolExecutor(max_workers=config.threads) as executor:
            runs = list(executor.map(analyse, range(m)))

    estimates = np.vstack([r[0] for r in runs])
    variances = np.vstack([r[1] for r in runs])
    redraws = int(sum(r[2] for r in runs))
    pooled = MiPooled(m=m, estimates=estimates, variances=variances, redraws=redraws,
                      **pool(estimates, variances, config.alpha))

    measures = {
        name: MeasureEstimate(
            float(pooled.qbar[j]),
            float(np.sqrt(pooled.t_total[j])),
            float(pooled.ci_low[j]),
            float(pooled.ci_high[j]),
        )
        for j, name in enumerate(MEASURES)
    }
    metadata = {
        "m": m,
        "seed": config.seed,
        "covariates": list(covariates),
        "redraws": redraws,
        "df": {name: float(pooled.df[j]) for j, name in enumerate(MEASURES)},
        "imputation_model": fitted.as_dict(),
    }
    if notes:
        metadata["warnings"] = notes
    return AccuracyResult("MI", measures, "rubin", config.alpha, metadata, detail=pooled)
