"""
Weighted binary logistic regression by IRLS.

Shared engine of the EBG, MI and EM estimators. Fits are pure functions of
their inputs and return an immutable `LogitFit`.
"""

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.special import expit, log_expit

from ..config import (
    BOUNDARY_COEF,
    IRLS_MAX_ITER,
    IRLS_TOL,
    PROB_CLAMP,
    SEPARATION_BOUND,
)
from ..errors import (
    BoundaryFit,
    DimensionMismatch,
    RankDeficientDesign,
    SeparationDetected,
)

INTERCEPT = "(Intercept)"

# Fitted probabilities this close to the response count as a perfect fit
_PERFECT_FIT = 1e-6


# ============================================================================
# DESIGN
# ============================================================================

@dataclass(frozen=True)
class DesignSpec:
    """
    Model formula: intercept + `terms`.

    A term is a column name ("T", "D", "V" or a covariate) or a pairwise
    interaction written "A:B".
    """
    response: str
    terms: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for term in self.terms:
            if term.count(":") > 1:
                raise ValueError(f"only pairwise interactions are supported, got {term!r}")

    @property
    def columns(self) -> Tuple[str, ...]:
        return (INTERCEPT,) + self.terms

    def variables(self) -> Tuple[str, ...]:
        """Every column name the design reads, in first-use order."""
        seen = []
        for term in self.terms:
            for name in term.split(":"):
                if name not in seen:
                    seen.append(name)
        return tuple(seen)

    def matrix(self, columns: Mapping[str, np.ndarray], n: int) -> np.ndarray:
        """Builds the n x p design matrix from named column vectors."""
        missing = [v for v in self.variables() if v not in columns]
        if missing:
            raise DimensionMismatch(
                f"design for {self.response} needs {missing}; have {sorted(columns)}"
            )
        out = np.ones((n, len(self.terms) + 1))
        for j, term in enumerate(self.terms, start=1):
            for name in term.split(":"):
                out[:, j] *= np.asarray(columns[name], dtype=float)
        return out


def disease_design(covariates: Sequence[str] = (), saturated: bool = False) -> DesignSpec:
    """D ~ T + X, plus every T:X interaction when `saturated`."""
    covariates = tuple(covariates)
    terms = ("T",) + covariates
    if saturated:
        terms += tuple(f"T:{c}" for c in covariates)
    return DesignSpec("D", terms)


# ============================================================================
# FIT
# ============================================================================

@dataclass(frozen=True)
class LogitFit:
    """Fitted logistic regression."""
    coefficients: np.ndarray
    columns: Tuple[str, ...] = ()
    converged: bool = True
    iterations: int = 0
    boundary: bool = False                # quasi-separation; some p at 0 or 1
    fisher_information: Optional[np.ndarray] = field(default=None, repr=False)
    log_likelihood: float = float("nan")

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=float)
        coef.flags.writeable = False
        object.__setattr__(self, "coefficients", coef)
        if not self.columns:
            object.__setattr__(
                self, "columns", tuple(f"x{j}" for j in range(coef.size))
            )

    def covariance(self) -> np.ndarray:
        """Inverse Fisher information (pseudo-inverse when singular)."""
        if self.fisher_information is None:
            raise DimensionMismatch("fit carries no Fisher information")
        try:
            return np.linalg.inv(self.fisher_information)
        except np.linalg.LinAlgError:
            return np.linalg.pinv(self.fisher_information)

    def as_dict(self) -> dict:
        return {name: float(c) for name, c in zip(self.columns, self.coefficients)}


def _check_rank(X: np.ndarray, sqrt_w: np.ndarray) -> None:
    n, p = X.shape
    if n < p:
        raise RankDeficientDesign(f"{n} positive-weight rows for {p} coefficients")
    _, r, _ = linalg.qr(X * sqrt_w[:, None], mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = max(n, p) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int(np.sum(diag > tol))
    if rank < p:
        raise RankDeficientDesign(f"design has rank {rank} < {p} columns")


def _weighted_loglik(X, y, w, beta) -> float:
    eta = X @ beta
    return float(np.sum(w * (y * log_expit(eta) + (1.0 - y) * log_expit(-eta))))


def fit(
    rows: np.ndarray,
    y: np.ndarray,
    weights: Optional[np.ndarray] = None,
    start: Optional[np.ndarray] = None,
    columns: Sequence[str] = (),
    tol: float = IRLS_TOL,
    max_iter: int = IRLS_MAX_ITER,
) -> LogitFit:
    """Maximises the weighted Bernoulli log-likelihood by Newton/IRLS.

    Rows with zero weight are ignored. Hitting `max_iter` gives
    `converged=False` unless a coefficient diverged past the separation
    bound, which raises. Quasi-complete separation ends early with
    `boundary=True` and a BoundaryFit warning; complete separation raises.
    """
    X = np.asarray(rows, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch(f"design must be 2-D, got shape {X.shape}")
    n, p = X.shape
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if n == 0:
        raise RankDeficientDesign("no rows to fit")
    if y.shape != (n,) or w.shape != (n,):
        raise DimensionMismatch(
            f"design has {n} rows but y has {y.shape} and weights {w.shape}"
        )
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    if not np.any(w > 0):
        raise ValueError("weights are all zero")

    active = w > 0
    X, y, w = X[active], y[active], w[active]
    _check_rank(X, np.sqrt(w))

    beta = np.zeros(p) if start is None else np.array(start, dtype=float)
    if beta.shape != (p,):
        raise DimensionMismatch(f"start has shape {beta.shape}, expected ({p},)")

    loglik = _weighted_loglik(X, y, w, beta)
    prob = expit(X @ beta)
    converged = boundary = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        var = w * prob * (1.0 - prob)
        score = X.T @ (w * (y - prob))
        info = (X * var[:, None]).T @ X
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(info, score, rcond=None)[0]

        # Step halving keeps the likelihood non-decreasing
        new_beta = beta + step
        new_loglik = _weighted_loglik(X, y, w, new_beta)
        halvings = 0
        while new_loglik < loglik - 1e-12 and halvings < 30:
            step = step / 2.0
            new_beta = beta + step
            new_loglik = _weighted_loglik(X, y, w, new_beta)
            halvings += 1

        new_prob = expit(X @ new_beta)
        delta_prob = float(np.max(np.abs(new_prob - prob)))
        beta, loglik, prob = new_beta, new_loglik, new_prob

        if float(np.max(np.abs(step))) < tol:
            converged = True
            break
        if np.max(np.abs(beta)) > BOUNDARY_COEF and delta_prob < 1e-10:
            boundary = True
            break

    if boundary or (not converged and np.max(np.abs(beta)) > SEPARATION_BOUND):
        if np.all(np.abs(y - prob) < _PERFECT_FIT):
            raise SeparationDetected("complete separation: every response is fitted exactly")
        if not boundary:
            raise SeparationDetected(
                f"coefficients diverged (max |coef| {np.max(np.abs(beta)):.1f}) "
                f"after {iterations} iterations"
            )
        warnings.warn(
            "quasi-complete separation: some fitted probabilities are 0 or 1",
            BoundaryFit,
            stacklevel=2,
        )
        converged = True

    var = w * prob * (1.0 - prob)
    info = (X * var[:, None]).T @ X
    return LogitFit(
        coefficients=beta,
        columns=tuple(columns) or tuple(f"x{j}" for j in range(p)),
        converged=converged,
        iterations=iterations,
        boundary=boundary,
        fisher_information=info,
        log_likelihood=loglik,
    )


def linear_predictor(fitted: LogitFit, rows: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(rows, dtype=float))
    if X.shape[1] != fitted.coefficients.size:
        raise DimensionMismatch(
            f"rows have {X.shape[1]} columns, fit has {fitted.coefficients.size}"
        )
    return X @ fitted.coefficients


def predict_prob(fitted: LogitFit, rows: np.ndarray) -> np.ndarray:
    """Clamped inverse-logit of the linear predictor."""
    return np.clip(expit(linear_predictor(fitted, rows)), PROB_CLAMP, 1.0 - PROB_CLAMP)


def fit_design(
    design: DesignSpec,
    columns: Mapping[str, np.ndarray],
    y: np.ndarray,
    weights: Optional[np.ndarray] = None,
    start: Optional[np.ndarray] = None,
) -> LogitFit:
    """`fit` on the matrix `design` builds from named columns."""
    n = len(y)
    return fit(design.matrix(columns, n), y, weights, start=start, columns=design.columns)
