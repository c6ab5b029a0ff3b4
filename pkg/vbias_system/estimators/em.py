"""
EM estimation of test accuracy under MNAR (or MAR) verification.

The joint model factors into three logistic regressions

    disease       P(D=1 | X)          coefficients alpha
    test          P(T=1 | D, X)       coefficients beta
    verification  P(V=1 | T, [D,] X)  coefficients gamma

fitted on pseudo-data in which every unverified record appears twice, once
with D=0 and once with D=1, weighted by the posterior probability of each
disease status. The E-step recomputes those weights; the M-step refits the
three models with them.
"""

import warnings
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.special import expit, log_expit

from ..common import log, warn_and_record
from ..config import EmConfig
from ..data.dataset import Dataset
from ..errors import DegenerateMargin, InvalidConfig, NotConverged
from .closed import AccuracyResult, from_bootstrap, point_only
from .logit import DesignSpec, fit_design
from .uncertainty import bootstrap_accuracy


# ============================================================================
# PSEUDO-DATA
# ============================================================================

@dataclass(frozen=True)
class PseudoData:
    """
    Rows ordered as: verified records | unverified with D=0 | unverified with D=1.

    `origin_index[i]` is the Dataset record that row i came from.
    """
    t: np.ndarray
    d: np.ndarray
    v: np.ndarray
    x: np.ndarray
    weights: np.ndarray
    origin_index: np.ndarray
    n_verified: int
    n_unverified: int
    covariate_names: Tuple[str, ...] = ()

    @property
    def n_rows(self) -> int:
        return self.n_verified + 2 * self.n_unverified

    @property
    def zero_rows(self) -> slice:
        return slice(self.n_verified, self.n_verified + self.n_unverified)

    @property
    def one_rows(self) -> slice:
        return slice(self.n_verified + self.n_unverified, self.n_rows)

    def columns(self) -> Dict[str, np.ndarray]:
        cols = {"T": self.t, "D": self.d, "V": self.v}
        for j, name in enumerate(self.covariate_names):
            cols[name] = self.x[:, j]
        return cols

    def with_weights(self, weights: np.ndarray) -> "PseudoData":
        return replace(self, weights=np.asarray(weights, dtype=float))


def build_pseudo_data(data: Dataset, covariates: Tuple[str, ...] = ()) -> PseudoData:
    """Stacks the data; each unverified pair starts at weights (0.5, 0.5)."""
    verified = np.flatnonzero(data.verified)
    unverified = np.flatnonzero(~data.verified)
    nv, u = verified.size, unverified.size
    origin = np.concatenate([verified, unverified, unverified])
    x = data.covariates(covariates)
    return PseudoData(
        t=data.t[origin].astype(float),
        d=np.concatenate([data.d[verified], np.zeros(u), np.ones(u)]),
        v=np.concatenate([np.ones(nv), np.zeros(2 * u)]),
        x=x[origin],
        weights=np.concatenate([np.ones(nv), np.full(2 * u, 0.5)]),
        origin_index=origin,
        n_verified=nv,
        n_unverified=u,
        covariate_names=tuple(covariates),
    )


# ============================================================================
# MODELS AND STATE
# ============================================================================

@dataclass(frozen=True)
class EmDesigns:
    disease: DesignSpec
    test: DesignSpec
    verification: DesignSpec


def em_designs(
    covariates: Tuple[str, ...] = (),
    mnar: bool = True,
    verification_interaction: bool = False,
) -> EmDesigns:
    covariates = tuple(covariates)
    if mnar:
        verify_terms = ("T", "D") + covariates
        if verification_interaction:
            verify_terms += ("T:D",)
    else:
        verify_terms = ("T",) + covariates
    return EmDesigns(
        disease=DesignSpec("D", covariates),
        test=DesignSpec("T", ("D",) + covariates),
        verification=DesignSpec("V", verify_terms),
    )


@dataclass(frozen=True)
class EmState:
    """Coefficients of the three models plus the iteration history.

    `gamma` is empty when there are no unverified records to model.
    """
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    designs: EmDesigns
    iteration: int = 0
    converged: bool = False
    delta_trace: Tuple[float, ...] = field(default=(), repr=False)
    loglik_trace: Tuple[float, ...] = field(default=(), repr=False)

    def theta(self) -> np.ndarray:
        return np.concatenate([self.alpha, self.beta, self.gamma])

    def coefficients(self) -> dict:
        out = {}
        for label, design, coef in (
            ("disease", self.designs.disease, self.alpha),
            ("test", self.designs.test, self.beta),
            ("verification", self.designs.verification, self.gamma),
        ):
            out[label] = {name: float(c) for name, c in zip(design.columns, coef)}
        return out


def _loglik_terms(pd: PseudoData, state: EmState) -> np.ndarray:
    """Per-row log of P(D|X) P(T|D,X) P(V|T,D,X)."""
    cols = pd.columns()
    n = pd.n_rows
    total = np.zeros(n)
    for design, coef, y in (
        (state.designs.disease, state.alpha, pd.d),
        (state.designs.test, state.beta, pd.t),
        (state.designs.verification, state.gamma, pd.v),
    ):
        if coef.size == 0:
            continue
        eta = design.matrix(cols, n) @ coef
        total += y * log_expit(eta) + (1.0 - y) * log_expit(-eta)
    return total


def observed_loglik(pd: PseudoData, state: EmState) -> float:
    """Log-likelihood of the observed data (D summed out where missing)."""
    terms = _loglik_terms(pd, state)
    verified = terms[: pd.n_verified].sum()
    missing = np.logaddexp(terms[pd.zero_rows], terms[pd.one_rows]).sum()
    return float(verified + missing)


def e_step(pd: PseudoData, state: EmState) -> np.ndarray:
    """Posterior weights of the stacked D=0 / D=1 copies; verified rows stay 1."""
    terms = _loglik_terms(pd, state)
    w0 = expit(terms[pd.zero_rows] - terms[pd.one_rows])
    return np.concatenate([np.ones(pd.n_verified), w0, 1.0 - w0])


def m_step(
    pd: PseudoData,
    designs: EmDesigns,
    start: Optional[EmState] = None,
) -> EmState:
    """Refits the three weighted models; `start` warm-starts IRLS."""
    cols = pd.columns()
    w = pd.weights

    def refit(design: DesignSpec, y: np.ndarray, previous: Optional[np.ndarray]) -> np.ndarray:
        return fit_design(design, cols, y, w, start=previous).coefficients

    alpha = refit(designs.disease, pd.d, None if start is None else start.alpha)
    beta = refit(designs.test, pd.t, None if start is None else start.beta)
    if pd.n_unverified:
        previous = None if start is None or start.gamma.size == 0 else start.gamma
        gamma = refit(designs.verification, pd.v, previous)
    else:
        gamma = np.empty(0)
    return EmState(alpha=alpha, beta=beta, gamma=gamma, designs=designs)


# ============================================================================
# ESTIMATION
# ============================================================================

def run_em(data: Dataset, config: EmConfig) -> EmState:
    """Alternates E and M steps until the largest coefficient change < cutoff."""
    verified_d = data.d[data.verified]
    if not (np.any(verified_d == 1) and np.any(verified_d == 0)):
        raise DegenerateMargin("verified records must include both disease classes")

    designs = em_designs(config.covariates, config.mnar, config.verification_interaction)
    pd = build_pseudo_data(data, config.covariates)
    state = m_step(pd, designs)
    deltas, logliks = [], [observed_loglik(pd, state)]
    converged = False
    iteration = 0
    for iteration in range(1, config.t_max + 1):
        pd = pd.with_weights(e_step(pd, state))
        new_state = m_step(pd, designs, start=state)
        delta = float(np.max(np.abs(new_state.theta() - state.theta())))
        deltas.append(delta)
        logliks.append(observed_loglik(pd, new_state))
        state = new_state
        if delta < config.cutoff:
            converged = True
            break

    return replace(
        state,
        iteration=iteration,
        converged=converged,
        delta_trace=tuple(deltas),
        loglik_trace=tuple(logliks),
    )


def _bayes_predictive(se: float, sp: float, prev: float) -> Tuple[float, float]:
    ppv = se * prev / (se * prev + (1.0 - sp) * (1.0 - prev))
    npv = sp * (1.0 - prev) / (sp * (1.0 - prev) + (1.0 - se) * prev)
    return ppv, npv


def em_accuracy(data: Dataset, state: EmState, marginalization: str = "records") -> np.ndarray:
    """(Se, Sp, PPV, NPV) implied by fitted coefficients.

    "records" averages the model probabilities over every record;
    "patterns" does the same over distinct covariate patterns weighted by
    their frequency, which is only meaningful for categorical covariates.
    """
    designs = state.designs
    names = designs.disease.variables()
    x = data.covariates(names) if names else np.empty((data.n, 0))
    if marginalization == "patterns":
        if not np.all(x == np.round(x)):
            raise InvalidConfig("pattern marginalization needs categorical covariates")
        if names:
            x, counts = np.unique(x, axis=0, return_counts=True)
        else:
            x, counts = np.empty((1, 0)), np.array([data.n])
        weights = counts / counts.sum()
    else:
        weights = np.full(x.shape[0], 1.0 / x.shape[0])

    m = x.shape[0]
    cols = {name: x[:, j] for j, name in enumerate(names)}
    p1 = expit(designs.disease.matrix(cols, m) @ state.alpha)
    cols["D"] = np.ones(m)
    se_i = expit(designs.test.matrix(cols, m) @ state.beta)
    cols["D"] = np.zeros(m)
    fp_i = expit(designs.test.matrix(cols, m) @ state.beta)

    se = np.sum(weights * se_i * p1) / np.sum(weights * p1)
    sp = np.sum(weights * (1.0 - fp_i) * (1.0 - p1)) / np.sum(weights * (1.0 - p1))
    prev = float(np.sum(weights * p1))
    ppv, npv = _bayes_predictive(se, sp, prev)
    return np.array([se, sp, ppv, npv])


def _em_point(data: Dataset, config: EmConfig) -> np.ndarray:
    return em_accuracy(data, run_em(data, config), config.marginalization)


def acc_em(data: Dataset, config: Optional[EmConfig] = None) -> AccuracyResult:
    """EM estimate with optional bootstrap intervals (`config.boot`)."""
    config = config or EmConfig()
    notes: list = []
    log(
        f"EM: {'MNAR' if config.mnar else 'MAR'} model, covariates {list(config.covariates)}, "
        f"t_max {config.t_max}, cutoff {config.cutoff}"
    )
    state = run_em(data, config)
    if not state.converged:
        warn_and_record(
            notes, NotConverged,
            f"EM stopped after {state.iteration} iterations "
            f"(last change {state.delta_trace[-1]:.3g} >= cutoff {config.cutoff})",
        )
    else:
        log(f"EM converged after {state.iteration} iterations")
    point = em_accuracy(data, state, config.marginalization)

    metadata = {
        "covariates": list(config.covariates),
        "mnar": config.mnar,
        "t_max": config.t_max,
        "cutoff": config.cutoff,
        "iterations": state.iteration,
        "converged": state.converged,
        "marginalization": config.marginalization,
        "coefficients": state.coefficients(),
    }
    if notes:
        metadata["warnings"] = notes
    if config.boot is None:
        return point_only("EM", point, config.alpha, metadata, detail=state)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotConverged)
        boot = bootstrap_accuracy(data, lambda d: _em_point(d, config), config.boot, point=point)
    result = from_bootstrap("EM", point, boot, config.boot.alpha, metadata)
    return replace(result, detail=state)
