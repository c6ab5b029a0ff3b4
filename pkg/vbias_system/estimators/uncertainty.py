"""
Confidence-interval machinery: quantiles, Wald intervals, jackknife and
BCa/percentile bootstrap over an arbitrary re-runnable estimator.
"""

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import ndtr, ndtri, stdtrit

from ..common import log, root_entropy, substream
from ..config import DEFAULT_ALPHA, BootConfig
from ..data.dataset import Dataset
from ..errors import (
    BoundaryFit,
    DegenerateDistribution,
    DomainError,
    NotConverged,
    NumericalError,
    TooManyFailedReplicates,
    ZeroCell,
)

Estimator = Callable[[Dataset], np.ndarray]


# ============================================================================
# QUANTILES
# ============================================================================

def normal_quantile(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must be in (0, 1), got {p}")
    return float(ndtri(p))


def t_quantile(p: float, df: float) -> float:
    """Student t quantile; `df=inf` gives the normal quantile."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must be in (0, 1), got {p}")
    if not df > 0:
        raise DomainError(f"degrees of freedom must be > 0, got {df}")
    if np.isinf(df):
        return normal_quantile(p)
    return float(stdtrit(df, p))


def wald_interval(estimate: float, se: float, alpha: float = DEFAULT_ALPHA) -> Tuple[float, float]:
    z = normal_quantile(1.0 - alpha / 2.0)
    return estimate - z * se, estimate + z * se


# ============================================================================
# INTERVALS FROM REPLICATES
# ============================================================================

@dataclass(frozen=True)
class Interval:
    low: float
    high: float
    method: str                 # bca | percentile | point
    degenerate: bool = False


def percentile_interval(replicates: Sequence[float], alpha: float = DEFAULT_ALPHA) -> Interval:
    reps = np.asarray(replicates, dtype=float)
    if reps.size == 0:
        raise DomainError("no replicates")
    if np.ptp(reps) == 0:
        return Interval(float(reps[0]), float(reps[0]), "point", degenerate=True)
    low, high = np.quantile(reps, [alpha / 2.0, 1.0 - alpha / 2.0])
    return Interval(float(low), float(high), "percentile")


def jackknife_acceleration(
    jackknife_estimates: Sequence[float],
    weights: Optional[Sequence[float]] = None,
) -> float:
    """Acceleration from the skewness of leave-one-out estimates.

    `weights` are multiplicities when each estimate stands for several
    identical leave-one-out fits.
    """
    jack = np.asarray(jackknife_estimates, dtype=float)
    w = np.ones_like(jack) if weights is None else np.asarray(weights, dtype=float)
    if jack.size == 0:
        return 0.0
    u = np.average(jack, weights=w) - jack
    den = 6.0 * np.sum(w * u**2) ** 1.5
    if den == 0 or not np.isfinite(den):
        return 0.0
    return float(np.sum(w * u**3) / den)


def bca_interval(
    replicates: Sequence[float],
    point: float,
    jackknife_estimates: Sequence[float],
    alpha: float = DEFAULT_ALPHA,
    weights: Optional[Sequence[float]] = None,
) -> Interval:
    """Bias-corrected and accelerated percentile interval.

    Falls back to the percentile interval (with a DegenerateDistribution
    warning) when the bias correction or the adjusted levels are undefined.
    """
    reps = np.asarray(replicates, dtype=float)
    if reps.size < 2 or np.ptp(reps) == 0:
        warnings.warn("bootstrap distribution is degenerate", DegenerateDistribution, stacklevel=2)
        value = float(reps[0]) if reps.size else float(point)
        return Interval(value, value, "point", degenerate=True)

    below = float(np.mean(reps < point))
    if below <= 0.0 or below >= 1.0:
        warnings.warn(
            "point estimate lies outside the bootstrap distribution; using percentile interval",
            DegenerateDistribution,
            stacklevel=2,
        )
        return percentile_interval(reps, alpha)

    z0 = float(ndtri(below))
    a = jackknife_acceleration(jackknife_estimates, weights)
    levels = []
    for q in (alpha / 2.0, 1.0 - alpha / 2.0):
        z = z0 + ndtri(q)
        levels.append(float(ndtr(z0 + z / (1.0 - a * z))))
    if not all(np.isfinite(levels)) or levels[0] >= levels[1]:
        warnings.warn(
            "BCa levels are undefined; using percentile interval",
            DegenerateDistribution,
            stacklevel=2,
        )
        return percentile_interval(reps, alpha)
    low, high = np.quantile(reps, levels)
    return Interval(float(low), float(high), "bca")


# ============================================================================
# BOOTSTRAP
# ============================================================================

@dataclass(frozen=True)
class BootResult:
    point: np.ndarray
    replicates: np.ndarray      # successful replicates x measures
    se: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    ci_methods: Tuple[str, ...]
    failed: int
    requested: int
    seed: Optional[int] = None

    @property
    def failed_fraction(self) -> float:
        return self.failed / self.requested


def _quiet(fn: Callable, *args):
    """Runs fn, mapping numerical failures to None."""
    try:
        out = np.asarray(fn(*args), dtype=float)
    except NumericalError:
        return None
    return out if np.all(np.isfinite(out)) else None


def _resample_indices(data: Dataset, mode: str, rng: np.random.Generator) -> np.ndarray:
    if mode == "all":
        return rng.integers(0, data.n, size=data.n)
    verified = np.flatnonzero(data.verified)
    unverified = np.flatnonzero(~data.verified)
    draw = verified[rng.integers(0, verified.size, size=verified.size)]
    return np.concatenate([draw, unverified])


def jackknife(data: Dataset, estimator: Estimator, mode: str = "verified") -> Tuple[np.ndarray, np.ndarray]:
    """Leave-one-out estimates grouped by identical records.

    Returns (estimates, multiplicities). Records with equal (T, D, X) give
    equal leave-one-out estimates, so each distinct pattern is fitted once.
    """
    pool = np.flatnonzero(data.verified) if mode == "verified" else np.arange(data.n)
    keys = np.column_stack([data.t, np.nan_to_num(data.d, nan=-1.0), data.x])[pool]
    _, first, counts = np.unique(keys, axis=0, return_index=True, return_counts=True)

    estimates, weights = [], []
    everything = np.arange(data.n)
    for pos, count in zip(first, counts):
        drop = pool[pos]
        est = _quiet(estimator, data.take(everything[everything != drop]))
        if est is not None:
            estimates.append(est)
            weights.append(count)
    if not estimates:
        return np.empty((0, 0)), np.empty(0)
    return np.vstack(estimates), np.asarray(weights, dtype=float)


def bootstrap_accuracy(
    data: Dataset,
    estimator: Estimator,
    config: BootConfig,
    point: Optional[np.ndarray] = None,
) -> BootResult:
    """Bootstrap SEs and intervals for every measure `estimator` returns.

    Replicate b draws from the substream keyed by (seed, b), so results do
    not depend on `config.threads`.
    """
    if point is None:
        point = np.asarray(estimator(data), dtype=float)
    point = np.asarray(point, dtype=float)
    entropy = root_entropy(config.seed)

    def replicate(b: int):
        idx = _resample_indices(data, config.resample, substream(entropy, b))
        return _quiet(estimator, data.take(idx))

    log(f"Bootstrap: {config.replicates} replicates on {config.threads} thread(s)")
    with warnings.catch_warnings():
        for category in (BoundaryFit, NotConverged, ZeroCell):
            warnings.simplefilter("ignore", category)
        if config.threads == 1:
            results = [replicate(b) for b in range(config.replicates)]
        else:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                results = list(pool.map(replicate, range(config.replicates)))

        ok = [r for r in results if r is not None]
        failed = len(results) - len(ok)
        if failed / config.replicates > config.max_failed_fraction:
            raise TooManyFailedReplicates(
                f"{failed} of {config.replicates} replicates failed "
                f"(limit {config.max_failed_fraction:.0%})"
            )
        if failed:
            log(f"Bootstrap: {failed} failed replicate(s) excluded")
        reps = np.vstack(ok)
        se = reps.std(axis=0, ddof=1) if reps.shape[0] > 1 else np.zeros(point.size)

        if config.ci_type == "bca":
            jack, weights = jackknife(data, estimator, config.resample)

    lows, highs, methods = [], [], []
    for j in range(point.size):
        if config.ci_type == "bca":
            jack_j = jack[:, j] if jack.size else np.empty(0)
            interval = bca_interval(reps[:, j], point[j], jack_j, config.alpha, weights)
        else:
            interval = percentile_interval(reps[:, j], config.alpha)
        lows.append(interval.low)
        highs.append(interval.high)
        methods.append(interval.method)

    return BootResult(
        point=point,
        replicates=reps,
        se=se,
        ci_low=np.asarray(lows),
        ci_high=np.asarray(highs),
        ci_methods=tuple(methods),
        failed=failed,
        requested=config.replicates,
        seed=config.seed,
    )
