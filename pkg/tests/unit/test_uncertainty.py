import numpy as np
import pytest

from vbias_system.config import BootConfig
from vbias_system.data.dataset import cross_table
from vbias_system.errors import (
    DegenerateDistribution,
    DomainError,
    InvalidConfig,
    NumericalError,
    TooManyFailedReplicates,
)
from vbias_system.estimators.closed import cca
from vbias_system.estimators.uncertainty import (
    bca_interval,
    bootstrap_accuracy,
    jackknife,
    jackknife_acceleration,
    normal_quantile,
    percentile_interval,
    t_quantile,
    wald_interval,
)


def _cca_point(data):
    return cca(cross_table(data), ci=False).estimates()


def test_normal_quantile():
    assert normal_quantile(0.975) == pytest.approx(1.959963985, abs=1e-8)
    assert normal_quantile(0.5) == 0.0


def test_t_quantile():
    assert t_quantile(0.975, 10) == pytest.approx(2.228138852, abs=1e-8)
    assert t_quantile(0.5, 3.7) == pytest.approx(0.0, abs=1e-12)
    assert t_quantile(0.975, np.inf) == pytest.approx(1.959963985, abs=1e-8)
    assert t_quantile(0.975, 1e7) == pytest.approx(1.959963985, abs=1e-4)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_quantiles_reject_probabilities_outside_the_open_interval(p):
    with pytest.raises(DomainError):
        normal_quantile(p)
    with pytest.raises(DomainError):
        t_quantile(p, 5)


def test_t_quantile_rejects_non_positive_df():
    with pytest.raises(DomainError):
        t_quantile(0.9, 0)


def test_wald_interval_is_symmetric():
    low, high = wald_interval(0.5, 0.1)
    assert 0.5 - low == pytest.approx(high - 0.5)
    assert high - low == pytest.approx(2 * 1.959963985 * 0.1, abs=1e-8)


def test_percentile_interval_of_a_uniform_grid():
    interval = percentile_interval(np.arange(1, 1001))
    assert interval.method == "percentile"
    assert interval.low == pytest.approx(25.5, abs=1)
    assert interval.high == pytest.approx(975.5, abs=1)


def test_bca_reduces_to_percentile_without_bias_or_skew():
    reps = np.r_[np.arange(-500, 0), np.arange(1, 501)] / 100.0
    jack = np.ones(20)

    bca = bca_interval(reps, 0.0, jack)
    plain = percentile_interval(reps)

    assert bca.method == "bca"
    assert bca.low == pytest.approx(plain.low, abs=1e-9)
    assert bca.high == pytest.approx(plain.high, abs=1e-9)


def test_bca_shifts_with_the_bias_correction():
    reps = np.arange(1, 1001) / 1000.0
    centred = bca_interval(reps, 0.5005, np.zeros(5))
    shifted = bca_interval(reps, 0.7, np.zeros(5))
    assert shifted.low > centred.low
    assert shifted.high > centred.high


def test_bca_on_constant_replicates_is_a_point():
    with pytest.warns(DegenerateDistribution):
        interval = bca_interval(np.full(50, 0.3), 0.3, np.full(10, 0.3))
    assert interval.degenerate
    assert (interval.low, interval.high) == (0.3, 0.3)


def test_bca_falls_back_when_point_is_outside_the_replicates():
    with pytest.warns(DegenerateDistribution):
        interval = bca_interval(np.linspace(0.1, 0.2, 100), 0.5, np.zeros(3))
    assert interval.method == "percentile"


def test_acceleration_vanishes_for_symmetric_jackknife():
    assert jackknife_acceleration([1.0, 2.0, 3.0]) == pytest.approx(0.0)
    assert jackknife_acceleration([2.0, 2.0, 2.0]) == 0.0


def test_acceleration_weights_act_as_multiplicities():
    repeated = jackknife_acceleration([1.0, 1.0, 1.0, 2.0, 5.0])
    weighted = jackknife_acceleration([1.0, 2.0, 5.0], weights=[3, 1, 1])
    assert weighted == pytest.approx(repeated)


def test_jackknife_groups_identical_records(spect):
    estimates, counts = jackknife(spect, _cca_point)
    # verified (T, D, X3) patterns: 2 x 2 x 2
    assert estimates.shape == (8, 4)
    assert counts.sum() == 471


def test_bootstrap_of_a_constant_estimator_is_degenerate(spect):
    with pytest.warns(DegenerateDistribution):
        result = bootstrap_accuracy(
            spect, lambda d: np.full(4, 0.25), BootConfig(replicates=20, seed=1)
        )
    np.testing.assert_array_equal(result.se, np.zeros(4))
    assert result.ci_methods == ("point",) * 4


def test_bootstrap_is_identical_across_thread_counts(spect):
    config = dict(replicates=40, seed=99, ci_type="percentile")
    one = bootstrap_accuracy(spect, _cca_point, BootConfig(threads=1, **config))
    four = bootstrap_accuracy(spect, _cca_point, BootConfig(threads=4, **config))

    np.testing.assert_array_equal(one.replicates, four.replicates)
    np.testing.assert_array_equal(one.ci_low, four.ci_low)


def test_bootstrap_changes_with_the_seed(spect):
    a = bootstrap_accuracy(spect, _cca_point, BootConfig(replicates=20, seed=1, ci_type="percentile"))
    b = bootstrap_accuracy(spect, _cca_point, BootConfig(replicates=20, seed=2, ci_type="percentile"))
    assert not np.array_equal(a.replicates, b.replicates)


def test_verified_resampling_keeps_unverified_records(spect):
    seen = []

    def count_unverified(data):
        seen.append(data.n_unverified)
        return _cca_point(data)

    bootstrap_accuracy(spect, count_unverified, BootConfig(replicates=10, seed=3, ci_type="percentile"))
    assert set(seen) == {spect.n_unverified}


def test_too_many_failed_replicates(spect):
    def failing(data):
        raise NumericalError("always fails")

    with pytest.raises(TooManyFailedReplicates):
        bootstrap_accuracy(spect, failing, BootConfig(replicates=10, seed=1), point=np.zeros(4))


def test_boot_config_validation():
    with pytest.raises(InvalidConfig):
        BootConfig(replicates=1)
    with pytest.raises(InvalidConfig):
        BootConfig(ci_type="studentized")
    with pytest.raises(InvalidConfig):
        BootConfig(alpha=1.0)
