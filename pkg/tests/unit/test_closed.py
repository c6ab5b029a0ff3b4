import numpy as np
import pytest

from vbias_system.config import BootConfig
from vbias_system.data.dataset import Dataset, VerificationTable, cross_table
from vbias_system.errors import DegenerateMargin, ZeroCell
from vbias_system.estimators.closed import (
    MEASURES,
    accuracy_from_disease_probabilities,
    bg,
    bg_prevalence,
    cca,
    ebg,
)


def test_cca_on_bundled_table(spect_table):
    result = cca(spect_table)

    assert result.ci_kind == "wald"
    assert result.se == pytest.approx(0.9750000, abs=1e-7)
    assert result.sp == pytest.approx(0.1439114, abs=1e-7)
    assert result.ppv == pytest.approx(0.4566745, abs=1e-7)
    assert result.npv == pytest.approx(0.8863636, abs=1e-7)

    ses = [result[m].se for m in MEASURES]
    np.testing.assert_allclose(ses, [0.01103970, 0.02132173, 0.02410569, 0.04784519], atol=1e-7)


def test_cca_wald_intervals(spect_table):
    result = cca(spect_table)
    expected = {
        "Se": (0.9533626, 0.9966374),
        "Sp": (0.1021216, 0.1857013),
        "PPV": (0.4094282, 0.5039207),
        "NPV": (0.7925888, 0.9801385),
    }
    for name, (low, high) in expected.items():
        assert result[name].ci_low == pytest.approx(low, abs=1e-6)
        assert result[name].ci_high == pytest.approx(high, abs=1e-6)


def test_cca_without_intervals(spect_table):
    result = cca(spect_table, ci=False)
    assert result.ci_kind == "none"
    assert not result["Se"].has_ci


def test_cca_symmetric_table_has_equal_se_and_sp():
    result = cca(VerificationTable(s1=30, s0=10, r1=10, r0=30, u1=5, u0=5))
    assert result.se == pytest.approx(result.sp)
    assert result["Se"].se == pytest.approx(result["Sp"].se)


def test_cca_no_false_negatives_gives_unit_sensitivity():
    result = cca(VerificationTable(s1=10, s0=0, r1=5, r0=20, u1=0, u0=0))
    assert result.se == 1.0
    assert result["Se"].se == 0.0


def test_cca_needs_both_disease_classes():
    with pytest.raises(DegenerateMargin):
        cca(VerificationTable(s1=10, s0=3, r1=0, r0=0, u1=4, u0=4))


def test_bg_on_bundled_table(spect_table):
    result = bg(spect_table)

    assert result.se == pytest.approx(0.8188629, abs=1e-7)
    assert result.sp == pytest.approx(0.5918754, abs=1e-7)
    assert result["Se"].se == pytest.approx(0.0632003, abs=1e-7)
    assert result["Sp"].se == pytest.approx(0.0192876, abs=1e-7)
    assert result["Se"].ci_low == pytest.approx(0.6949925, abs=1e-6)
    assert result["Se"].ci_high == pytest.approx(0.9427333, abs=1e-6)


def test_bg_keeps_complete_case_predictive_values(spect_table):
    corrected = bg(spect_table)
    complete = cca(spect_table)
    assert corrected["PPV"] == complete["PPV"]
    assert corrected["NPV"] == complete["NPV"]


def test_bg_prevalence(spect_table):
    assert bg_prevalence(spect_table) == pytest.approx(0.29524, abs=1e-5)
    assert bg(spect_table).metadata["prevalence"] == pytest.approx(0.29524, abs=1e-5)


def test_bg_equals_cca_without_unverified():
    table = VerificationTable(s1=40, s0=7, r1=12, r0=55, u1=0, u0=0)
    assert bg(table).se == pytest.approx(cca(table).se, abs=1e-12)
    assert bg(table).sp == pytest.approx(cca(table).sp, abs=1e-12)


def test_bg_zero_cell_drops_the_interval():
    table = VerificationTable(s1=10, s0=0, r1=5, r0=20, u1=3, u0=4)
    with pytest.warns(ZeroCell):
        result = bg(table)

    assert result.se == pytest.approx(1.0)
    assert not result["Se"].has_ci
    assert result["Sp"].has_ci
    assert "ZeroCell" in result.metadata["warnings"][0]


def test_ebg_without_covariates_equals_bg(spect, spect_table):
    extended = ebg(spect)
    closed = bg(spect_table)

    assert extended.ci_kind == "none"
    assert extended.se == pytest.approx(closed.se, abs=1e-9)
    assert extended.sp == pytest.approx(closed.sp, abs=1e-9)
    assert extended.se == pytest.approx(0.8188629, abs=1e-6)


def test_ebg_saturated_with_covariate(spect):
    result = ebg(spect, ["X3"], saturated=True)

    np.testing.assert_allclose(
        result.estimates(),
        [0.8400495, 0.5912022, 0.4437285, 0.9049587],
        atol=5e-6,
    )


def test_ebg_fully_verified_equals_cca(spect):
    verified = spect.take(np.flatnonzero(spect.verified))
    np.testing.assert_allclose(
        ebg(verified).estimates(), cca(cross_table(verified)).estimates(), atol=1e-9
    )


def test_predictive_values_through_bayes_match_direct_sums():
    rng = np.random.default_rng(5)
    t = (rng.random(300) < 0.4).astype(float)
    p = rng.uniform(0.05, 0.95, size=300)

    se, sp, ppv, npv = accuracy_from_disease_probabilities(t, p)

    assert ppv == pytest.approx(np.sum(t * p) / np.sum(t), abs=1e-12)
    assert npv == pytest.approx(np.sum((1 - t) * (1 - p)) / np.sum(1 - t), abs=1e-12)


def test_ebg_on_a_small_table_matches_hand_computation():
    # s1=3 r1=1 u1=2, s0=1 r0=3 u0=2
    data = Dataset(
        [1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0],
        [1, 1, 1, 0, np.nan, np.nan, 1, 0, 0, 0, np.nan, np.nan],
    )
    result = ebg(data)
    # P(D | T=1) = 3/4, P(D | T=0) = 1/4, six records in each arm
    assert result.se == pytest.approx(6 * 0.75 / (6 * 0.75 + 6 * 0.25), abs=1e-9)
    assert result.sp == pytest.approx(6 * 0.75 / (6 * 0.75 + 6 * 0.25), abs=1e-9)
    assert result.ppv == pytest.approx(0.75, abs=1e-9)


@pytest.mark.slow
def test_ebg_bootstrap_se_without_covariates(spect):
    result = ebg(spect, boot=BootConfig(replicates=999, seed=2024))

    assert result.ci_kind in ("bca", "percentile")
    assert result.metadata["replicates"] == 999
    assert result["Se"].se == pytest.approx(0.06438696, rel=0.25)
    assert result["Se"].ci_low < result.se < result["Se"].ci_high


@pytest.mark.slow
def test_saturated_ebg_bootstrap_se_with_covariate(spect):
    result = ebg(spect, ["X3"], saturated=True, boot=BootConfig(replicates=999, seed=12345))

    assert result.metadata["failed_replicates"] <= 0.05 * 999
    ses = [result[name].se for name in MEASURES]
    np.testing.assert_allclose(ses, [0.0606, 0.0157, 0.0234, 0.0431], rtol=0.25)
    np.testing.assert_allclose(
        result.estimates(), [0.8400495, 0.5912022, 0.4437285, 0.9049587], atol=5e-6
    )
