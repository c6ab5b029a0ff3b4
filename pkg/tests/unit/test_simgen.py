import numpy as np
import pytest

from vbias_system.config import EmConfig, MiConfig
from vbias_system.data.dataset import cross_table
from vbias_system.data.simgen import CovariateSpec, SimSpec, generate, load_sim_spec
from vbias_system.errors import InvalidSpec
from vbias_system.estimators.closed import bg, cca, ebg
from vbias_system.estimators.em import acc_em
from vbias_system.estimators.mi import acc_mi


def test_same_seed_same_cohort():
    spec = SimSpec(n=500, prevalence=0.3, se_true=0.8, sp_true=0.7,
                   mechanism="MAR", verify_intercept=-1.0, verify_test=2.0, seed=42)
    assert generate(spec).dataset == generate(spec).dataset


def test_infinite_intercept_verifies_everyone():
    spec = SimSpec(n=2000, prevalence=0.3, se_true=0.8, sp_true=0.7,
                   verify_intercept=np.inf, seed=1)
    result = generate(spec)

    assert result.dataset.n_unverified == 0
    assert result.truth.verified_fraction == 1.0
    assert result.dataset == result.complete


def test_mcar_verified_fraction():
    spec = SimSpec(n=20000, prevalence=0.3, se_true=0.8, sp_true=0.7,
                   verify_intercept=0.0, seed=2)
    fraction = generate(spec).truth.verified_fraction
    assert fraction == pytest.approx(0.5, abs=4 * np.sqrt(0.25 / 20000))


def test_truth_matches_the_complete_cohort():
    spec = SimSpec(n=100000, prevalence=0.2, se_true=0.9, sp_true=0.6, seed=3)
    truth = generate(spec).truth

    assert truth.empirical_prevalence == pytest.approx(0.2, abs=0.01)
    assert truth.empirical_se == pytest.approx(0.9, abs=0.01)
    assert truth.empirical_sp == pytest.approx(0.6, abs=0.01)


def test_mar_verification_favours_test_positives():
    spec = SimSpec(n=20000, prevalence=0.3, se_true=0.8, sp_true=0.7,
                   mechanism="MAR", verify_intercept=-1.0, verify_test=2.0, seed=4)
    table = cross_table(generate(spec).dataset)

    positive_rate = (table.s1 + table.r1) / table.n1
    negative_rate = (table.s0 + table.r0) / table.n0
    assert positive_rate > negative_rate + 0.3


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(mechanism="MCAR", verify_test=1.0),
        dict(mechanism="MAR", verify_disease=1.0),
        dict(mechanism="MCAR", covariates=(CovariateSpec("age", "continuous", verify=0.5),)),
        dict(prevalence=1.5),
        dict(mechanism="MNARish"),
    ],
)
def test_inconsistent_specs_are_rejected(kwargs):
    base = dict(n=100, prevalence=0.3, se_true=0.8, sp_true=0.7)
    base.update(kwargs)
    with pytest.raises(InvalidSpec):
        SimSpec(**base)


def test_covariate_description_parsing():
    cov = CovariateSpec.parse("age", "continuous mean=1 sd=2 disease=0.5 verify=0.25")
    assert cov == CovariateSpec("age", "continuous", mean=1.0, sd=2.0, disease=0.5, verify=0.25)

    with pytest.raises(InvalidSpec):
        CovariateSpec.parse("age", "continuous slope=1")


def test_spec_file(tmp_path):
    path = tmp_path / "cohort.env"
    path.write_text(
        "N=1000\nPREVALENCE=0.3\nSE_TRUE=0.8\nSP_TRUE=0.7\n"
        "MECHANISM=mnar\nVERIFY_INTERCEPT=-2\nVERIFY_TEST=2\nVERIFY_DISEASE=1.5\n"
        "SEED=9\n"
        'COVARIATE_MALE="binary p=0.4 disease=0.3"\n'
    )
    spec = load_sim_spec(path)

    assert spec.mechanism == "MNAR"
    assert spec.seed == 9
    assert spec.covariate_names == ("MALE",)
    assert set(np.unique(generate(spec).dataset.covariates("MALE"))) <= {0.0, 1.0}


def test_spec_file_needs_the_cohort_size(tmp_path):
    path = tmp_path / "cohort.env"
    path.write_text("PREVALENCE=0.3\nSE_TRUE=0.8\nSP_TRUE=0.7\n")
    with pytest.raises(InvalidSpec):
        load_sim_spec(path)


def test_cca_bias_under_mcar_shrinks_with_n():
    for n in (1000, 10000, 100000):
        spec = SimSpec(n=n, prevalence=0.3, se_true=0.8, sp_true=0.7,
                       verify_intercept=0.0, seed=n)
        result = generate(spec)
        estimate = cca(cross_table(result.dataset), ci=False)
        envelope = 4 * np.sqrt(0.8 * 0.2 / (n * 0.3 * 0.5))
        assert abs(estimate.se - 0.8) < envelope
        assert abs(estimate.sp - 0.7) < 4 * np.sqrt(0.7 * 0.3 / (n * 0.7 * 0.5))


@pytest.mark.slow
def test_mar_corrections_remove_the_bias():
    spec = SimSpec(n=100000, prevalence=0.3, se_true=0.8, sp_true=0.7,
                   mechanism="MAR", verify_intercept=-1.0, verify_test=2.0, seed=5)
    result = generate(spec)
    truth = result.truth
    table = cross_table(result.dataset)

    uncorrected = cca(table, ci=False)
    assert uncorrected.se - truth.empirical_se > 0.05

    corrected = bg(table, ci=False)
    assert abs(corrected.se - truth.empirical_se) < 0.01
    assert abs(corrected.sp - truth.empirical_sp) < 0.01

    for estimate in (ebg(result.dataset), acc_mi(result.dataset, MiConfig(m=5, seed=5))):
        assert estimate.se == pytest.approx(truth.empirical_se, abs=0.015)
        assert estimate.sp == pytest.approx(truth.empirical_sp, abs=0.015)


@pytest.mark.slow
def test_em_removes_mnar_bias_that_cca_keeps():
    spec = SimSpec(
        n=100000, prevalence=0.3, se_true=0.8, sp_true=0.7,
        mechanism="MNAR", verify_intercept=-2.0, verify_test=2.0, verify_disease=1.5,
        covariates=(CovariateSpec("age", "continuous", disease=1.0, test=0.5, verify=0.5),),
        seed=11,
    )
    result = generate(spec)
    truth = result.truth

    uncorrected = cca(cross_table(result.dataset), ci=False)
    assert uncorrected.se - truth.empirical_se > 0.05

    corrected = acc_em(result.dataset, EmConfig(covariates=("age",), cutoff=1e-5, t_max=20000))
    assert corrected.metadata["converged"]
    assert corrected.se == pytest.approx(truth.empirical_se, abs=0.02)
    assert corrected.sp == pytest.approx(truth.empirical_sp, abs=0.02)
