import warnings

import numpy as np
import pytest
from scipy.special import expit

from vbias_system.errors import (
    BoundaryFit,
    DimensionMismatch,
    RankDeficientDesign,
    SeparationDetected,
)
from vbias_system.estimators.logit import (
    INTERCEPT,
    DesignSpec,
    disease_design,
    fit,
    fit_design,
    predict_prob,
)


def _cohort(seed=11, n=400):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n)
    y = (rng.random(n) < expit(-0.3 + 0.8 * x)).astype(float)
    return np.column_stack([np.ones(n), x]), y


def test_intercept_only_is_log_odds():
    y = np.r_[np.ones(195), np.zeros(232)]
    fitted = fit(np.ones((y.size, 1)), y)

    assert fitted.converged
    assert fitted.coefficients[0] == pytest.approx(np.log(195 / 232), abs=1e-8)


def test_all_ones_is_separation():
    with pytest.raises(SeparationDetected):
        fit(np.ones((5, 1)), np.ones(5))


def test_saturated_fit_reproduces_cell_proportions(spect):
    v = spect.verified
    t, d = spect.t[v].astype(float), spect.d[v]
    fitted = fit(np.column_stack([np.ones(t.size), t]), d)

    probs = predict_prob(fitted, [[1, 1], [1, 0]])
    assert probs[0] == pytest.approx(195 / 427, abs=1e-9)
    assert probs[1] == pytest.approx(5 / 44, abs=1e-9)


def test_zero_coefficients_predict_one_half():
    fitted = fit(np.ones((2, 1)), np.array([0.0, 1.0]))
    assert predict_prob(fitted, [[1.0]])[0] == pytest.approx(0.5)


def test_score_vanishes_at_the_maximum():
    X, y = _cohort()
    fitted = fit(X, y)
    score = X.T @ (y - expit(X @ fitted.coefficients))
    assert np.max(np.abs(score)) < 1e-6


def test_covariate_scaling_rescales_the_slope():
    X, y = _cohort()
    base = fit(X, y)
    scaled = fit(X * np.array([1.0, 10.0]), y)

    assert scaled.coefficients[0] == pytest.approx(base.coefficients[0], abs=1e-8)
    assert scaled.coefficients[1] == pytest.approx(base.coefficients[1] / 10.0, abs=1e-8)


def test_duplicated_rows_with_half_weights_match_unit_weights():
    X, y = _cohort(n=150)
    base = fit(X, y)
    doubled = fit(np.vstack([X, X]), np.r_[y, y], weights=np.full(2 * y.size, 0.5))

    np.testing.assert_allclose(doubled.coefficients, base.coefficients, atol=1e-8)


def test_zero_weight_rows_are_ignored():
    X, y = _cohort(n=150)
    base = fit(X, y)
    padded = fit(
        np.vstack([X, [[1.0, 50.0]]]),
        np.r_[y, 0.0],
        weights=np.r_[np.ones(y.size), 0.0],
    )
    np.testing.assert_allclose(padded.coefficients, base.coefficients, atol=1e-10)


def test_wrong_width_is_a_dimension_mismatch():
    fitted = fit(np.ones((2, 1)), np.array([0.0, 1.0]))
    with pytest.raises(DimensionMismatch):
        predict_prob(fitted, [[1.0, 2.0]])


def test_response_length_mismatch():
    with pytest.raises(DimensionMismatch):
        fit(np.ones((3, 1)), np.array([0.0, 1.0]))


def test_duplicated_column_is_rank_deficient():
    X, y = _cohort(n=50)
    with pytest.raises(RankDeficientDesign):
        fit(np.column_stack([X, X[:, 1]]), y)


def test_quasi_separation_returns_a_boundary_fit():
    x = np.array([1, 1, 1, 0, 0, 0, 0], dtype=float)
    y = np.array([0, 0, 0, 1, 0, 1, 0], dtype=float)

    with pytest.warns(BoundaryFit):
        fitted = fit(np.column_stack([np.ones(7), x]), y)

    assert fitted.boundary
    assert fitted.coefficients[0] == pytest.approx(0.0, abs=1e-6)
    assert fitted.coefficients[1] < -15


def test_fisher_information_gives_standard_errors():
    y = np.r_[np.ones(30), np.zeros(70)]
    fitted = fit(np.ones((100, 1)), y)
    # var(logit p_hat) = 1 / (n p (1 - p))
    assert fitted.covariance()[0, 0] == pytest.approx(1 / (100 * 0.3 * 0.7), rel=1e-8)


def test_disease_design_terms():
    assert disease_design().columns == (INTERCEPT, "T")
    assert disease_design(["X3"], saturated=True).terms == ("T", "X3", "T:X3")


def test_design_matrix_builds_interactions():
    design = DesignSpec("D", ("T", "X", "T:X"))
    matrix = design.matrix({"T": np.array([1, 0, 1]), "X": np.array([2.0, 3.0, 0.0])}, 3)

    np.testing.assert_array_equal(
        matrix, [[1, 1, 2, 2], [1, 0, 3, 0], [1, 1, 0, 0]]
    )


def test_design_needs_its_columns():
    with pytest.raises(DimensionMismatch):
        DesignSpec("D", ("T", "X")).matrix({"T": np.zeros(2)}, 2)


def test_fit_design_labels_coefficients():
    t = np.array([1, 1, 0, 0, 1, 0], dtype=float)
    d = np.array([1, 0, 0, 1, 1, 0], dtype=float)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fitted = fit_design(disease_design(), {"T": t}, d)

    assert tuple(fitted.as_dict()) == (INTERCEPT, "T")
    assert fitted.as_dict()["T"] == pytest.approx(np.log(4.0), abs=1e-8)
