import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_hausman, gls_oracle, lsdv_oracle, random_panel, stacked
from panelkit.exceptions import IndefiniteCovarianceDifference, NegativeComponentTruncated
from panelkit.hausman import hausman, hausman_statistic
from panelkit.linreg import chi_square_sf


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NegativeComponentTruncated)
        warnings.simplefilter("ignore", IndefiniteCovarianceDifference)
        yield


@pytest.mark.parametrize("seed", range(12))
def test_against_brute_force_oracle(seed):
    ds, sel = random_panel(seed, min_entities=5)
    y, X = stacked(ds, sel)
    N, T, k = ds.n_entities, ds.n_periods, X.shape[1]
    bf, Vf, _, _ = lsdv_oracle(y, X, N, T)
    br, Vr, _, _ = gls_oracle(y, X, N, T)
    res = hausman(ds, sel)
    expected = brute_hausman(bf, Vf, br[:k], Vr[:k, :k])
    assert res.statistic == pytest.approx(expected, rel=1e-8, abs=1e-10)
    assert res.df == k == len(res.per_variable)
    assert 0.0 <= res.p_value <= 1.0
    if not res.indefinite_flag:
        assert res.statistic >= 0


def test_single_slope_is_squared_z():
    r = hausman_statistic([2.0], [[0.5]], [1.0], [[0.25]])
    assert r.statistic == pytest.approx(4.0)
    assert r.p_value == pytest.approx(chi_square_sf(4.0, 1))
    assert r.per_variable[0].prob == pytest.approx(math.erfc(2.0 / math.sqrt(2)))


def test_equal_estimates_give_zero():
    V = np.array([[2.0, 0.3], [0.3, 1.0]])
    r = hausman_statistic([1.0, 2.0], V, [1.0, 2.0], 0.5 * V)
    assert r.statistic == 0.0 and r.p_value == 1.0


def test_published_per_variable_rows():
    r = hausman_statistic([32.567165, 247.134798], np.diag([0.253945 + 1.0, 0.999435 + 1.0]),
                          [31.558049, 242.832628], np.eye(2), names=["BROADBAND", "E-COMMERCE"])
    assert r.per_variable[0].prob == pytest.approx(0.0452, abs=5e-4)
    assert r.per_variable[1].prob < 5e-5
    assert [row.name for row in r.per_variable] == ["BROADBAND", "E-COMMERCE"]


def test_indefinite_difference_is_flagged():
    with pytest.warns(IndefiniteCovarianceDifference):
        r = hausman_statistic([1.0, 1.0], np.eye(2), [0.0, 0.0], 2 * np.eye(2))
    assert r.indefinite_flag
    assert r.warnings and "pseudo-inverse" in r.warnings[0]
    assert 0.0 <= r.p_value <= 1.0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), c=st.floats(0.01, 100.0))
def test_invariant_to_rescaling_slopes(seed, c):
    rng = np.random.default_rng(seed)
    k = 3
    A = rng.normal(size=(k, k))
    Vr = A @ A.T + np.eye(k)
    Vf = Vr + np.diag(rng.uniform(0.1, 2.0, size=k))
    bf, br = rng.normal(size=k), rng.normal(size=k)
    D = np.diag([c, 1.0, 1.0 / c])
    a = hausman_statistic(bf, Vf, br, Vr)
    b = hausman_statistic(D @ bf, D @ Vf @ D, D @ br, D @ Vr @ D)
    assert b.statistic == pytest.approx(a.statistic, rel=1e-8)


def test_full_matrix_differs_from_diagonal_when_correlated():
    d = np.array([1.0, 1.0])
    Vd = np.array([[1.0, 0.9], [0.9, 1.0]])
    r = hausman_statistic(d, Vd, [0.0, 0.0], np.zeros((2, 2)))
    assert r.statistic == pytest.approx(d @ np.linalg.solve(Vd, d))
    assert r.statistic != pytest.approx(2.0)


def test_metadata_records_estimators(small_panel):
    ds, sel = small_panel
    r = hausman(ds, sel)
    assert r.metadata["fixed_estimator"].startswith("within")
    assert 0.0 <= r.metadata["theta"] < 1.0


def test_published_diagonal_approximation_understates_statistic():
    d = np.array([31.558049 - 32.567165, 242.832628 - 247.134798])
    np.testing.assert_allclose(d, [-1.009116, -4.302170], atol=1e-9)
    diag_sum = float((d ** 2 / np.array([0.253945, 0.999435])).sum())
    assert diag_sum == pytest.approx(22.5, abs=0.1)
    assert 46.874074 > diag_sum
