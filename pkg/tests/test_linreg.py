import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from panelkit.exceptions import RankDeficient, TooFewObservations
from panelkit.linreg import (
    adjusted_r_squared,
    chi_square_sf,
    compute_fit_statistics,
    durbin_watson,
    f_statistic,
    information_criteria,
    normal_sf,
    solve_ols,
    student_t_sf,
    two_sided_normal,
)


def exact_ols(y, X):
    """(X'X)^-1 X'y in exact rational arithmetic."""
    Xf = [[Fraction(float(v)) for v in row] for row in X]
    yf = [Fraction(float(v)) for v in y]
    k = len(Xf[0])
    A = [[sum(r[i] * r[j] for r in Xf) for j in range(k)] for i in range(k)]
    b = [sum(r[i] * yv for r, yv in zip(Xf, yf)) for i in range(k)]
    # Gauss-Jordan
    M = [A[i] + [b[i]] for i in range(k)]
    for c in range(k):
        piv = next(r for r in range(c, k) if M[r][c] != 0)
        M[c], M[piv] = M[piv], M[c]
        M[c] = [v / M[c][c] for v in M[c]]
        for r in range(k):
            if r != c and M[r][c] != 0:
                M[r] = [a - M[r][c] * bb for a, bb in zip(M[r], M[c])]
    return np.array([float(M[i][k]) for i in range(k)])


def test_exact_fit_with_constant():
    x = np.arange(1.0, 9.0)
    fit = solve_ols(2 * x, np.column_stack([x, np.ones_like(x)]))
    np.testing.assert_allclose(fit.coefficients, [2.0, 0.0], atol=1e-12)
    assert fit.stats.r_squared == 1.0
    assert fit.stats.ssr == pytest.approx(0.0, abs=1e-20)
    assert fit.stats.perfect_fit


def test_five_point_hand_oracle():
    x = np.array([1.0, 2, 3, 4, 5])
    y = np.array([1.0, 3, 2, 5, 4])
    # normal equations: [[55, 15], [15, 5]] b = [54, 15]
    expected = exact_ols(y, np.column_stack([x, np.ones(5)]))
    np.testing.assert_allclose(expected, [0.8, 0.6], rtol=1e-15)
    fit = solve_ols(y, np.column_stack([x, np.ones(5)]))
    np.testing.assert_allclose(fit.coefficients, [0.8, 0.6], rtol=1e-13)


def test_duplicated_column_is_rank_deficient():
    rng = np.random.default_rng(0)
    x = rng.normal(size=20)
    X = np.column_stack([x, np.ones(20), x])
    with pytest.raises(RankDeficient) as info:
        solve_ols(rng.normal(size=20), X, names=["a", "C", "a_copy"])
    assert info.value.column == "a_copy"


def test_too_few_observations():
    with pytest.raises(TooFewObservations):
        solve_ols(np.ones(2), np.eye(2))


@pytest.mark.parametrize("seed", range(5))
def test_matches_exact_rational_oracle(seed):
    rng = np.random.default_rng(seed)
    X = np.column_stack([rng.normal(size=(50, 3)), np.ones(50)])
    y = X @ [1.5, -2.0, 0.3, 4.0] + rng.normal(size=50)
    fit = solve_ols(y, X)
    np.testing.assert_allclose(fit.coefficients, exact_ols(y, X), rtol=1e-9)


def test_fit_invariants():
    rng = np.random.default_rng(1)
    X = np.column_stack([rng.normal(size=(40, 2)), np.ones(40)])
    y = rng.normal(size=40)
    fit = solve_ols(y, X)
    np.testing.assert_array_equal(fit.t_stats, fit.coefficients / fit.std_errors)
    np.testing.assert_allclose(fit.residuals + fit.fitted, y, rtol=0, atol=1e-14)
    np.testing.assert_allclose(fit.covariance, fit.covariance.T)
    assert np.linalg.eigvalsh(fit.covariance).min() > 0
    s = fit.stats
    assert 0 <= s.r_squared <= 1 and s.adj_r_squared <= s.r_squared
    assert s.se_regression == pytest.approx(math.sqrt(s.ssr / (s.n - s.k)), rel=1e-15)
    assert s.aic - s.schwarz == pytest.approx((2 * s.k - s.k * math.log(s.n)) / s.n, abs=1e-13)
    np.testing.assert_allclose(fit.p_values, 2 * student_t_sf(np.abs(fit.t_stats), 37))


def test_information_criteria_identity_exact():
    aic, sc, hq = information_criteria(-984.2615, 96, 3)
    assert aic - sc == (2 * 3 - 3 * math.log(96)) / 96 or math.isclose(
        aic - sc, (2 * 3 - 3 * math.log(96)) / 96, abs_tol=1e-14
    )


def test_table_three_statistics():
    aic, sc, hq = information_criteria(-984.2615, 96, 3)
    assert aic == pytest.approx(20.56795, abs=1e-4)
    assert sc == pytest.approx(20.64808, abs=1e-4)
    assert hq == pytest.approx(20.60034, abs=1e-4)
    assert adjusted_r_squared(0.421127, 96, 3) == pytest.approx(0.408678, abs=1e-6)
    f, _ = f_statistic(0.421127, 96, 3)
    assert f == pytest.approx(33.828, abs=0.01)


def test_fixed_effects_table_statistics_count_dummies():
    # 2 slopes + 8 entity intercepts reproduce the weighted FE block
    assert adjusted_r_squared(0.964452, 96, 10) == pytest.approx(0.960732, abs=1e-6)
    f, _ = f_statistic(0.964452, 96, 10)
    assert f == pytest.approx(259.2516, abs=0.01)


def test_random_effects_weighted_statistics():
    assert adjusted_r_squared(0.761754, 96, 3) == pytest.approx(0.756631, abs=1e-6)
    f, _ = f_statistic(0.761754, 96, 3)
    assert f == pytest.approx(148.6765, abs=0.01)


def test_perfect_fit_marker():
    y = np.array([1.0, 2, 3, 4])
    st_ = compute_fit_statistics(y, y, np.zeros(4), 4, 2)
    assert st_.perfect_fit
    assert st_.log_likelihood is None and st_.aic is None and st_.schwarz is None
    assert st_.hannan_quinn is None and st_.f_statistic is None


def test_durbin_watson_skips_entity_boundaries():
    e = np.array([1.0, -1.0, 5.0, 4.0])
    g = np.array([0, 0, 1, 1])
    assert durbin_watson(e, g) == pytest.approx((4.0 + 1.0) / 43.0)
    assert durbin_watson(e) == pytest.approx((4.0 + 36.0 + 1.0) / 43.0)


@settings(max_examples=30, deadline=None)
@given(c=st.floats(0.01, 100.0).flatmap(lambda v: st.sampled_from([v, -v])), j=st.integers(0, 1),
       seed=st.integers(0, 10_000))
def test_scale_equivariance(c, j, seed):
    rng = np.random.default_rng(seed)
    X = np.column_stack([rng.normal(size=(30, 2)), np.ones(30)])
    y = X @ [1.0, -1.0, 2.0] + rng.normal(size=30)
    a = solve_ols(y, X)
    X2 = X.copy()
    X2[:, j] *= c
    b = solve_ols(y, X2)
    assert b.coefficients[j] == pytest.approx(a.coefficients[j] / c, rel=1e-10)
    assert b.std_errors[j] == pytest.approx(a.std_errors[j] / abs(c), rel=1e-10)
    np.testing.assert_allclose(np.abs(b.t_stats), np.abs(a.t_stats), rtol=1e-10)
    for name in ("r_squared", "f_statistic", "log_likelihood", "aic", "schwarz", "hannan_quinn"):
        assert getattr(b.stats, name) == pytest.approx(getattr(a.stats, name), rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(shift=st.floats(-1e4, 1e4), seed=st.integers(0, 10_000))
def test_shifting_y_moves_only_the_intercept(shift, seed):
    rng = np.random.default_rng(seed)
    X = np.column_stack([rng.normal(size=(30, 2)), np.ones(30)])
    y = X @ [1.0, -1.0, 2.0] + rng.normal(size=30)
    a, b = solve_ols(y, X), solve_ols(y + shift, X)
    np.testing.assert_allclose(b.coefficients[:2], a.coefficients[:2], rtol=1e-7, atol=1e-9)
    assert b.coefficients[2] == pytest.approx(a.coefficients[2] + shift, abs=1e-8 * (1 + abs(shift)))
    assert b.stats.r_squared == pytest.approx(a.stats.r_squared, abs=1e-8)
    assert b.stats.durbin_watson == pytest.approx(a.stats.durbin_watson, rel=1e-7)


# -- distribution tails ------------------------------------------------------


def test_hausman_row_probability_from_table_five():
    z = (32.567165 - 31.558049) / math.sqrt(0.253945)
    assert z == pytest.approx(2.0025, abs=1e-4)
    assert two_sided_normal(z) == pytest.approx(0.0452, abs=5e-4)


def test_chi_square_tails():
    assert chi_square_sf(0.0, 2) == 1.0
    assert chi_square_sf(46.874074, 2) < 1e-9


@pytest.mark.parametrize("x,df", [(0.5, 1), (2.0, 5), (4.1, 93), (12.0, 3), (30.0, 30)])
def test_tail_accuracy_against_mpmath(x, df):
    mpmath.mp.dps = 40
    # t upper tail via the regularized incomplete beta
    t_ref = 0.5 * mpmath.betainc(df / 2.0, 0.5, 0, df / (df + x * x), regularized=True)
    chi_ref = mpmath.gammainc(df / 2.0, x / 2.0, mpmath.inf, regularized=True)
    n_ref = 0.5 * mpmath.erfc(x / mpmath.sqrt(2))
    assert abs(student_t_sf(x, df) - float(t_ref)) <= 1e-8 * max(1.0, float(t_ref))
    assert abs(chi_square_sf(x, df) - float(chi_ref)) <= 1e-8
    assert abs(normal_sf(x) - float(n_ref)) <= 1e-8
