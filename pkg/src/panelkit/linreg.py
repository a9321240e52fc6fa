"""Least-squares engine and the regression fit-statistic block.

Coefficient tables follow the EViews layout: Student-t p-values with
``n - k`` degrees of freedom, Gaussian log-likelihood, and information
criteria divided by ``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _stats

from .exceptions import RankDeficient, TooFewObservations, UsageError

RANK_TOL = 1e-10


def student_t_sf(x, df):
    """Upper-tail probability of Student's t with ``df`` degrees of freedom."""
    return _stats.t.sf(x, df)


def chi_square_sf(x, df):
    """Upper-tail probability of the chi-square distribution."""
    return _stats.chi2.sf(x, df)


def normal_sf(x):
    """Upper-tail probability of the standard normal."""
    return _stats.norm.sf(x)


def two_sided_t(x, df):
    return 2.0 * student_t_sf(np.abs(x), df)


def two_sided_normal(x):
    return 2.0 * normal_sf(np.abs(x))


@dataclass(frozen=True)
class FitStats:
    """Summary statistics of a least-squares fit.

    ``log_likelihood`` and the information criteria are ``None`` for a
    perfect fit (zero residual sum of squares); so are ``f_statistic`` and
    ``f_prob`` when undefined.
    """

    r_squared: float
    adj_r_squared: float
    se_regression: float
    ssr: float
    log_likelihood: float | None
    aic: float | None
    schwarz: float | None
    hannan_quinn: float | None
    f_statistic: float | None
    f_prob: float | None
    durbin_watson: float | None
    mean_dep: float
    sd_dep: float
    n: int
    k: int
    perfect_fit: bool = False

    def as_dict(self):
        return dict(self.__dict__)


@dataclass(frozen=True)
class RegressionFit:
    coefficients: np.ndarray
    std_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    covariance: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray
    stats: FitStats

    @property
    def df_resid(self) -> int:
        return self.stats.n - self.stats.k


def gaussian_log_likelihood(ssr: float, n: int) -> float:
    return -0.5 * n * (1.0 + math.log(2.0 * math.pi) + math.log(ssr / n))


def information_criteria(log_likelihood: float, n: int, k: int):
    """Per-observation (AIC, Schwarz, Hannan-Quinn)."""
    m2ll = -2.0 * log_likelihood
    aic = (m2ll + 2.0 * k) / n
    schwarz = (m2ll + k * math.log(n)) / n
    hq = (m2ll + 2.0 * k * math.log(math.log(n))) / n
    return aic, schwarz, hq


def adjusted_r_squared(r_squared: float, n: int, k: int) -> float:
    return 1.0 - (1.0 - r_squared) * (n - 1) / (n - k)


def f_statistic(r_squared: float, n: int, k: int):
    """Overall-significance F and its p-value, df ``(k - 1, n - k)``."""
    if k < 2 or r_squared >= 1.0:
        return None, None
    f = (r_squared / (k - 1)) / ((1.0 - r_squared) / (n - k))
    return f, float(_stats.f.sf(f, k - 1, n - k))


def regression_standard_error(ssr: float, n: int, k: int) -> float:
    return math.sqrt(ssr / (n - k))


def durbin_watson(residuals, groups=None) -> float | None:
    """Durbin-Watson ratio; differences never cross a change of ``groups``."""
    e = np.asarray(residuals, dtype=float)
    denom = float(e @ e)
    if denom == 0.0:
        return None
    d = np.diff(e)
    if groups is not None:
        g = np.asarray(groups)
        d = d[g[1:] == g[:-1]]
    return float(d @ d) / denom


def _is_perfect(ssr, y):
    scale = max(float(np.dot(y, y)), np.finfo(float).tiny)
    return ssr <= 1e-24 * scale


def compute_fit_statistics(y, fitted, residuals, n: int, k: int, *,
                           has_constant: bool = True, groups=None) -> FitStats:
    """Fill the statistic block for a fit with ``k`` estimated parameters.

    Parameters
    ----------
    y, fitted, residuals : array-like, length ``n``
    n, k : int
        Observation and parameter counts used in every df correction.
    has_constant : bool
        The F statistic is reported only when the model spans a constant.
    groups : array-like, optional
        Entity labels per row; Durbin-Watson skips pairs across entities.
    """
    y = np.asarray(y, dtype=float)
    residuals = np.asarray(residuals, dtype=float)
    if y.shape != residuals.shape or y.shape != np.shape(fitted) or len(y) != n:
        raise UsageError("y, fitted and residuals must all have length n")
    if n <= k:
        raise TooFewObservations(f"need more observations than parameters (n={n}, k={k})")

    ssr = float(residuals @ residuals)
    mean_dep = float(y.mean())
    tss = float(((y - mean_dep) ** 2).sum())
    sd_dep = math.sqrt(tss / (n - 1))
    perfect = _is_perfect(ssr, y)
    r2 = 1.0 if perfect else (1.0 - ssr / tss if tss > 0 else 0.0)
    adj = adjusted_r_squared(r2, n, k)

    if perfect:
        ll = aic = sc = hq = None
        fstat = fprob = None
    else:
        ll = gaussian_log_likelihood(ssr, n)
        aic, sc, hq = information_criteria(ll, n, k)
        fstat, fprob = f_statistic(r2, n, k) if has_constant else (None, None)

    return FitStats(
        r_squared=r2,
        adj_r_squared=adj,
        se_regression=regression_standard_error(ssr, n, k),
        ssr=ssr,
        log_likelihood=ll,
        aic=aic,
        schwarz=sc,
        hannan_quinn=hq,
        f_statistic=fstat,
        f_prob=fprob,
        durbin_watson=durbin_watson(residuals, groups),
        mean_dep=mean_dep,
        sd_dep=sd_dep,
        n=n,
        k=k,
        perfect_fit=perfect,
    )


def _offending_column(X):
    # first column whose inclusion makes the leading block rank deficient
    for j in range(1, X.shape[1] + 1):
        s = np.linalg.svd(X[:, :j], compute_uv=False)
        if s[0] == 0 or s[-1] / s[0] < RANK_TOL:
            return j - 1
    return None


def check_rank(X, names=None) -> None:
    s = np.linalg.svd(X, compute_uv=False)
    if s[0] == 0 or s[-1] / s[0] < RANK_TOL:
        j = _offending_column(X)
        label = None if j is None else (names[j] if names is not None else j)
        where = "" if label is None else f" (column {label!r} is collinear with earlier columns)"
        raise RankDeficient(f"design matrix is rank deficient{where}", column=label)


def has_constant_column(X) -> bool:
    X = np.asarray(X)
    return bool(np.any((np.ptp(X, axis=0) == 0) & (X[0] != 0)))


def solve_ols(y, X, *, groups=None, names=None, has_constant=None) -> RegressionFit:
    """Ordinary least squares through a QR decomposition.

    Parameters
    ----------
    y : array-like, shape (n,)
    X : array-like, shape (n, k)
        Design matrix. Put the constant column last to get tables in the
        usual order; the solver itself does not care.
    groups : array-like, optional
        Row labels for the panel Durbin-Watson rule.
    names : sequence of str, optional
        Column names, used only in error messages.
    has_constant : bool, optional
        Override detection of a constant column (affects the F statistic).

    Returns
    -------
    RegressionFit
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if y.shape != (n,):
        raise UsageError(f"y has shape {y.shape}, expected ({n},)")
    if n <= k:
        raise TooFewObservations(f"need more observations than parameters (n={n}, k={k})")
    check_rank(X, names)

    beta, xtx_inv = qr_solve(X, y)
    fitted = X @ beta
    resid = y - fitted
    if has_constant is None:
        has_constant = has_constant_column(X)
    st = compute_fit_statistics(y, fitted, resid, n, k, has_constant=has_constant, groups=groups)
    return make_fit(beta, st.se_regression ** 2 * xtx_inv, resid, fitted, st)


def qr_solve(X, y):
    """Least-squares coefficients and ``(X'X)^-1`` from a QR factorization."""
    q, r = np.linalg.qr(X)
    beta = np.linalg.solve(r, q.T @ y)
    r_inv = np.linalg.inv(r)
    return beta, r_inv @ r_inv.T


def make_fit(beta, cov, residuals, fitted, stats: FitStats) -> RegressionFit:
    """Assemble a RegressionFit; inference uses df ``stats.n - stats.k``."""
    cov = 0.5 * (cov + cov.T)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.asarray(beta) / se
    p = two_sided_t(t, stats.n - stats.k)
    return RegressionFit(
        coefficients=np.asarray(beta, dtype=float),
        std_errors=se,
        t_stats=t,
        p_values=np.asarray(p, dtype=float),
        covariance=cov,
        residuals=np.asarray(residuals, dtype=float),
        fitted=np.asarray(fitted, dtype=float),
        stats=stats,
    )
