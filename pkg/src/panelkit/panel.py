"""Pooled, fixed-effects and random-effects panel regressions.

All estimators work on balanced panels stacked entity-major with periods
ascending inside each entity. The functional API takes a
:class:`~panelkit.dataset.PanelDataset`; the estimator classes at the
bottom wrap the same routines behind ``fit``/``predict`` so they compose
with scikit-learn tooling.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .dataset import PanelDataset, VariableSelection, stack
from .exceptions import (
    DegenerateEntityVariance,
    NegativeComponentTruncated,
    NotEnoughEntities,
    TooFewObservations,
    UsageError,
    WrongModel,
)
from .linreg import (
    FitStats,
    RegressionFit,
    check_rank,
    compute_fit_statistics,
    make_fit,
    qr_solve,
    solve_ols,
)

MODELS = ("pooled", "fixed", "random")
WEIGHTINGS = ("none", "cross_section")


@dataclass(frozen=True)
class EffectsDecomposition:
    common_intercept: float
    entity_intercepts: dict
    deviations: dict


@dataclass(frozen=True)
class VarianceComponents:
    """Swamy-Arora variance components and the implied GLS weights."""

    sigma_u: float
    sigma_e: float
    n_periods: int

    @property
    def rho_u(self) -> float:
        total = self.sigma_u ** 2 + self.sigma_e ** 2
        return self.sigma_u ** 2 / total if total > 0 else 0.0

    @property
    def rho_e(self) -> float:
        return 1.0 - self.rho_u

    @property
    def theta(self) -> float:
        su2, se2 = self.sigma_u ** 2, self.sigma_e ** 2
        if su2 == 0.0:
            return 0.0
        return 1.0 - math.sqrt(se2 / (self.n_periods * su2 + se2))


@dataclass(frozen=True)
class PanelFit:
    """Result of a panel regression.

    ``fit`` holds the slopes followed by the common intercept. Its
    residuals and fitted values are on the original scale of the
    dependent variable; its ``stats`` are the weighted statistics when a
    transformation was applied.
    """

    model: str
    weighting: str
    fit: RegressionFit
    dependent: str
    regressors: tuple
    entities: tuple
    periods: tuple
    effects: EffectsDecomposition | None = None
    components: VarianceComponents | None = None
    weighted_stats: FitStats | None = None
    unweighted_stats: FitStats | None = None
    warnings: tuple = field(default_factory=tuple)

    @property
    def slopes(self) -> np.ndarray:
        return self.fit.coefficients[:-1]

    @property
    def intercept(self) -> float:
        return float(self.fit.coefficients[-1])

    @property
    def slope_covariance(self) -> np.ndarray:
        return self.fit.covariance[:-1, :-1]

    def equation(self, digits: int = 7) -> str:
        """Estimated equation, e.g. ``Y = 64.00942 * X1 + 6485.240``."""
        text = _render_equation(self.dependent, self.slopes, self.regressors, self.intercept, digits)
        if self.model == "fixed":
            text += " + [CX=F]"
        return text


@dataclass(frozen=True)
class RegionalEquation:
    """One entity's prediction equation under a common slope vector."""

    entity: str
    dependent: str
    intercept: float
    slopes: dict

    def predict(self, values) -> float:
        if isinstance(values, dict):
            missing = [n for n in self.slopes if n not in values]
            if missing:
                raise UsageError(f"missing regressor value(s): {', '.join(missing)}")
            x = [values[n] for n in self.slopes]
        else:
            x = list(values)
            if len(x) != len(self.slopes):
                raise UsageError(f"expected {len(self.slopes)} regressor values, got {len(x)}")
        return self.intercept + float(np.dot(list(self.slopes.values()), x))

    def render(self, digits: int = 7) -> str:
        terms = " ".join(
            f"{'-' if b < 0 else '+'} {format_sig(abs(b), digits)} * {n}" for n, b in self.slopes.items()
        )
        return f"{self.dependent} ({self.entity}) = {format_sig(self.intercept, digits)} {terms}"


def format_sig(value: float, digits: int = 7) -> str:
    """Fixed-point text with ``digits`` significant digits (64.00942, 6485.240)."""
    if value == 0 or not math.isfinite(value):
        return f"{value:.{digits - 1}f}"
    int_digits = int(math.floor(math.log10(abs(value)))) + 1
    decimals = max(0, digits - int_digits)
    text = f"{value:.{decimals}f}"
    # rounding may add a digit (99.99996 -> 100.0000)
    if len(text.lstrip("-").replace(".", "").lstrip("0")) > digits and decimals > 0:
        text = f"{value:.{decimals - 1}f}"
    return text


def _render_equation(dep, slopes, names, intercept, digits):
    parts = []
    for b, n in zip(slopes, names):
        body = f"{format_sig(abs(b), digits)} * {n}"
        if parts:
            parts.append(f"{'-' if b < 0 else '+'} {body}")
        else:
            parts.append(f"-{body}" if b < 0 else body)
    sign = "-" if intercept < 0 else "+"
    parts.append(f"{sign} {format_sig(abs(intercept), digits)}")
    return f"{dep} = " + " ".join(parts)


# -- array-level estimators ---------------------------------------------------


def _layout(y, X, n_entities, n_periods):
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if n_entities < 2 or n_periods < 2:
        raise TooFewObservations("panel needs at least 2 entities and 2 periods")
    if y.shape != (n_entities * n_periods,) or X.shape[0] != y.shape[0]:
        raise UsageError(
            f"expected {n_entities * n_periods} stacked rows, got y {y.shape} and X {X.shape}"
        )
    groups = np.repeat(np.arange(n_entities), n_periods)
    return y, X, groups


def _default_names(k, names):
    return tuple(names) if names is not None else tuple(f"x{j + 1}" for j in range(k))


def _within(y, X, n_entities, n_periods):
    k = X.shape[1]
    Y = y.reshape(n_entities, n_periods)
    Xr = X.reshape(n_entities, n_periods, k)
    ybar = Y.mean(axis=1)
    xbar = Xr.mean(axis=1)
    yd = (Y - ybar[:, None]).reshape(-1)
    Xd = (Xr - xbar[:, None, :]).reshape(-1, k)
    return yd, Xd, ybar, xbar


def _effects(alpha, entities):
    common = float(np.mean(alpha))
    return EffectsDecomposition(
        common_intercept=common,
        entity_intercepts={e: float(a) for e, a in zip(entities, alpha)},
        deviations={e: float(a - common) for e, a in zip(entities, alpha)},
    )


def _intercept_block(cov_slopes, xbar_all, var_ybar):
    """Covariance of (slopes, ybar - xbar'slopes)."""
    k = len(xbar_all)
    cov = np.empty((k + 1, k + 1))
    cov[:k, :k] = cov_slopes
    cross = -cov_slopes @ xbar_all
    cov[:k, k] = cross
    cov[k, :k] = cross
    cov[k, k] = var_ybar + xbar_all @ cov_slopes @ xbar_all
    return cov


def pooled_arrays(y, X, n_entities, n_periods, *, names=None, dependent="y",
                  entities=None, periods=None) -> PanelFit:
    """Pooled OLS on stacked arrays ``X`` (regressors only, no constant)."""
    y, X, groups = _layout(y, X, n_entities, n_periods)
    names = _default_names(X.shape[1], names)
    Xc = np.column_stack([X, np.ones(len(y))])
    fit = solve_ols(y, Xc, groups=groups, names=(*names, "C"))
    return PanelFit(
        model="pooled", weighting="none", fit=fit, dependent=dependent, regressors=names,
        entities=tuple(entities) if entities is not None else tuple(range(n_entities)),
        periods=tuple(periods) if periods is not None else tuple(range(n_periods)),
    )


def fixed_effects_arrays(y, X, n_entities, n_periods, *, weighting="none", names=None,
                         dependent="y", entities=None, periods=None) -> PanelFit:
    """Within estimator, optionally with one-step cross-section weights.

    Slopes come from the entity-demeaned regression. Each entity intercept
    is ``ybar_i - xbar_i' b`` and the reported constant is their average.
    Degrees of freedom count the slopes plus one intercept per entity.

    With ``weighting="cross_section"`` the unweighted fit's residuals give
    a standard deviation per entity (divisor T); every observation of that
    entity is divided by it and the model is refit once.
    """
    if weighting not in WEIGHTINGS:
        raise UsageError(f"weighting must be one of {WEIGHTINGS}, got {weighting!r}")
    y, X, groups = _layout(y, X, n_entities, n_periods)
    names = _default_names(X.shape[1], names)
    entities = tuple(entities) if entities is not None else tuple(range(n_entities))
    n, k = X.shape
    k_total = k + n_entities
    if n <= k_total:
        raise TooFewObservations(
            f"fixed effects need N*T > k + N (N*T={n}, k={k}, N={n_entities})"
        )
    yd, Xd, ybar, xbar = _within(y, X, n_entities, n_periods)
    check_rank(Xd, names)
    beta, xtx_inv = qr_solve(Xd, yd)
    resid = yd - Xd @ beta

    weighted = unweighted = None
    if weighting == "none":
        stats = compute_fit_statistics(y, y - resid, resid, n, k_total, groups=groups)
        cov_slopes = stats.se_regression ** 2 * xtx_inv
        var_ybar = stats.se_regression ** 2 / n
    else:
        sigma_i = np.sqrt((resid.reshape(n_entities, n_periods) ** 2).mean(axis=1))
        tol = 1e-12 * max(1.0, float(np.abs(y).max()))
        bad = [entities[i] for i in np.flatnonzero(sigma_i <= tol)]
        if bad:
            raise DegenerateEntityVariance(
                f"zero residual variance for entit{'y' if len(bad) == 1 else 'ies'} "
                f"{', '.join(map(str, bad))}; cross-section weights undefined"
            )
        w = np.repeat(1.0 / sigma_i, n_periods)
        beta, xtx_inv = qr_solve(Xd * w[:, None], yd * w)
        resid = yd - Xd @ beta
        yw, rw = y * w, resid * w
        weighted = compute_fit_statistics(yw, yw - rw, rw, n, k_total, groups=groups)
        unweighted = compute_fit_statistics(y, y - resid, resid, n, k_total, groups=groups)
        stats = weighted
        s2 = weighted.se_regression ** 2
        cov_slopes = s2 * xtx_inv
        var_ybar = s2 * float(np.mean(sigma_i ** 2)) / n

    alpha = ybar - xbar @ beta
    effects = _effects(alpha, entities)
    coef = np.append(beta, effects.common_intercept)
    cov = _intercept_block(cov_slopes, X.mean(axis=0), var_ybar)
    fit = make_fit(coef, cov, resid, y - resid, stats)
    return PanelFit(
        model="fixed", weighting=weighting, fit=fit, dependent=dependent, regressors=names,
        entities=entities,
        periods=tuple(periods) if periods is not None else tuple(range(n_periods)),
        effects=effects, weighted_stats=weighted, unweighted_stats=unweighted,
    )


def swamy_arora_components(y, X, n_entities, n_periods):
    """Variance components from the within and between regressions.

    Returns ``(components, messages)``; a negative cross-section variance
    estimate is set to zero and reported in ``messages``.
    """
    y, X, _ = _layout(y, X, n_entities, n_periods)
    k = X.shape[1]
    if n_entities - k - 1 <= 0:
        raise NotEnoughEntities(
            f"between regression needs more than k + 1 = {k + 1} entities, got {n_entities}"
        )
    df_within = n_entities * (n_periods - 1) - k
    if df_within <= 0:
        raise TooFewObservations("no degrees of freedom left for the within regression")
    yd, Xd, ybar, xbar = _within(y, X, n_entities, n_periods)
    check_rank(Xd)
    b_w, _ = qr_solve(Xd, yd)
    e_w = yd - Xd @ b_w
    sigma_e2 = float(e_w @ e_w) / df_within

    Xb = np.column_stack([xbar, np.ones(n_entities)])
    check_rank(Xb)
    b_b, _ = qr_solve(Xb, ybar)
    e_b = ybar - Xb @ b_b
    sigma_1sq = float(e_b @ e_b) / (n_entities - k - 1)
    sigma_u2 = sigma_1sq - sigma_e2 / n_periods
    messages = []
    if sigma_u2 < 0:
        messages.append(
            f"negative cross-section variance estimate ({sigma_u2:.6g}) truncated to zero"
        )
        warnings.warn(messages[-1], NegativeComponentTruncated, stacklevel=3)
        sigma_u2 = 0.0
    return VarianceComponents(math.sqrt(sigma_u2), math.sqrt(sigma_e2), n_periods), messages


def random_effects_arrays(y, X, n_entities, n_periods, *, names=None, dependent="y",
                          entities=None, periods=None, theta=None) -> PanelFit:
    """Random-effects EGLS with Swamy-Arora variance components.

    Parameters
    ----------
    theta : float, optional
        Override the estimated quasi-demeaning factor. ``0`` gives pooled
        OLS and ``1`` the within estimator. Meant for testing.
    """
    y, X, groups = _layout(y, X, n_entities, n_periods)
    names = _default_names(X.shape[1], names)
    entities = tuple(entities) if entities is not None else tuple(range(n_entities))
    n, k = X.shape
    components, messages = swamy_arora_components(y, X, n_entities, n_periods)
    if theta is None:
        theta = components.theta
    if not 0.0 <= theta <= 1.0:
        raise UsageError(f"theta must lie in [0, 1], got {theta}")

    Xc = np.column_stack([X, np.ones(n)])
    if theta == 0.0:
        ys, Xs = y, Xc
    else:
        Y = y.reshape(n_entities, n_periods)
        Xr = Xc.reshape(n_entities, n_periods, k + 1)
        ys = (Y - theta * Y.mean(axis=1)[:, None]).reshape(-1)
        Xs = (Xr - theta * Xr.mean(axis=1)[:, None, :]).reshape(-1, k + 1)

    if theta < 1.0:
        tfit = solve_ols(ys, Xs, groups=groups, names=(*names, "C"), has_constant=True)
        coef, cov, wstats = tfit.coefficients, tfit.covariance, tfit.stats
    else:
        # the constant column vanishes; recover the intercept from the means
        within = fixed_effects_arrays(y, X, n_entities, n_periods, names=names)
        coef, cov = within.fit.coefficients, within.fit.covariance
        wres = ys - Xs[:, :k] @ coef[:k]
        wstats = compute_fit_statistics(ys, ys - wres, wres, n, k + 1, groups=groups)

    fitted = Xc @ coef
    resid = y - fitted
    unweighted = compute_fit_statistics(y, fitted, resid, n, k + 1, groups=groups)
    # BLUP shrinkage T*su2 / (T*su2 + se2) equals 1 - (1 - theta)^2
    shrink = 1.0 - (1.0 - theta) ** 2
    u = shrink * resid.reshape(n_entities, n_periods).mean(axis=1)
    common = float(coef[-1])
    effects = EffectsDecomposition(
        common_intercept=common,
        entity_intercepts={e: common + float(v) for e, v in zip(entities, u)},
        deviations={e: float(v) for e, v in zip(entities, u)},
    )
    fit = make_fit(coef, cov, resid, fitted, wstats)
    return PanelFit(
        model="random", weighting="none", fit=fit, dependent=dependent, regressors=names,
        entities=entities,
        periods=tuple(periods) if periods is not None else tuple(range(n_periods)),
        effects=effects, components=components, weighted_stats=wstats,
        unweighted_stats=unweighted, warnings=tuple(messages),
    )


# -- dataset-level API --------------------------------------------------------


def _unpack(dataset: PanelDataset, sel: VariableSelection):
    y, X, _ = stack(dataset, sel)
    return dict(
        y=y, X=X, n_entities=dataset.n_entities, n_periods=dataset.n_periods,
        names=sel.regressors, dependent=sel.dependent,
        entities=dataset.entities, periods=dataset.periods,
    )


def fit_pooled(dataset: PanelDataset, sel: VariableSelection) -> PanelFit:
    """Panel least squares ignoring the entity structure."""
    a = _unpack(dataset, sel)
    return pooled_arrays(a.pop("y"), a.pop("X"), a.pop("n_entities"), a.pop("n_periods"), **a)


def fit_fixed_effects(dataset: PanelDataset, sel: VariableSelection,
                      weighting: str = "none") -> PanelFit:
    a = _unpack(dataset, sel)
    return fixed_effects_arrays(a.pop("y"), a.pop("X"), a.pop("n_entities"), a.pop("n_periods"),
                                weighting=weighting, **a)


def fit_random_effects(dataset: PanelDataset, sel: VariableSelection, *, theta=None) -> PanelFit:
    a = _unpack(dataset, sel)
    return random_effects_arrays(a.pop("y"), a.pop("X"), a.pop("n_entities"), a.pop("n_periods"),
                                 theta=theta, **a)


def fit_panel(dataset: PanelDataset, sel: VariableSelection, model: str = "pooled",
              weighting: str = "none") -> PanelFit:
    if model == "pooled":
        if weighting != "none":
            raise UsageError("cross-section weights apply to the fixed-effects model only")
        return fit_pooled(dataset, sel)
    if model == "fixed":
        return fit_fixed_effects(dataset, sel, weighting)
    if model == "random":
        if weighting != "none":
            raise UsageError("cross-section weights apply to the fixed-effects model only")
        return fit_random_effects(dataset, sel)
    raise UsageError(f"model must be one of {MODELS}, got {model!r}")


def extract_regional_equations(panel_fit: PanelFit) -> list[RegionalEquation]:
    """Per-entity equations sharing the fixed-effects slopes."""
    if panel_fit.model != "fixed":
        raise WrongModel(f"regional equations need a fixed-effects fit, got {panel_fit.model!r}")
    slopes = dict(zip(panel_fit.regressors, map(float, panel_fit.slopes)))
    return [
        RegionalEquation(str(e), panel_fit.dependent, panel_fit.effects.entity_intercepts[e], slopes)
        for e in panel_fit.entities
    ]


# -- scikit-learn style estimators -------------------------------------------


def _balanced_order(groups, n_rows):
    """Stable row order grouping entities by first appearance."""
    groups = np.asarray(groups)
    if groups.shape != (n_rows,):
        raise UsageError(f"groups must have one label per row ({n_rows}), got shape {groups.shape}")
    labels, first, inverse, counts = np.unique(
        groups, return_index=True, return_inverse=True, return_counts=True
    )
    if len(set(counts.tolist())) != 1:
        raise UsageError("unbalanced panel: every group needs the same number of rows")
    rank = np.empty(len(labels), dtype=int)
    rank[np.argsort(first)] = np.arange(len(labels))
    order = np.argsort(rank[inverse], kind="stable")
    entities = labels[np.argsort(first)]
    return order, entities, len(labels), int(counts[0])


class _PanelRegressor(RegressorMixin, BaseEstimator):
    """Shared fit/predict plumbing.

    ``fit(X, y, groups)`` expects one entity label per row; within each
    entity rows must already be in time order.
    """

    def _fit_arrays(self, y, X, n_entities, n_periods, **kwargs):
        raise NotImplementedError

    def fit(self, X, y, groups):
        X, y = validate_data(self, X, y, y_numeric=True)
        order, entities, n_entities, n_periods = _balanced_order(groups, X.shape[0])
        names = getattr(self, "feature_names_in_", None)
        self.result_ = self._fit_arrays(
            y[order], X[order], n_entities, n_periods,
            names=None if names is None else tuple(names),
            entities=tuple(entities.tolist()),
        )
        self.coef_ = self.result_.slopes.copy()
        self.intercept_ = self.result_.intercept
        return self

    def predict(self, X, groups=None):
        """Predict with the common intercept, or each entity's intercept if
        ``groups`` is given (unknown entities fall back to the common one)."""
        check_is_fitted(self)
        X = validate_data(self, X, reset=False)
        pred = X @ self.coef_ + self.intercept_
        effects = self.result_.effects
        if groups is not None and effects is not None:
            pred = pred + np.array([effects.deviations.get(g, 0.0) for g in np.asarray(groups).tolist()])
        return pred


class PooledOLS(_PanelRegressor):
    def _fit_arrays(self, y, X, n_entities, n_periods, **kwargs):
        return pooled_arrays(y, X, n_entities, n_periods, **kwargs)


class FixedEffects(_PanelRegressor):
    """Fixed-effects (within) regression.

    Parameters
    ----------
    weights : {"none", "cross_section"}
        One-step cross-section weighting.
    """

    def __init__(self, weights="none"):
        self.weights = weights

    def _fit_arrays(self, y, X, n_entities, n_periods, **kwargs):
        return fixed_effects_arrays(y, X, n_entities, n_periods, weighting=self.weights, **kwargs)


class RandomEffects(_PanelRegressor):
    def _fit_arrays(self, y, X, n_entities, n_periods, **kwargs):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NegativeComponentTruncated)
            return random_effects_arrays(y, X, n_entities, n_periods, **kwargs)
