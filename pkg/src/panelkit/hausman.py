"""Hausman test of fixed against random effects."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dataset import PanelDataset, VariableSelection
from .exceptions import IndefiniteCovarianceDifference, NegativeComponentTruncated
from .linreg import chi_square_sf, two_sided_normal
from .panel import fit_fixed_effects, fit_random_effects


@dataclass(frozen=True)
class HausmanRow:
    name: str
    fixed: float
    random: float
    var_diff: float
    prob: float | None


@dataclass(frozen=True)
class HausmanResult:
    statistic: float
    df: int
    p_value: float
    per_variable: tuple
    indefinite_flag: bool = False
    warnings: tuple = field(default_factory=tuple)
    metadata: dict = field(default_factory=dict)


def hausman_statistic(b_fixed, V_fixed, b_random, V_random, names=None) -> HausmanResult:
    """Hausman statistic from two slope vectors and their covariances.

    ``H = d' (V_fixed - V_random)^-1 d`` with ``d = b_fixed - b_random``,
    referred to a chi-square with ``len(d)`` degrees of freedom. If the
    covariance difference is not positive definite a pseudo-inverse is
    used and ``indefinite_flag`` is set.
    """
    b_fixed = np.atleast_1d(np.asarray(b_fixed, dtype=float))
    b_random = np.atleast_1d(np.asarray(b_random, dtype=float))
    V_fixed = np.atleast_2d(np.asarray(V_fixed, dtype=float))
    V_random = np.atleast_2d(np.asarray(V_random, dtype=float))
    k = len(b_fixed)
    names = tuple(names) if names is not None else tuple(f"x{j + 1}" for j in range(k))

    d = b_fixed - b_random
    diff = V_fixed - V_random
    diff = 0.5 * (diff + diff.T)
    eig = np.linalg.eigvalsh(diff)
    indefinite = bool(eig[0] <= 1e-12 * max(np.abs(eig).max(), np.finfo(float).tiny))
    messages = []
    if indefinite:
        stat = float(d @ np.linalg.pinv(diff, hermitian=True) @ d)
        messages.append(
            "covariance difference V_fixed - V_random is not positive definite; "
            "statistic computed with a pseudo-inverse"
        )
        warnings.warn(messages[-1], IndefiniteCovarianceDifference, stacklevel=2)
    else:
        stat = float(d @ np.linalg.solve(diff, d))
    p = float(chi_square_sf(max(stat, 0.0), k))

    rows = []
    for j in range(k):
        v = float(diff[j, j])
        prob = float(two_sided_normal(d[j] / np.sqrt(v))) if v > 0 else None
        rows.append(HausmanRow(names[j], float(b_fixed[j]), float(b_random[j]), v, prob))
    return HausmanResult(stat, k, p, tuple(rows), indefinite, tuple(messages))


def hausman(dataset: PanelDataset, sel: VariableSelection) -> HausmanResult:
    """Compare unweighted within slopes against random-effects slopes."""
    fe = fit_fixed_effects(dataset, sel, weighting="none")
    # truncation is carried in re.warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NegativeComponentTruncated)
        re = fit_random_effects(dataset, sel)
    res = hausman_statistic(fe.slopes, fe.slope_covariance, re.slopes, re.slope_covariance,
                            sel.regressors)
    return HausmanResult(
        res.statistic, res.df, res.p_value, res.per_variable, res.indefinite_flag,
        re.warnings + res.warnings,
        {
            "fixed_estimator": "within (unweighted)",
            "fixed_variance_df": "N*T - N - k",
            "random_estimator": "Swamy-Arora",
            "theta": re.components.theta,
        },
    )
