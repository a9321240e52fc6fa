"""Panel-data regression and principal-component factor analysis."""

__version__ = "0.1.0"

from .dataset import (
    PanelDataset,
    VariableSelection,
    embedded_sample,
    load_long_csv,
    load_wide_csv,
    stack,
    write_long_csv,
)
from .factor import (
    PCAFactorAnalysis,
    FactorSolution,
    bartlett_sphericity,
    correlation_matrix,
    factor_scores,
    kaiser_retain,
    kmo,
    pca_extract,
    summarize_solution,
    varimax_rotate,
)
from .hausman import HausmanResult, hausman, hausman_statistic
from .linreg import FitStats, RegressionFit, compute_fit_statistics, solve_ols
from .panel import (
    EffectsDecomposition,
    FixedEffects,
    PanelFit,
    PooledOLS,
    RandomEffects,
    VarianceComponents,
    extract_regional_equations,
    fit_fixed_effects,
    fit_pooled,
    fit_random_effects,
)
from .simulate import PanelDGP, generate

__all__ = [
    "EffectsDecomposition",
    "FactorSolution",
    "FitStats",
    "FixedEffects",
    "HausmanResult",
    "PCAFactorAnalysis",
    "PanelDGP",
    "PanelDataset",
    "PanelFit",
    "PooledOLS",
    "RandomEffects",
    "RegressionFit",
    "VariableSelection",
    "VarianceComponents",
    "bartlett_sphericity",
    "compute_fit_statistics",
    "correlation_matrix",
    "embedded_sample",
    "extract_regional_equations",
    "factor_scores",
    "fit_fixed_effects",
    "fit_pooled",
    "fit_random_effects",
    "generate",
    "hausman",
    "hausman_statistic",
    "kaiser_retain",
    "kmo",
    "load_long_csv",
    "load_wide_csv",
    "pca_extract",
    "solve_ols",
    "stack",
    "summarize_solution",
    "varimax_rotate",
    "write_long_csv",
]
