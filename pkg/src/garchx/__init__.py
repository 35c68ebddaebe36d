"""GARCH(p,q)-X estimation, covariate significance tests, and selection.

The package fits conditional-variance models with exogenous positive
covariates by Gaussian QMLE, computes sandwich (robust) standard errors,
tests each covariate with a boundary-aware Wald statistic, controls the
false discovery rate of the selected covariate set by a Benjamini-
Yekutieli step-up, and compares null/selected/full models by AIC/BIC.
A Monte Carlo engine replicates the full workflow over experiment grids,
and a CLI covers simulation, raw CSV preparation, fitting, selection, and
experiments.
"""
from .exceptions import (
    ConvergenceWarning,
    DataError,
    DegenerateModelWarning,
    GarchXError,
    NumericalError,
    StationarityWarning,
)
from .model import (
    OMEGA_FLOOR,
    Dataset,
    ModelSpec,
    ParamVector,
    VolatilityPath,
    resolve_presample,
    volatility_gradient,
    volatility_recursion,
    volatility_recursion_with_gradient,
)
from .simulate import (
    CovariateGen,
    ScenarioConfig,
    ShockDist,
    covariate_population_mean,
    gen_covariates,
    gen_shocks,
    scenario_config,
    simulate_garchx,
)
from .qmle import (
    FitOptions,
    FitResult,
    fit_qmle,
    loglik_from_objective,
    qml_objective,
    qml_objective_with_gradient,
    refit,
    sandwich_covariance,
)
from .selection import (
    InfoCriteria,
    SelectionMetrics,
    SelectionOutcome,
    SelectionResult,
    TestReport,
    by_fdr_select,
    covariate_tests,
    info_criteria,
    p_value,
    select_variables,
    selection_metrics,
    wald_stat,
)
from .montecarlo import (
    AggregateRow,
    ExperimentPlan,
    format_tables,
    parse_tables,
    replication_seed,
    run_experiment,
    shock_code_int,
)
from .io import (
    PreparedData,
    SeriesTable,
    emit_report,
    fit_summary,
    ingest_csv,
    log_returns_x100,
    read_prepared_csv,
    read_report,
    selection_report,
    transform_series,
    write_prepared_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateRow",
    "ConvergenceWarning",
    "CovariateGen",
    "DataError",
    "Dataset",
    "DegenerateModelWarning",
    "ExperimentPlan",
    "FitOptions",
    "FitResult",
    "GarchXError",
    "InfoCriteria",
    "ModelSpec",
    "NumericalError",
    "OMEGA_FLOOR",
    "ParamVector",
    "PreparedData",
    "ScenarioConfig",
    "SelectionMetrics",
    "SelectionOutcome",
    "SelectionResult",
    "SeriesTable",
    "ShockDist",
    "StationarityWarning",
    "TestReport",
    "VolatilityPath",
    "by_fdr_select",
    "covariate_population_mean",
    "covariate_tests",
    "emit_report",
    "fit_qmle",
    "fit_summary",
    "format_tables",
    "gen_covariates",
    "gen_shocks",
    "info_criteria",
    "ingest_csv",
    "log_returns_x100",
    "loglik_from_objective",
    "p_value",
    "parse_tables",
    "qml_objective",
    "qml_objective_with_gradient",
    "read_prepared_csv",
    "read_report",
    "refit",
    "replication_seed",
    "resolve_presample",
    "run_experiment",
    "sandwich_covariance",
    "scenario_config",
    "select_variables",
    "selection_metrics",
    "selection_report",
    "shock_code_int",
    "simulate_garchx",
    "transform_series",
    "volatility_gradient",
    "volatility_recursion",
    "volatility_recursion_with_gradient",
    "wald_stat",
    "write_prepared_csv",
]
