"""Covariate significance tests and FDR-controlled variable selection.

For covariate k the Wald statistic is

    t_n(k) = sqrt(n) * gamma_hat_k / sqrt(Sigma_hat[j, j]),

with j the flat-parameter position of gamma_k (j = p + q + k, 0-based).
Because gamma_k = 0 lies on the boundary of the parameter space, the
statistic's null distribution is chi-bar-square: a point mass of 1/2 at
zero mixed with half a chi-square(1).  The one-sided p-value is therefore

    pi_k = (1/2) P(chi2_1 > t^2) = P(Z > |t|) = erfc(|t| / sqrt 2) / 2,

which never exceeds 1/2.

Selection applies the Benjamini-Yekutieli step-up at level alpha (valid
under arbitrary dependence among the tests): with sorted p-values pi_(1)
<= ... <= pi_(d) and harmonic sum H_d = sum_{l<=d} 1/l, the cutoff is

    l = max{ k : pi_(k) <= (k / d) * (alpha / H_d) },

selecting the l smallest p-values.  A Bonferroni rule (pi_k <= alpha / d)
is available as a conservative alternative.  Reported adjusted p-values
are always the monotone BY adjustment min(1, min_{j>=k} (d H_d / j) pi_(j)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .exceptions import DataError, NumericalError
from .model import Dataset, ModelSpec
from .qmle import FitOptions, FitResult, fit_qmle

_METHODS = ("by_fdr", "bonferroni")


@dataclass(frozen=True)
class TestReport:
    """Wald test for one covariate coefficient (1-based index)."""

    index: int
    gamma_hat: float
    std_err: float
    t_stat: float
    p_value: float


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of a multiple-testing selection rule.

    ``selected`` holds 1-based covariate indices in increasing order;
    ``cutoff_index`` is the step-up cutoff (0 when nothing is selected);
    ``adjusted_p`` are BY-adjusted p-values in original covariate order.
    """

    method: str
    alpha: float
    cutoff_index: int
    selected: tuple[int, ...]
    adjusted_p: np.ndarray
    reports: tuple[TestReport, ...] | None = None


@dataclass(frozen=True)
class SelectionMetrics:
    """Confusion counts of a selected set against the true active set."""

    corr_selected: int
    incorr_selected: int
    corr_excluded: int
    incorr_excluded: int


@dataclass(frozen=True)
class InfoCriteria:
    """Akaike and Bayesian information criteria for one fitted model."""

    loglik: float
    n_params: int
    n_obs: int

    @property
    def aic(self) -> float:
        return -2.0 * self.loglik + 2.0 * self.n_params

    @property
    def bic(self) -> float:
        return -2.0 * self.loglik + self.n_params * math.log(self.n_obs)


@dataclass(frozen=True)
class SelectionOutcome:
    """Full selection workflow: fits, tests, and model comparison."""

    fit_full: FitResult
    fit_null: FitResult
    fit_selected: FitResult
    selection: SelectionResult
    ic: dict[str, InfoCriteria]

    @property
    def selected(self) -> tuple[int, ...]:
        return self.selection.selected


def wald_stat(fit: FitResult, k: int) -> float:
    """Wald statistic sqrt(n) gamma_hat_k / sqrt(Sigma_hat[j, j]) for covariate k."""
    spec = fit.spec
    if not 1 <= k <= spec.d:
        raise DataError(f"covariate index k must be in 1..{spec.d}, got {k}")
    j = spec.p + spec.q + k
    var_jj = float(fit.Sigma_hat[j, j])
    if not math.isfinite(var_jj) or var_jj <= 0.0:
        raise NumericalError(
            f"Sigma_hat[{j},{j}] = {var_jj!r} is not a valid variance"
        )
    gamma_k = float(fit.theta_hat.gamma[k - 1])
    return math.sqrt(fit.n_obs) * gamma_k / math.sqrt(var_jj)


def p_value(t_stat: float) -> float:
    """Chi-bar-square p-value P(Z > |t|); always in [0, 1/2]."""
    if not math.isfinite(t_stat):
        raise DataError(f"t_stat must be finite, got {t_stat!r}")
    return 0.5 * float(erfc(abs(t_stat) / math.sqrt(2.0)))


def _by_adjusted(p_sorted: np.ndarray, d: int) -> np.ndarray:
    """Monotone BY adjustment on sorted p-values."""
    h_d = float(np.sum(1.0 / np.arange(1, d + 1)))
    ranks = np.arange(1, d + 1)
    scaled = np.minimum(p_sorted * (d * h_d / ranks), 1.0)
    return np.minimum.accumulate(scaled[::-1])[::-1]


def by_fdr_select(
    p_values, alpha: float, method: str = "by_fdr"
) -> SelectionResult:
    """Step-up selection on a vector of p-values.

    ``by_fdr`` keeps the l smallest p-values where l is the largest k with
    pi_(k) <= (k/d) alpha / H_d; ``bonferroni`` keeps every pi_k <= alpha/d.
    Indices in ``selected`` are 1-based positions in the input vector.
    """
    p = np.asarray(p_values, dtype=float)
    if p.ndim != 1 or len(p) == 0:
        raise DataError("p_values must be a nonempty one-dimensional vector")
    if not np.all(np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise DataError("p_values must lie in [0, 1]")
    if not 0.0 < alpha < 1.0:
        raise DataError(f"alpha must be in (0, 1), got {alpha}")
    if method not in _METHODS:
        raise DataError(f"method must be one of {_METHODS}, got {method!r}")
    d = len(p)
    order = np.argsort(p, kind="stable")
    p_sorted = p[order]
    adjusted_sorted = _by_adjusted(p_sorted, d)
    adjusted = np.empty(d)
    adjusted[order] = adjusted_sorted

    if method == "by_fdr":
        h_d = float(np.sum(1.0 / np.arange(1, d + 1)))
        thresholds = np.arange(1, d + 1) * alpha / (d * h_d)
        hits = np.nonzero(p_sorted <= thresholds)[0]
        cutoff = int(hits[-1]) + 1 if len(hits) else 0
        selected = tuple(sorted(int(i) + 1 for i in order[:cutoff]))
    else:
        keep = np.nonzero(p <= alpha / d)[0]
        cutoff = len(keep)
        selected = tuple(int(i) + 1 for i in keep)
    return SelectionResult(
        method=method,
        alpha=float(alpha),
        cutoff_index=cutoff,
        selected=selected,
        adjusted_p=adjusted,
    )


def selection_metrics(selected, active_set, d: int) -> SelectionMetrics:
    """Confusion counts; the four fields always sum to d."""
    sel = set(int(k) for k in selected)
    act = set(int(k) for k in active_set)
    universe = set(range(1, d + 1))
    if not sel <= universe or not act <= universe:
        raise DataError(f"indices must lie in 1..{d}")
    return SelectionMetrics(
        corr_selected=len(sel & act),
        incorr_selected=len(sel - act),
        corr_excluded=len(universe - sel - act),
        incorr_excluded=len(act - sel),
    )


def info_criteria(loglik: float, n_params: int, n_obs: int) -> InfoCriteria:
    """AIC = -2 loglik + 2 k and BIC = -2 loglik + k log n.

    ``n_params = 0`` is allowed (a fully pinned model); both criteria then
    collapse to -2 loglik.
    """
    if n_obs < 1 or n_params < 0:
        raise DataError("n_obs must be positive and n_params non-negative")
    return InfoCriteria(loglik=float(loglik), n_params=int(n_params), n_obs=int(n_obs))


def covariate_tests(fit: FitResult) -> tuple[TestReport, ...]:
    """Wald test report for every covariate in the fitted model."""
    reports = []
    for k in range(1, fit.spec.d + 1):
        t = wald_stat(fit, k)
        j = fit.spec.p + fit.spec.q + k
        reports.append(
            TestReport(
                index=k,
                gamma_hat=float(fit.theta_hat.gamma[k - 1]),
                std_err=math.sqrt(float(fit.Sigma_hat[j, j]) / fit.n_obs),
                t_stat=t,
                p_value=p_value(t),
            )
        )
    return tuple(reports)


def select_variables(
    spec: ModelSpec,
    data: Dataset,
    alpha: float = 0.05,
    method: str = "by_fdr",
    opts: FitOptions | None = None,
) -> SelectionOutcome:
    """Fit the full model, test each covariate, select, and refit.

    Returns the full fit, the covariate-free null fit, the refit on the
    selected covariates (the null fit when nothing is selected), the
    selection detail, and information criteria for all three models.
    """
    fit_full = fit_qmle(spec, data, opts)
    null_spec = ModelSpec(p=spec.p, q=spec.q, d=0)
    fit_null = fit_qmle(null_spec, data.subset_covariates(()), opts)

    if spec.d == 0:
        selection = SelectionResult(
            method=method,
            alpha=float(alpha),
            cutoff_index=0,
            selected=(),
            adjusted_p=np.empty(0),
            reports=(),
        )
        fit_selected = fit_full
    else:
        reports = covariate_tests(fit_full)
        raw = by_fdr_select([r.p_value for r in reports], alpha, method)
        selection = SelectionResult(
            method=raw.method,
            alpha=raw.alpha,
            cutoff_index=raw.cutoff_index,
            selected=raw.selected,
            adjusted_p=raw.adjusted_p,
            reports=reports,
        )
        if selection.selected:
            sub_spec = ModelSpec(p=spec.p, q=spec.q, d=len(selection.selected))
            fit_selected = fit_qmle(
                sub_spec, data.subset_covariates(selection.selected), opts
            )
        else:
            fit_selected = fit_null

    ic = {
        "full": info_criteria(fit_full.loglik, fit_full.spec.n_params, data.n),
        "null": info_criteria(fit_null.loglik, fit_null.spec.n_params, data.n),
        "selected": info_criteria(
            fit_selected.loglik, fit_selected.spec.n_params, data.n
        ),
    }
    return SelectionOutcome(
        fit_full=fit_full,
        fit_null=fit_null,
        fit_selected=fit_selected,
        selection=selection,
        ic=ic,
    )
