"""Monte Carlo experiments: replicate simulate -> select -> compare.

A plan is a grid of (shock distribution, sample size) cells for one
scenario/dimension.  Every replication draws its own seed from
SeedSequence((master_seed, shock_code_int, n, rep)), so any cell or single
replication can be reproduced in isolation and results do not depend on
the number of worker processes: replications are aggregated in replication
order with math.fsum.

Replications that fail numerically are counted, not fatal; a cell is
flagged when more than 10% of its replications failed.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import (
    ConvergenceWarning,
    DataError,
    GarchXError,
    StationarityWarning,
)
from .qmle import FitOptions
from .selection import select_variables, selection_metrics
from .simulate import ScenarioConfig, ShockDist, scenario_config, simulate_garchx

_FAIL_FLAG_FRACTION = 0.1


@dataclass(frozen=True)
class ExperimentPlan:
    """Grid of Monte Carlo cells for one scenario and covariate dimension.

    ``gamma`` overrides the scenario's default coefficient vector (use a
    zero vector for global-null experiments).  ``master_seed`` pins the
    whole experiment; two plans differing only in ``replications`` share
    the seeds of their common replications.
    """

    scenario: int
    d: int
    shocks: tuple[ShockDist, ...]
    sample_sizes: tuple[int, ...] = (500, 1000, 5000, 10000)
    replications: int = 500
    alpha: float = 0.05
    method: str = "by_fdr"
    master_seed: int = 0
    burnin: int = 500
    gamma: tuple[float, ...] | None = None
    workers: int | None = None
    fit_options: FitOptions = field(default_factory=FitOptions)

    def __post_init__(self) -> None:
        object.__setattr__(self, "shocks", tuple(self.shocks))
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        if self.gamma is not None:
            object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        if self.replications < 1:
            raise DataError(
                f"empty plan: replications must be >= 1, got {self.replications}"
            )
        if not self.shocks:
            raise DataError("at least one shock distribution is required")
        if not self.sample_sizes or min(self.sample_sizes) < 1:
            raise DataError("sample sizes must be positive")
        if any(a >= b for a, b in zip(self.sample_sizes, self.sample_sizes[1:])):
            raise DataError("sample sizes must be strictly increasing")

    def config_for(self, shock: ShockDist) -> ScenarioConfig:
        gamma = None if self.gamma is None else np.asarray(self.gamma)
        return scenario_config(self.scenario, self.d, shock, gamma=gamma)


def shock_code_int(shock: ShockDist) -> int:
    """Stable integer encoding of a shock distribution for seed derivation."""
    return 0 if shock.family == "normal" else int(round(shock.df * 1000))


def replication_seed(master_seed: int, shock: ShockDist, n: int, rep: int) -> tuple:
    """Entropy tuple for one replication's SeedSequence."""
    return (int(master_seed), shock_code_int(shock), int(n), int(rep))


@dataclass(frozen=True)
class AggregateRow:
    """Aggregated results of one (shock, n) cell."""

    scenario: int
    shock: str
    d: int
    n: int
    replications: int
    replications_used: int
    n_failed: int
    flagged: bool
    mean_metrics: dict[str, float]
    selection_freq: tuple[float, ...]
    mean_fdp: float
    recovery_rate: float
    ic_means: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "shock": self.shock,
            "d": self.d,
            "n": self.n,
            "replications": self.replications,
            "replications_used": self.replications_used,
            "n_failed": self.n_failed,
            "flagged": self.flagged,
            "mean_metrics": dict(self.mean_metrics),
            "selection_freq": list(self.selection_freq),
            "mean_fdp": self.mean_fdp,
            "recovery_rate": self.recovery_rate,
            "ic_means": dict(self.ic_means),
        }


def _replicate(task: tuple) -> dict:
    """Run one replication; never raises on numerical failure."""
    config, n, seed_entropy, alpha, method, burnin, fit_options = task
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StationarityWarning)
        warnings.simplefilter("ignore", ConvergenceWarning)
        try:
            data = simulate_garchx(config, n, seed=seed_entropy, burnin=burnin)
            outcome = select_variables(
                config.spec, data, alpha=alpha, method=method, opts=fit_options
            )
        except (GarchXError, np.linalg.LinAlgError, FloatingPointError) as exc:
            return {"ok": False, "error": f"{type(exc).__name__}: {exc}"}
    selected = outcome.selection.selected
    active = config.active_set
    metrics = selection_metrics(selected, active, config.spec.d)
    n_selected = len(selected)
    fdp = metrics.incorr_selected / max(n_selected, 1)
    ic = outcome.ic
    return {
        "ok": True,
        "selected": selected,
        "metrics": (
            metrics.corr_selected,
            metrics.incorr_selected,
            metrics.corr_excluded,
            metrics.incorr_excluded,
        ),
        "fdp": fdp,
        "recovered": selected == active,
        "ic": {
            "aic_full": ic["full"].aic,
            "aic_null": ic["null"].aic,
            "aic_selected": ic["selected"].aic,
            "bic_full": ic["full"].bic,
            "bic_null": ic["null"].bic,
            "bic_selected": ic["selected"].bic,
        },
        "converged": outcome.fit_full.converged,
    }


def _aggregate_cell(
    plan: ExperimentPlan, shock: ShockDist, n: int, results: list[dict]
) -> AggregateRow:
    ok = [r for r in results if r["ok"]]
    used = len(ok)
    n_failed = len(results) - used
    flagged = n_failed > _FAIL_FLAG_FRACTION * plan.replications or used == 0

    def mean(values) -> float:
        vals = list(values)
        return math.fsum(vals) / used if used else float("nan")

    metric_names = ("corr_selected", "incorr_selected", "corr_excluded",
                    "incorr_excluded")
    mean_metrics = {
        name: mean(r["metrics"][i] for r in ok)
        for i, name in enumerate(metric_names)
    }
    freq = tuple(
        mean(1.0 if k in r["selected"] else 0.0 for r in ok)
        for k in range(1, plan.d + 1)
    )
    ic_names = ("aic_full", "aic_null", "aic_selected",
                "bic_full", "bic_null", "bic_selected")
    ic_means = {name: mean(r["ic"][name] for r in ok) for name in ic_names}
    return AggregateRow(
        scenario=plan.scenario,
        shock=shock.code,
        d=plan.d,
        n=int(n),
        replications=plan.replications,
        replications_used=used,
        n_failed=n_failed,
        flagged=flagged,
        mean_metrics=mean_metrics,
        selection_freq=freq,
        mean_fdp=mean(r["fdp"] for r in ok),
        recovery_rate=mean(1.0 if r["recovered"] else 0.0 for r in ok),
        ic_means=ic_means,
    )


def run_experiment(
    plan: ExperimentPlan,
    workers: int | None = None,
    progress: Callable[[AggregateRow], None] | None = None,
) -> list[AggregateRow]:
    """Run every (shock, n) cell of the plan; one AggregateRow per cell.

    ``workers`` overrides ``plan.workers``; when both are None, uses
    os.cpu_count().  ``workers=1`` runs inline.  The aggregates are
    identical for any worker count.
    """
    if workers is None:
        workers = plan.workers
    if workers is None:
        workers = os.cpu_count() or 1
    if workers < 1:
        raise DataError(f"workers must be >= 1, got {workers}")
    rows = []
    for shock in plan.shocks:
        config = plan.config_for(shock)
        for n in plan.sample_sizes:
            tasks = [
                (
                    config,
                    n,
                    replication_seed(plan.master_seed, shock, n, rep),
                    plan.alpha,
                    plan.method,
                    plan.burnin,
                    plan.fit_options,
                )
                for rep in range(plan.replications)
            ]
            if workers == 1:
                results = [_replicate(t) for t in tasks]
            else:
                chunk = max(1, len(tasks) // (workers * 8))
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    results = list(pool.map(_replicate, tasks, chunksize=chunk))
            row = _aggregate_cell(plan, shock, n, results)
            rows.append(row)
            if progress is not None:
                progress(row)
    return rows


def _fmt(value, decimals: int | None = None) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{decimals}f}" if decimals is not None else repr(
            float(value)
        )
    return str(value)


# Printed precision per section: confusion means and frequencies to 2
# decimals, information criteria to 1, error rates to 4.
_METRIC_DECIMALS = 2
_FREQ_DECIMALS = 2
_IC_DECIMALS = 1
_RATE_DECIMALS = 4


def format_tables(rows: list[AggregateRow]) -> str:
    """Render aggregate rows as four pipe-delimited tables.

    Sections: per-cell mean confusion counts, long-format selection
    frequencies, error/recovery rates, and mean information criteria.
    ``parse_tables`` inverts the rendering at the printed precision.
    """
    if not rows:
        raise DataError("no aggregate rows to format")
    lines = []
    lines.append("#table selection_means")
    lines.append("scenario|shock|d|n|replications|used|corr_selected|"
                 "incorr_selected|corr_excluded|incorr_excluded")
    for r in rows:
        m = r.mean_metrics
        head = [_fmt(v) for v in (r.scenario, r.shock, r.d, r.n,
                                  r.replications, r.replications_used)]
        body = [_fmt(m[name], _METRIC_DECIMALS) for name in (
            "corr_selected", "incorr_selected", "corr_excluded",
            "incorr_excluded")]
        lines.append("|".join(head + body))
    lines.append("")
    lines.append("#table selection_freq")
    lines.append("scenario|shock|d|n|covariate|freq")
    for r in rows:
        for k, f in enumerate(r.selection_freq, start=1):
            lines.append("|".join(
                [_fmt(v) for v in (r.scenario, r.shock, r.d, r.n, k)]
                + [_fmt(f, _FREQ_DECIMALS)]
            ))
    lines.append("")
    lines.append("#table error_rates")
    lines.append("scenario|shock|d|n|mean_fdp|recovery_rate|failed|flagged")
    for r in rows:
        lines.append("|".join(
            [_fmt(v) for v in (r.scenario, r.shock, r.d, r.n)]
            + [_fmt(r.mean_fdp, _RATE_DECIMALS),
               _fmt(r.recovery_rate, _RATE_DECIMALS),
               _fmt(r.n_failed), _fmt(r.flagged)]
        ))
    lines.append("")
    lines.append("#table information_criteria")
    lines.append("scenario|shock|d|n|aic_full|aic_null|aic_selected|"
                 "bic_full|bic_null|bic_selected")
    for r in rows:
        ic = r.ic_means
        lines.append("|".join(
            [_fmt(v) for v in (r.scenario, r.shock, r.d, r.n)]
            + [_fmt(ic[name], _IC_DECIMALS) for name in (
                "aic_full", "aic_null", "aic_selected",
                "bic_full", "bic_null", "bic_selected")]
        ))
    lines.append("")
    return "\n".join(lines)


def _parse_cell(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    if text in ("true", "false"):
        return text == "true"
    return text


def parse_tables(text: str) -> dict[str, list[dict]]:
    """Parse the output of ``format_tables`` back into per-section rows."""
    sections: dict[str, list[dict]] = {}
    header: list[str] | None = None
    current: str | None = None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            current = None
            header = None
            continue
        if line.startswith("#table "):
            current = line[len("#table "):]
            sections[current] = []
            header = None
            continue
        if current is None:
            continue
        if header is None:
            header = line.split("|")
            continue
        values = [_parse_cell(v) for v in line.split("|")]
        if len(values) != len(header):
            raise DataError(f"malformed table row: {line!r}")
        sections[current].append(dict(zip(header, values)))
    return sections
