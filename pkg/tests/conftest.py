"""Shared fixtures.

The Monte Carlo cells used by both the module tests and the acceptance
suite are expensive (hundreds of simulate -> fit -> select replications),
so they are session-scoped: each cell runs exactly once per test session
no matter how many tests consume it.
"""
from __future__ import annotations

import time

import numpy as np
import pytest

from garchx import (
    ExperimentPlan,
    FitOptions,
    ShockDist,
    fit_qmle,
    run_experiment,
    scenario_config,
    simulate_garchx,
)

NORMAL = ShockDist("normal")
T5 = ShockDist("t", df=5.0)

THETA_TRUE_S1_D5 = np.array([0.1, 0.2, 0.4, 0.25, 0.0, 0.3, 0.4, 0.0])


def run_cells(plan: ExperimentPlan) -> dict:
    """Run a plan inline and index the rows by sample size."""
    start = time.perf_counter()
    rows = run_experiment(plan, workers=1)
    elapsed = time.perf_counter() - start
    return {"rows": {row.n: row for row in rows}, "elapsed": elapsed}


@pytest.fixture(scope="session")
def cell_s1_normal() -> dict:
    """Scenario 1, d=5, normal shocks, n in {500, 5000}, 200 replications."""
    plan = ExperimentPlan(
        scenario=1,
        d=5,
        shocks=(NORMAL,),
        sample_sizes=(500, 5000),
        replications=200,
        master_seed=11,
    )
    return run_cells(plan)


@pytest.fixture(scope="session")
def cell_s1_t5_n1000() -> dict:
    """Scenario 1, d=5, standardized t(5) shocks, n=1000, 200 replications."""
    plan = ExperimentPlan(
        scenario=1,
        d=5,
        shocks=(T5,),
        sample_sizes=(1000,),
        replications=200,
        master_seed=22,
    )
    return run_cells(plan)


@pytest.fixture(scope="session")
def cell_s2_normal_n5000() -> dict:
    """Scenario 2 (correlated covariates), d=5, normal, n=5000, 200 reps."""
    plan = ExperimentPlan(
        scenario=2,
        d=5,
        shocks=(NORMAL,),
        sample_sizes=(5000,),
        replications=200,
        master_seed=33,
    )
    return run_cells(plan)


@pytest.fixture(scope="session")
def cell_s2_t5_n1000() -> dict:
    """Scenario 2, d=5, standardized t(5) shocks, n=1000, 200 replications."""
    plan = ExperimentPlan(
        scenario=2,
        d=5,
        shocks=(T5,),
        sample_sizes=(1000,),
        replications=200,
        master_seed=44,
    )
    return run_cells(plan)


@pytest.fixture(scope="session")
def cell_global_null() -> dict:
    """Scenario 1 design with gamma = 0 (no active covariate), 500 reps."""
    plan = ExperimentPlan(
        scenario=1,
        d=5,
        shocks=(NORMAL,),
        sample_sizes=(5000,),
        replications=500,
        gamma=(0.0, 0.0, 0.0, 0.0, 0.0),
        master_seed=55,
    )
    return run_cells(plan)


@pytest.fixture(scope="session")
def cell_s1_n10k() -> dict:
    """Scenario 1, d=5, normal shocks, n=10000, 100 replications."""
    plan = ExperimentPlan(
        scenario=1,
        d=5,
        shocks=(NORMAL,),
        sample_sizes=(10000,),
        replications=100,
        master_seed=66,
    )
    return run_cells(plan)


@pytest.fixture(scope="session")
def theta_samples() -> dict[int, np.ndarray]:
    """Full-model QMLE estimates on scenario-1 data, 100 replications each
    at n in {500, 5000, 10000}; rows are flattened theta_hat vectors."""
    config = scenario_config(1, d=5, shocks=NORMAL)
    opts = FitOptions()
    out: dict[int, np.ndarray] = {}
    for n in (500, 5000, 10000):
        fits = []
        for rep in range(100):
            data = simulate_garchx(config, n, seed=(77, n, rep))
            fits.append(fit_qmle(config.spec, data, opts).theta_hat.flatten())
        out[n] = np.vstack(fits)
    return out


@pytest.fixture(scope="session")
def fit_n10k():
    """One full-model fit on scenario-1 data at n=10^4 (normal shocks)."""
    config = scenario_config(1, d=5, shocks=NORMAL)
    data = simulate_garchx(config, 10_000, seed=88)
    return fit_qmle(config.spec, data, FitOptions())
