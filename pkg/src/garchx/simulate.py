"""Data generation: shock distributions, covariate designs, model simulation.

Two covariate designs are provided:

* ``ar_lognormal``: column i follows X_it = exp(y_it) where y_it is a
  stationary AR(1) with coefficient phi_i = ar_base + ar_step * i and unit
  innovation variance, columns independent.
* ``correlated_folded``: rows are i.i.d. over time, X_t = |Z_t| with
  Z_t ~ N(0, Sigma), Sigma_ij = exp(-decay * |i - j|).

Shocks are standard normal or Student-t rescaled to unit variance; t
requires df > 4 so the fourth moment used by the robust covariance exists.

All randomness flows through numpy SeedSequence streams: ``simulate_garchx``
spawns one child stream for shocks and one for covariates, so changing the
covariate dimension never perturbs the shock draws.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .exceptions import DataError, NumericalError
from .model import Dataset, ModelSpec, ParamVector


@dataclass(frozen=True)
class ShockDist:
    """Innovation distribution, standardized to mean 0 and variance 1."""

    family: str
    df: float | None = None

    def __post_init__(self) -> None:
        if self.family not in ("normal", "t"):
            raise DataError(f"unknown shock family {self.family!r}")
        if self.family == "t":
            if self.df is None or not self.df > 4.0:
                raise DataError(
                    "t shocks require df > 4 (finite fourth moment), "
                    f"got df = {self.df!r}"
                )
            object.__setattr__(self, "df", float(self.df))
        elif self.df is not None:
            raise DataError("normal shocks take no df")

    @property
    def code(self) -> str:
        if self.family == "normal":
            return "normal"
        return f"t{self.df:g}"

    @property
    def kurtosis(self) -> float:
        """Population kurtosis E w^4 of the standardized shock."""
        if self.family == "normal":
            return 3.0
        return 3.0 * (self.df - 2.0) / (self.df - 4.0)

    @classmethod
    def parse(cls, code: str) -> "ShockDist":
        code = code.strip().lower()
        if code == "normal":
            return cls("normal")
        if code.startswith("t"):
            return cls("t", df=float(code[1:]))
        raise DataError(f"cannot parse shock code {code!r}")


@dataclass(frozen=True)
class CovariateGen:
    """Covariate design: which generator to use and its parameters."""

    kind: str
    d: int
    ar_base: float = 0.2
    ar_step: float = 0.01
    decay: float = 0.5

    def __post_init__(self) -> None:
        if self.kind not in ("ar_lognormal", "correlated_folded"):
            raise DataError(f"unknown covariate design {self.kind!r}")
        if self.d < 0:
            raise DataError(f"d must be >= 0, got {self.d}")
        if self.kind == "ar_lognormal":
            phis = self.ar_coefficients
            if len(phis) and np.max(np.abs(phis)) >= 1.0:
                raise DataError("AR coefficients must lie in (-1, 1)")

    @property
    def ar_coefficients(self) -> np.ndarray:
        """phi_i = ar_base + ar_step * i for columns i = 1..d."""
        return self.ar_base + self.ar_step * np.arange(1, self.d + 1)


def gen_shocks(dist: ShockDist, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n i.i.d. standardized shocks."""
    if n < 0:
        raise DataError(f"n must be >= 0, got {n}")
    if dist.family == "normal":
        return rng.standard_normal(n)
    scale = math.sqrt(dist.df / (dist.df - 2.0))
    return rng.standard_t(dist.df, size=n) / scale


def _ar1_lognormal(normals: np.ndarray, phis: np.ndarray) -> np.ndarray:
    """exp of stationary AR(1) paths built from standard-normal draws.

    Row 0 of ``normals`` is rescaled to the stationary distribution
    N(0, 1/(1-phi^2)); remaining rows are unit-variance innovations.
    """
    n, d = normals.shape
    x = np.empty((n, d))
    for i in range(d):
        phi = phis[i]
        driver = normals[:, i].copy()
        driver[0] *= 1.0 / math.sqrt(1.0 - phi * phi)
        y = lfilter([1.0], [1.0, -phi], driver)
        x[:, i] = np.exp(y)
    return x


def _folded_correlated(normals: np.ndarray, decay: float) -> np.ndarray:
    """|Z| rows with Z ~ N(0, Sigma), Sigma_ij = exp(-decay |i - j|)."""
    d = normals.shape[1]
    idx = np.arange(d)
    cov = np.exp(-decay * np.abs(idx[:, None] - idx[None, :]))
    chol = np.linalg.cholesky(cov)
    return np.abs(normals @ chol.T)


def gen_covariates(gen: CovariateGen, n: int, rng: np.random.Generator) -> np.ndarray:
    """n rows of the covariate design (componentwise positive)."""
    if n < 1:
        raise DataError(f"n must be >= 1, got {n}")
    if gen.d == 0:
        return np.empty((n, 0))
    normals = rng.standard_normal((n, gen.d))
    if gen.kind == "ar_lognormal":
        return _ar1_lognormal(normals, gen.ar_coefficients)
    return _folded_correlated(normals, gen.decay)


def covariate_population_mean(gen: CovariateGen) -> np.ndarray:
    """E X_t per column (lognormal: exp(var(y)/2); folded normal: sqrt(2/pi))."""
    if gen.kind == "ar_lognormal":
        var_y = 1.0 / (1.0 - gen.ar_coefficients**2)
        return np.exp(0.5 * var_y)
    return np.full(gen.d, math.sqrt(2.0 / math.pi))


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to simulate one experimental design."""

    spec: ModelSpec
    theta_true: ParamVector
    shocks: ShockDist
    covariates: CovariateGen

    def __post_init__(self) -> None:
        if not self.theta_true.matches(self.spec):
            raise DataError("theta_true does not match spec")
        if self.covariates.d != self.spec.d:
            raise DataError(
                f"covariate design has d={self.covariates.d}, "
                f"spec has d={self.spec.d}"
            )

    @property
    def active_set(self) -> tuple[int, ...]:
        """1-based indices of truly nonzero covariate coefficients."""
        return tuple(int(k) + 1 for k in np.nonzero(self.theta_true.gamma)[0])


_GAMMA_BY_D = {
    5: (0.25, 0.0, 0.3, 0.4, 0.0),
    8: (0.2, 0.0, 0.3, 0.3, 0.0, 0.0, 0.0, 0.8),
}


def scenario_config(
    scenario: int,
    d: int,
    shocks: ShockDist,
    gamma: np.ndarray | None = None,
) -> ScenarioConfig:
    """Canonical experimental designs 1-4.

    Scenarios 1/2 are GARCH(1,1)-X with omega=0.1, alpha=0.2, beta=0.4;
    scenarios 3/4 are GARCH(2,1)-X with alpha=(0.2, 0.15).  Odd scenarios
    use the independent lognormal-AR covariates, even ones the correlated
    folded-normal design.  The default gamma is defined for d in {5, 8}
    (three resp. four active covariates); pass ``gamma`` explicitly for
    other dimensions or for null designs with gamma = 0.
    """
    if scenario not in (1, 2, 3, 4):
        raise DataError(f"scenario must be in 1..4, got {scenario}")
    if gamma is None:
        if d not in _GAMMA_BY_D:
            raise DataError(
                f"no default gamma for d = {d}; supply gamma explicitly"
            )
        gamma = np.asarray(_GAMMA_BY_D[d])
    else:
        gamma = np.asarray(gamma, dtype=float)
        if gamma.shape != (d,):
            raise DataError(f"gamma has shape {gamma.shape}, expected ({d},)")
    if scenario in (1, 2):
        spec = ModelSpec(p=1, q=1, d=d)
        theta = ParamVector(omega=0.1, alpha=[0.2], beta=[0.4], gamma=gamma)
    else:
        spec = ModelSpec(p=2, q=1, d=d)
        theta = ParamVector(omega=0.1, alpha=[0.2, 0.15], beta=[0.4], gamma=gamma)
    kind = "ar_lognormal" if scenario in (1, 3) else "correlated_folded"
    return ScenarioConfig(
        spec=spec,
        theta_true=theta,
        shocks=shocks,
        covariates=CovariateGen(kind=kind, d=d),
    )


_SIM_OVERFLOW = 1e290


def simulate_garchx(
    config: ScenarioConfig, n: int, seed, burnin: int = 500
) -> Dataset:
    """Simulate n observations from the model, discarding a burn-in prefix.

    The recursion starts from the unconditional-variance approximation and
    runs for ``burnin + n`` steps; the returned Dataset keeps the last n
    observations together with the exact presample values at the cut, so the
    variance recursion applied to the Dataset reproduces the simulated path.
    Same seed, same output, bit for bit.
    """
    if n < 1:
        raise DataError(f"n must be >= 1, got {n}")
    if burnin < 0:
        raise DataError(f"burnin must be >= 0, got {burnin}")
    spec = config.spec
    theta = config.theta_true
    shock_ss, cov_ss = np.random.SeedSequence(seed).spawn(2)
    shock_rng = np.random.Generator(np.random.PCG64(shock_ss))
    cov_rng = np.random.Generator(np.random.PCG64(cov_ss))

    total = burnin + n
    w = gen_shocks(config.shocks, total, shock_rng)
    # Covariate rows for times 0..total; the variance at time t uses row t-1.
    x_time = (
        gen_covariates(config.covariates, total + 1, cov_rng)
        if spec.d
        else np.empty((total + 1, 0))
    )
    gx = x_time[:-1] @ theta.gamma

    persistence = theta.persistence
    mean_gx = (
        float(theta.gamma @ covariate_population_mean(config.covariates))
        if spec.d
        else 0.0
    )
    if persistence < 1.0:
        init = (theta.omega + mean_gx) / (1.0 - persistence)
    else:
        init = theta.omega + mean_gx

    p, q = spec.p, spec.q
    n_lags = max(p, q)
    alpha, beta, omega = theta.alpha, theta.beta, theta.omega
    eps2 = np.empty(n_lags + total)
    eps2[:n_lags] = init
    eps = np.empty(n_lags + total)
    eps[:n_lags] = math.sqrt(init)
    sig2 = np.empty(q + total)
    sig2[:q] = init
    for t in range(1, total + 1):
        s = omega + gx[t - 1]
        for i in range(p):
            s += alpha[i] * eps2[n_lags + t - 2 - i]
        for j in range(q):
            s += beta[j] * sig2[q + t - 2 - j]
        if not s < _SIM_OVERFLOW:
            raise NumericalError(f"simulated variance overflowed at t = {t}")
        sig2[q + t - 1] = s
        e = math.sqrt(s) * w[t - 1]
        eps[n_lags + t - 1] = e
        eps2[n_lags + t - 1] = e * e

    return Dataset(
        eps=eps[n_lags + burnin :],
        X=x_time[burnin + 1 :],
        presample_eps2=eps2[burnin : burnin + n_lags][::-1].copy(),
        presample_sigma2=sig2[burnin : burnin + q][::-1].copy(),
        presample_X=x_time[burnin].copy(),
    )
