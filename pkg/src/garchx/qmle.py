"""Gaussian quasi-maximum-likelihood estimation and robust covariance.

The fit minimizes the average Gaussian quasi-loss

    L_n(theta) = (1/n) sum_t [ log sigma_t^2(theta) + eps_t^2 / sigma_t^2(theta) ]

over the positivity region by bound-constrained quasi-Newton (L-BFGS-B)
with the exact analytic gradient

    dL_n/dtheta = (1/n) sum_t sigma_t^-2 (1 - eps_t^2 / sigma_t^2) dsigma_t^2/dtheta.

The reported log-likelihood keeps the Gaussian constant,
loglik = -(n/2) (L_n + log 2*pi), so information criteria are comparable
across nested fits.

Asymptotic covariance is the sandwich Sigma = J^-1 I J^-1 with

    J = (1/n) sum_t sigma_t^-4 v_t v_t',
    I = (1/n) sum_t (w_t^4 - 1) sigma_t^-4 v_t v_t',   w_t = eps_t / sigma_t,

where v_t = dsigma_t^2/dtheta.  Under normal shocks E w^4 = 3 and I = 2 J.
An alternative empirical-centering weight (w_t^2 - 1)^2 is available via
``i_weight="squared_centered"``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from .exceptions import ConvergenceWarning, DataError, NumericalError
from .model import (
    OMEGA_FLOOR,
    Dataset,
    ModelSpec,
    ParamVector,
    VolatilityPath,
    _check_instance,
    _fixed_parts,
    _sigma2_and_gradient,
    volatility_recursion_with_gradient,
)

_LOG_2PI = math.log(2.0 * math.pi)
_PENALTY = 1e10
_COND_RIDGE = 1e12
_COND_FAIL = 1e14


@dataclass(frozen=True)
class FitOptions:
    """Optimizer and covariance settings.

    ``tol`` is the convergence tolerance (mapped to L-BFGS-B ftol/gtol),
    ``multistart`` the number of starting points (one moment-based, the
    rest drawn from a stream seeded by ``start_seed``), ``ridge`` the
    scaled ridge added to J when it is ill-conditioned, and ``i_weight``
    selects the I-matrix weight: ``"fourth_moment"`` for w^4 - 1 or
    ``"squared_centered"`` for (w^2 - 1)^2.  ``record_history`` keeps the
    objective value at each accepted iterate of the winning start.
    ``warm_start`` replaces the moment-based first start with the given
    flat parameter vector (used e.g. to verify a fit is a fixed point).
    """

    tol: float = 1e-8
    max_iter: int = 500
    multistart: int = 3
    start_seed: int = 0
    ridge: float = 1e-8
    i_weight: str = "fourth_moment"
    record_history: bool = False
    warm_start: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.tol <= 0 or self.max_iter < 1 or self.multistart < 1:
            raise DataError("tol, max_iter, multistart must be positive")
        if self.i_weight not in ("fourth_moment", "squared_centered"):
            raise DataError(f"unknown i_weight {self.i_weight!r}")
        if self.warm_start is not None:
            object.__setattr__(
                self, "warm_start", tuple(float(v) for v in self.warm_start)
            )


@dataclass(frozen=True)
class FitResult:
    """Fitted model with sandwich covariance and convergence metadata."""

    spec: ModelSpec
    theta_hat: ParamVector
    sigma2_path: VolatilityPath
    loglik: float
    objective: float
    J_hat: np.ndarray
    I_hat: np.ndarray
    Sigma_hat: np.ndarray
    converged: bool
    iterations: int
    boundary_mask: np.ndarray
    n_obs: int
    options: FitOptions
    history: tuple[float, ...] | None = None


class _Workspace:
    """Precomputed theta-independent pieces for fast repeated evaluation."""

    def __init__(self, spec: ModelSpec, data: Dataset):
        self.spec = spec
        self.n = data.n
        self.eps2 = data.eps**2
        self.eps2_lags, self.x_lag, self.pre_sigma2 = _fixed_parts(spec, data)

    def split(self, theta: np.ndarray):
        p, q = self.spec.p, self.spec.q
        return (
            float(theta[0]),
            theta[1 : 1 + p],
            theta[1 + p : 1 + p + q],
            theta[1 + p + q :],
        )

    def value_and_grad(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        """Penalized quasi-loss: overflowing iterates get a smooth uphill value."""
        omega, alpha, beta, gamma = self.split(theta)
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                sigma2, grad = _sigma2_and_gradient(
                    self.spec, omega, alpha, beta, gamma,
                    self.eps2_lags, self.x_lag, self.pre_sigma2,
                    want_gradient=True,
                )
        except NumericalError:
            return _PENALTY + float(theta @ theta), 2.0 * theta
        ratio = self.eps2 / sigma2
        value = float(np.mean(np.log(sigma2) + ratio))
        if not math.isfinite(value):
            return _PENALTY + float(theta @ theta), 2.0 * theta
        u = (1.0 - ratio) / sigma2
        return value, (u @ grad) / self.n

    def value(self, theta: np.ndarray) -> float:
        return self.value_and_grad(theta)[0]


def qml_objective(spec: ModelSpec, theta: ParamVector, data: Dataset) -> float:
    """Average Gaussian quasi-loss L_n(theta)."""
    _check_instance(spec, theta, data)
    return _Workspace(spec, data).value(theta.flatten())


def qml_objective_with_gradient(
    spec: ModelSpec, theta: ParamVector, data: Dataset
) -> tuple[float, np.ndarray]:
    """L_n(theta) and its analytic gradient, shape (1 + p + q + d,)."""
    _check_instance(spec, theta, data)
    return _Workspace(spec, data).value_and_grad(theta.flatten())


def loglik_from_objective(objective: float, n: int) -> float:
    """Gaussian log-likelihood -(n/2)(L_n + log 2*pi)."""
    return -0.5 * n * (objective + _LOG_2PI)


def _bounds(spec: ModelSpec, var_eps: float) -> list[tuple[float, float]]:
    bounds = [(OMEGA_FLOOR, max(1e3 * var_eps, 1.0))]
    bounds += [(0.0, 100.0)] * spec.p
    bounds += [(0.0, 0.9999)] * spec.q
    bounds += [(0.0, 1e6)] * spec.d
    return bounds


def _starts(
    spec: ModelSpec, data: Dataset, opts: FitOptions, var_eps: float
) -> list[np.ndarray]:
    p, q, d = spec.p, spec.q, spec.d
    if opts.warm_start is not None:
        start = np.asarray(opts.warm_start, dtype=float)
        if start.shape != (spec.n_params,):
            raise DataError(
                f"warm_start has shape {start.shape}, expected ({spec.n_params},)"
            )
    else:
        start = np.zeros(spec.n_params)
        start[0] = max(0.1 * var_eps, OMEGA_FLOOR)
        if p:
            start[1 : 1 + p] = 0.05 / p
        if q:
            start[1 + p : 1 + p + q] = 0.80 / q
    starts = [start]
    if opts.multistart > 1:
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(opts.start_seed))
        )
        x_scale = data.X.mean(axis=0) if d else np.empty(0)
        x_scale = np.maximum(x_scale, 1e-12)
        for _ in range(opts.multistart - 1):
            s = np.zeros(spec.n_params)
            s[0] = max(var_eps * rng.uniform(0.01, 0.5), OMEGA_FLOOR)
            if p:
                s[1 : 1 + p] = rng.uniform(0.0, 0.3, p) / p
            if q:
                s[1 + p : 1 + p + q] = rng.uniform(0.1, 0.9, q) / q
            if d:
                s[1 + p + q :] = rng.uniform(0.0, 0.2, d) * var_eps / x_scale
            starts.append(s)
    return starts


def fit_qmle(
    spec: ModelSpec, data: Dataset, opts: FitOptions | None = None
) -> FitResult:
    """Fit the model by Gaussian QMLE with multistart L-BFGS-B.

    The returned result carries the fitted parameters, the variance path at
    the optimum, the Gaussian log-likelihood, the sandwich matrices, and
    convergence metadata (iterations of the winning start, a converged
    flag, and a mask of parameters pinned at their lower bound).
    """
    opts = opts or FitOptions()
    if data.d != spec.d:
        raise DataError(f"data has {data.d} covariates, spec expects {spec.d}")
    if data.n <= spec.n_params:
        raise DataError(
            f"need n > {spec.n_params} observations to fit, got {data.n}"
        )
    var_eps = float(np.var(data.eps))
    if var_eps <= 0.0:
        raise DataError("eps has zero variance; nothing to fit")

    ws = _Workspace(spec, data)
    bounds = _bounds(spec, var_eps)
    lower = np.array([b[0] for b in bounds])
    upper = np.array([b[1] for b in bounds])
    options = {
        "maxiter": opts.max_iter,
        "ftol": opts.tol * 1e-4,
        "gtol": opts.tol * 10.0,
    }

    best = None
    best_history: list[float] | None = None
    for x0 in _starts(spec, data, opts, var_eps):
        x0 = np.clip(x0, lower, upper)
        history: list[float] = []
        callback = None
        if opts.record_history:
            history.append(ws.value(x0))
            callback = lambda xk, h=history: h.append(ws.value(xk))
        res = minimize(
            ws.value_and_grad,
            x0,
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options=options,
            callback=callback,
        )
        if best is None or res.fun < best.fun:
            best = res
            best_history = history
    assert best is not None
    if best.fun >= _PENALTY:
        raise NumericalError("optimizer never reached a finite objective")
    if not best.success:
        warnings.warn(
            f"optimizer did not report convergence: {best.message}",
            ConvergenceWarning,
            stacklevel=2,
        )

    x_hat = np.asarray(best.x, dtype=float)
    theta_hat = ParamVector.from_flat(x_hat, spec)
    path, _ = volatility_recursion_with_gradient(spec, theta_hat, data)
    objective = float(ws.value(x_hat))
    j_hat, i_hat, sigma_hat = sandwich_covariance(
        spec, theta_hat, data, i_weight=opts.i_weight, ridge=opts.ridge
    )
    boundary_tol = max(opts.tol, 1e-10)
    boundary_mask = (x_hat - lower) <= boundary_tol
    return FitResult(
        spec=spec,
        theta_hat=theta_hat,
        sigma2_path=path,
        loglik=loglik_from_objective(objective, data.n),
        objective=objective,
        J_hat=j_hat,
        I_hat=i_hat,
        Sigma_hat=sigma_hat,
        converged=bool(best.success),
        iterations=int(best.nit),
        boundary_mask=boundary_mask,
        n_obs=data.n,
        options=opts,
        history=tuple(best_history) if opts.record_history else None,
    )


def refit(fit: FitResult, data: Dataset, **option_overrides) -> FitResult:
    """Re-fit the same spec on ``data``, optionally overriding FitOptions."""
    opts = replace(fit.options, **option_overrides) if option_overrides else fit.options
    return fit_qmle(fit.spec, data, opts)


def sandwich_covariance(
    spec: ModelSpec,
    theta: ParamVector,
    data: Dataset,
    *,
    i_weight: str = "fourth_moment",
    ridge: float = 1e-8,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sandwich matrices (J_hat, I_hat, Sigma_hat) at ``theta``.

    Both J and I use sigma^-4 weights on the outer products of the variance
    gradient; I additionally weights by w^4 - 1 (or (w^2 - 1)^2 when
    ``i_weight="squared_centered"``).  J is symmetrized exactly; if its
    condition number exceeds 1e12 a scaled ridge is added before inversion
    (with a ConvergenceWarning) and beyond 1e14 a NumericalError is raised.
    """
    if i_weight not in ("fourth_moment", "squared_centered"):
        raise DataError(f"unknown i_weight {i_weight!r}")
    path, grad = volatility_recursion_with_gradient(spec, theta, data)
    sigma2 = path.sigma2
    n = data.n
    gw = grad / sigma2[:, None]
    j_hat = gw.T @ gw / n
    j_hat = 0.5 * (j_hat + j_hat.T)
    w2 = data.eps**2 / sigma2
    if i_weight == "fourth_moment":
        weight = w2**2 - 1.0
    else:
        weight = (w2 - 1.0) ** 2
    i_hat = (gw * weight[:, None]).T @ gw / n
    i_hat = 0.5 * (i_hat + i_hat.T)

    j_inv_target = j_hat
    cond = float(np.linalg.cond(j_hat))
    if not math.isfinite(cond) or cond > _COND_RIDGE:
        scale = float(np.mean(np.diag(j_hat)))
        j_inv_target = j_hat + ridge * max(scale, 1e-300) * np.eye(len(j_hat))
        warnings.warn(
            f"J_hat condition number {cond:.3g} > {_COND_RIDGE:.0e}; "
            "added scaled ridge before inversion",
            ConvergenceWarning,
            stacklevel=2,
        )
        cond = float(np.linalg.cond(j_inv_target))
        if not math.isfinite(cond) or cond > _COND_FAIL:
            raise NumericalError(
                f"J_hat numerically singular (condition {cond:.3g})"
            )
    j_inv = np.linalg.inv(j_inv_target)
    sigma = j_inv @ i_hat @ j_inv
    sigma = 0.5 * (sigma + sigma.T)
    return j_hat, i_hat, sigma
