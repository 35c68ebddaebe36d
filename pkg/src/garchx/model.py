"""Core GARCH(p,q)-X types and the conditional-variance kernel.

The model for a return series eps_t with positive covariate vector X_t is

    eps_t = sigma_t * w_t,
    sigma_t^2 = omega + sum_i alpha_i * eps_{t-i}^2
                      + sum_j beta_j * sigma_{t-j}^2
                      + gamma' X_{t-1},

with omega > 0 and alpha, beta, gamma componentwise >= 0 so that the
variance stays positive for any nonnegative inputs.

Given eps and X, sigma_t^2(theta) is a linear constant-coefficient
difference equation in sigma^2, so the path and its gradient in theta are
evaluated exactly with scipy.signal.lfilter.  Presample arrays follow a
most-recent-first convention: index 0 holds the time-0 value, index 1 the
time -1 value, and so on.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter, lfiltic

from .exceptions import (
    DataError,
    DegenerateModelWarning,
    NumericalError,
    StationarityWarning,
)

# Lower bound for omega used by the optimizer; keeps sigma^2 bounded away
# from zero without affecting any admissible interior solution.
OMEGA_FLOOR = 1e-10

# sigma^2 above this is treated as numeric blow-up rather than a valid path.
_SIGMA2_OVERFLOW = 1e290


def _as_float_vector(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise DataError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ModelSpec:
    """Model orders: p ARCH lags, q GARCH lags, d covariates."""

    p: int
    q: int
    d: int

    def __post_init__(self) -> None:
        for name in ("p", "q", "d"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 0:
                raise DataError(f"{name} must be a nonnegative integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.is_degenerate:
            warnings.warn(
                "model has no ARCH, GARCH, or covariate terms (omega only)",
                DegenerateModelWarning,
                stacklevel=2,
            )

    @property
    def n_params(self) -> int:
        return 1 + self.p + self.q + self.d

    @property
    def is_degenerate(self) -> bool:
        return self.p == 0 and self.q == 0 and self.d == 0


@dataclass(frozen=True)
class ParamVector:
    """Parameters (omega, alpha, beta, gamma) with positivity constraints.

    Flattened layout is [omega, alpha_1..alpha_p, beta_1..beta_q,
    gamma_1..gamma_d]; ``gamma_k`` sits at flat index p + q + k (1-based k).
    """

    omega: float
    alpha: np.ndarray = field(default_factory=lambda: np.empty(0))
    beta: np.ndarray = field(default_factory=lambda: np.empty(0))
    gamma: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self) -> None:
        omega = float(self.omega)
        if not np.isfinite(omega) or omega <= 0.0:
            raise DataError(f"omega must be finite and > 0, got {omega!r}")
        object.__setattr__(self, "omega", omega)
        for name in ("alpha", "beta", "gamma"):
            arr = _as_float_vector(getattr(self, name), name)
            if np.any(arr < 0.0):
                raise DataError(f"{name} must be componentwise >= 0")
            object.__setattr__(self, name, arr)
        if self.persistence >= 1.0:
            warnings.warn(
                f"sum(alpha) + sum(beta) = {self.persistence:.6g} >= 1; "
                "the variance recursion is not stable",
                StationarityWarning,
                stacklevel=2,
            )

    @property
    def persistence(self) -> float:
        return float(np.sum(self.alpha) + np.sum(self.beta))

    def matches(self, spec: ModelSpec) -> bool:
        return (
            len(self.alpha) == spec.p
            and len(self.beta) == spec.q
            and len(self.gamma) == spec.d
        )

    def flatten(self) -> np.ndarray:
        return np.concatenate(([self.omega], self.alpha, self.beta, self.gamma))

    @classmethod
    def from_flat(cls, theta: np.ndarray, spec: ModelSpec) -> "ParamVector":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (spec.n_params,):
            raise DataError(
                f"flat parameter vector has shape {theta.shape}, "
                f"expected ({spec.n_params},)"
            )
        p, q = spec.p, spec.q
        return cls(
            omega=theta[0],
            alpha=theta[1 : 1 + p],
            beta=theta[1 + p : 1 + p + q],
            gamma=theta[1 + p + q :],
        )


@dataclass(frozen=True)
class Dataset:
    """Observed series eps_t and covariate rows X_t, t = 1..n.

    ``X[t]`` is contemporaneous with ``eps[t]``; the variance at time t uses
    the previous row ``X[t-1]`` (``presample_X`` for t = 1).  Presample
    arrays are optional; estimation substitutes documented defaults (sample
    variance of eps for the eps^2 and sigma^2 presample, column means for X).
    """

    eps: np.ndarray
    X: np.ndarray
    presample_eps2: np.ndarray | None = None
    presample_sigma2: np.ndarray | None = None
    presample_X: np.ndarray | None = None

    def __post_init__(self) -> None:
        eps = _as_float_vector(self.eps, "eps")
        if len(eps) < 1:
            raise DataError("eps must contain at least one observation")
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise DataError(f"X must be two-dimensional, got shape {X.shape}")
        if X.shape[0] != len(eps):
            raise DataError(
                f"X has {X.shape[0]} rows but eps has {len(eps)} observations"
            )
        if not np.all(np.isfinite(X)):
            raise DataError("X contains non-finite values")
        if np.any(X < 0.0):
            raise DataError("X entries must be >= 0 (covariates are positive)")
        X = X.copy()
        X.flags.writeable = False
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "X", X)
        for name, nonneg in (
            ("presample_eps2", True),
            ("presample_sigma2", False),
            ("presample_X", True),
        ):
            value = getattr(self, name)
            if value is None:
                continue
            arr = _as_float_vector(value, name)
            if nonneg and np.any(arr < 0.0):
                raise DataError(f"{name} entries must be >= 0")
            if not nonneg and np.any(arr <= 0.0):
                raise DataError(f"{name} entries must be > 0")
            object.__setattr__(self, name, arr)
        if self.presample_X is not None and len(self.presample_X) != X.shape[1]:
            raise DataError(
                f"presample_X has length {len(self.presample_X)}, "
                f"expected {X.shape[1]}"
            )

    @property
    def n(self) -> int:
        return len(self.eps)

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset_covariates(self, indices) -> "Dataset":
        """Dataset keeping only the covariate columns in ``indices`` (1-based)."""
        idx = [int(k) - 1 for k in indices]
        if any(k < 0 or k >= self.d for k in idx):
            raise DataError(f"covariate indices out of range 1..{self.d}: {indices}")
        pre_x = None if self.presample_X is None else self.presample_X[idx]
        return Dataset(
            eps=self.eps,
            X=self.X[:, idx],
            presample_eps2=self.presample_eps2,
            presample_sigma2=self.presample_sigma2,
            presample_X=pre_x,
        )


@dataclass(frozen=True)
class VolatilityPath:
    """Conditional-variance path sigma_t^2, t = 1..n."""

    sigma2: np.ndarray

    def __post_init__(self) -> None:
        arr = _as_float_vector(self.sigma2, "sigma2")
        if np.any(arr <= 0.0):
            raise DataError("sigma2 must be strictly positive")
        object.__setattr__(self, "sigma2", arr)

    @property
    def n(self) -> int:
        return len(self.sigma2)


def _check_instance(spec: ModelSpec, theta: ParamVector, data: Dataset) -> None:
    if not theta.matches(spec):
        raise DataError(
            f"parameter shapes (p={len(theta.alpha)}, q={len(theta.beta)}, "
            f"d={len(theta.gamma)}) do not match spec (p={spec.p}, q={spec.q}, "
            f"d={spec.d})"
        )
    if data.d != spec.d:
        raise DataError(f"data has {data.d} covariates, spec expects {spec.d}")


def resolve_presample(
    spec: ModelSpec, data: Dataset
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Presample arrays (eps^2, sigma^2, X row) with defaults filled in.

    Defaults: sample variance of eps (ddof=0) for the eps^2 and sigma^2
    presample values, column means of X for the presample covariate row.
    Returned lengths are (max(p, q), q, d), most recent first.
    """
    n_lags = max(spec.p, spec.q)
    if data.presample_eps2 is not None:
        if len(data.presample_eps2) != n_lags:
            raise DataError(
                f"presample_eps2 has length {len(data.presample_eps2)}, "
                f"expected max(p, q) = {n_lags}"
            )
        pre_eps2 = data.presample_eps2
    else:
        pre_eps2 = np.full(n_lags, max(float(np.var(data.eps)), OMEGA_FLOOR))
    if data.presample_sigma2 is not None:
        if len(data.presample_sigma2) != spec.q:
            raise DataError(
                f"presample_sigma2 has length {len(data.presample_sigma2)}, "
                f"expected q = {spec.q}"
            )
        pre_sigma2 = data.presample_sigma2
    else:
        pre_sigma2 = np.full(spec.q, max(float(np.var(data.eps)), OMEGA_FLOOR))
    if data.presample_X is not None:
        pre_x = data.presample_X
    else:
        pre_x = data.X.mean(axis=0) if data.d else np.empty(0)
    return np.asarray(pre_eps2, float), np.asarray(pre_sigma2, float), np.asarray(pre_x, float)


def _fixed_parts(
    spec: ModelSpec, data: Dataset
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Theta-independent pieces: eps^2 lag matrix, lagged X matrix, sigma^2 presample."""
    pre_eps2, pre_sigma2, pre_x = resolve_presample(spec, data)
    n = data.n
    eps2_full = np.concatenate((pre_eps2[::-1], data.eps**2))
    n_lags = max(spec.p, spec.q)
    eps2_lags = np.empty((n, spec.p))
    for i in range(1, spec.p + 1):
        eps2_lags[:, i - 1] = eps2_full[n_lags - i : n_lags - i + n]
    if spec.d:
        x_lag = np.vstack((pre_x[None, :], data.X[:-1]))
    else:
        x_lag = np.empty((n, 0))
    return eps2_lags, x_lag, pre_sigma2


def _sigma2_and_gradient(
    spec: ModelSpec,
    omega: float,
    alpha: np.ndarray,
    beta: np.ndarray,
    gamma: np.ndarray,
    eps2_lags: np.ndarray,
    x_lag: np.ndarray,
    pre_sigma2: np.ndarray,
    want_gradient: bool,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Evaluate the variance recursion (and optionally its theta-gradient).

    The recursion sigma_t^2 = c_t + sum_j beta_j sigma_{t-j}^2 with
    c_t = omega + sum_i alpha_i eps_{t-i}^2 + gamma' X_{t-1} is an order-q
    linear filter driven by c; lfiltic seeds it with the sigma^2 presample.
    The gradient satisfies the same filter driven by the design row
    [1, eps^2 lags, sigma^2 lags, X lags] with zero presample gradients.
    """
    n = eps2_lags.shape[0]
    q = spec.q
    c = omega + eps2_lags @ alpha + x_lag @ gamma
    if q:
        a = np.concatenate(([1.0], -beta))
        zi = lfiltic([1.0], a, y=pre_sigma2)
        sigma2, _ = lfilter([1.0], a, c, zi=zi)
    else:
        sigma2 = c
    if not (np.all(np.isfinite(sigma2)) and np.all(sigma2 < _SIGMA2_OVERFLOW)):
        bad = ~(np.isfinite(sigma2) & (sigma2 < _SIGMA2_OVERFLOW))
        t_bad = int(np.argmax(bad)) + 1
        raise NumericalError(f"variance recursion overflowed at t = {t_bad}")
    if not want_gradient:
        return sigma2, None
    base = np.empty((n, spec.n_params))
    base[:, 0] = 1.0
    base[:, 1 : 1 + spec.p] = eps2_lags
    if q:
        sigma2_full = np.concatenate((pre_sigma2[::-1], sigma2))
        for j in range(1, q + 1):
            base[:, spec.p + j] = sigma2_full[q - j : q - j + n]
    base[:, 1 + spec.p + q :] = x_lag
    if q:
        grad = lfilter([1.0], a, base, axis=0)
    else:
        grad = base
    return sigma2, grad


def volatility_recursion(
    spec: ModelSpec, theta: ParamVector, data: Dataset
) -> VolatilityPath:
    """Conditional-variance path sigma_t^2(theta) for t = 1..n."""
    _check_instance(spec, theta, data)
    eps2_lags, x_lag, pre_sigma2 = _fixed_parts(spec, data)
    sigma2, _ = _sigma2_and_gradient(
        spec, theta.omega, theta.alpha, theta.beta, theta.gamma,
        eps2_lags, x_lag, pre_sigma2, want_gradient=False,
    )
    return VolatilityPath(sigma2=sigma2)


def volatility_gradient(
    spec: ModelSpec, theta: ParamVector, data: Dataset
) -> np.ndarray:
    """Gradient d sigma_t^2 / d theta, shape (n, 1 + p + q + d)."""
    _, grad = volatility_recursion_with_gradient(spec, theta, data)
    return grad


def volatility_recursion_with_gradient(
    spec: ModelSpec, theta: ParamVector, data: Dataset
) -> tuple[VolatilityPath, np.ndarray]:
    """Variance path and its theta-gradient in one pass (shared work)."""
    _check_instance(spec, theta, data)
    eps2_lags, x_lag, pre_sigma2 = _fixed_parts(spec, data)
    sigma2, grad = _sigma2_and_gradient(
        spec, theta.omega, theta.alpha, theta.beta, theta.gamma,
        eps2_lags, x_lag, pre_sigma2, want_gradient=True,
    )
    return VolatilityPath(sigma2=sigma2), grad
