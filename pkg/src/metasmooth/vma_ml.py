"""
Gaussian quasi-maximum likelihood for the VMA(1) reduced form.

Conditional on ``u_0 = 0`` the residuals are ``u_t = z_t + Theta u_{t-1}``
and the objective is ``0.5 * sum_t (log det Sigma_u + u_t' Sigma_u^{-1} u_t)``.
Theta is free (N^2 entries); Sigma_u is parameterized by its Cholesky factor
with log-diagonal, so every trial point has a positive definite covariance.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import DimensionMismatch, EstimationFailed, NotPositiveDefinite
from .linalg import spectral_radius
from .meta import MIN_T, as_differences, meta_fit, mom_fit
from .model import ReducedParams

logger = logging.getLogger(__name__)

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

__all__ = ["MLConfig", "MLResult", "ml_fit", "vma_nll", "vma_residuals"]

PROJECTION_MARGIN = 1e-4
_PENALTY = 1e100


def _residuals_py(Z, theta):
    T, n = Z.shape
    U = np.empty_like(Z)
    prev = np.zeros(n)
    for t in range(T):
        prev = Z[t] + theta @ prev
        U[t] = prev
    return U


if HAS_NUMBA:

    @njit(cache=True)
    def _residuals_nb(Z, theta):
        T, n = Z.shape
        U = np.empty_like(Z)
        for i in range(n):
            U[0, i] = Z[0, i]
        for t in range(1, T):
            for i in range(n):
                acc = Z[t, i]
                for j in range(n):
                    acc += theta[i, j] * U[t - 1, j]
                U[t, i] = acc
        return U


def vma_residuals(Z, theta) -> np.ndarray:
    """Innovations ``u_t = z_t + Theta u_{t-1}`` with ``u_0 = 0``."""
    Z = np.ascontiguousarray(Z, dtype=float)
    theta = np.ascontiguousarray(theta, dtype=float)
    if HAS_NUMBA:
        return _residuals_nb(Z, theta)
    return _residuals_py(Z, theta)


def _nll_chol(Z, theta, L):
    U = vma_residuals(Z, theta)
    T = Z.shape[0]
    # u' Sigma^{-1} u summed over t == ||L^{-1} U^T||_F^2
    W = np.linalg.solve(L, U.T)
    return T * np.sum(np.log(np.diag(L))) + 0.5 * float(np.sum(W * W))


def vma_nll(Z, r: ReducedParams) -> float:
    """Conditional Gaussian negative log-likelihood (constants dropped)."""
    Z = as_differences(Z)
    if Z.shape[1] != r.n:
        raise DimensionMismatch(f"data has {Z.shape[1]} columns, parameters are {r.n}x{r.n}")
    try:
        L = np.linalg.cholesky(r.sigma_u)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"sigma_u: {exc}") from exc
    return _nll_chol(Z, r.theta, L)


@dataclass
class MLConfig:
    """Optimizer settings.

    ``init`` is one of "moment" (sample-moment estimate), "meta" (META
    estimate) or "explicit" (``init_params`` is used as given).
    """

    max_iterations: int = 1000
    gradient_step: float = 1e-7
    convergence_tol: float = 1e-10
    init: str = "moment"
    init_params: ReducedParams | None = None

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not (self.gradient_step > 0 and self.convergence_tol > 0):
            raise ValueError("gradient_step and convergence_tol must be positive")
        if self.init not in ("moment", "meta", "explicit"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.init == "explicit" and self.init_params is None:
            raise ValueError("init='explicit' requires init_params")


@dataclass
class MLResult:
    reduced: ReducedParams
    nll: float
    initial_nll: float
    iterations: int
    converged: bool
    max_iterations_exceeded: bool
    projected: bool
    init_source: str
    elapsed_seconds: float
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        from .model import params_to_json

        return {
            "estimator": "ml",
            "n": self.reduced.n,
            "reduced": params_to_json(self.reduced),
            "diagnostics": {
                "nll": self.nll,
                "initial_nll": self.initial_nll,
                "iterations": self.iterations,
                "converged": self.converged,
                "max_iterations_exceeded": self.max_iterations_exceeded,
                "projected": self.projected,
                "init_source": self.init_source,
                "elapsed_seconds": self.elapsed_seconds,
                **self.diagnostics,
            },
        }


def _pack(theta, sigma_u):
    n = theta.shape[0]
    L = np.linalg.cholesky(sigma_u)
    tril = L[np.tril_indices(n)].copy()
    diag_pos = np.cumsum(np.arange(1, n + 1)) - 1  # row-major tril positions of L[i, i]
    tril[diag_pos] = np.log(tril[diag_pos])
    return np.concatenate([theta.ravel(), tril])


def _unpack(x, n):
    theta = x[: n * n].reshape(n, n)
    L = np.zeros((n, n))
    L[np.tril_indices(n)] = x[n * n :]
    d = np.arange(n)
    L[d, d] = np.exp(L[d, d])
    return theta, L


def _default_start(Z):
    n = Z.shape[1]
    return ReducedParams(0.1 * np.eye(n), Z.T @ Z / Z.shape[0])


def _initial_params(Z, cfg):
    if cfg.init == "explicit":
        return cfg.init_params, "explicit"
    try:
        if cfg.init == "meta":
            return meta_fit(Z).reduced, "meta"
        return mom_fit(Z), "moment"
    except EstimationFailed as exc:
        logger.debug("%s initialization failed (%s); using default start", cfg.init, exc)
        return _default_start(Z), "default"


def ml_fit(Z, cfg: MLConfig | None = None) -> MLResult:
    """Fit ``(Theta, Sigma_u)`` by BFGS with forward-difference gradients.

    Stops when one iteration improves the NLL by less than
    ``cfg.convergence_tol`` relative to its magnitude. If the final Theta has spectral radius at or
    above ``1 - 1e-4`` it is scaled back onto that radius and ``projected``
    is set. Running out of iterations returns the best point found with
    ``max_iterations_exceeded`` set rather than raising.
    """
    cfg = cfg or MLConfig()
    t0 = time.perf_counter()
    Z = np.ascontiguousarray(as_differences(Z))
    T, n = Z.shape
    if T < MIN_T:
        raise ValueError(f"ML needs at least {MIN_T} observations, got {T}")
    start, source = _initial_params(Z, cfg)
    if start.n != n:
        raise DimensionMismatch(f"initial parameters are {start.n}x{start.n}, data has {n} columns")
    x0 = _pack(start.theta, start.sigma_u)

    def objective(x):
        theta, L = _unpack(x, n)
        with np.errstate(over="ignore", invalid="ignore"):
            f = _nll_chol(Z, theta, L)
        return f if np.isfinite(f) else _PENALTY

    step = cfg.gradient_step

    def fun_and_grad(x):
        f = objective(x)
        g = np.empty_like(x)
        for i in range(x.size):
            h = step * max(1.0, abs(x[i]))
            xp = x.copy()
            xp[i] += h
            g[i] = (objective(xp) - f) / h
        return f, g

    f0 = objective(x0)
    state = {"f": f0, "stopped": False}

    def check_progress(intermediate_result):
        f = float(intermediate_result.fun)
        if state["f"] - f < cfg.convergence_tol * max(abs(f), 1.0):
            state["stopped"] = True
            raise StopIteration
        state["f"] = f

    res = minimize(
        fun_and_grad,
        x0,
        jac=True,
        method="BFGS",
        callback=check_progress,
        options={"maxiter": cfg.max_iterations, "gtol": 1e-10},
    )
    best = None
    for x in (res.x, x0):
        theta, L = _unpack(x, n)
        rho = spectral_radius(theta)
        projected = rho >= 1.0 - PROJECTION_MARGIN
        if projected:
            theta = theta * ((1.0 - PROJECTION_MARGIN) / rho * (1.0 - 1e-12))
        f = objective(np.concatenate([theta.ravel(), x[n * n :]]))
        if best is None or f < best[0]:
            best = (f, theta, L, projected)
    f_best, theta, L, projected = best
    sigma_u = L @ L.T
    reduced = ReducedParams(theta, 0.5 * (sigma_u + sigma_u.T))
    exceeded = res.status == 1 and not state["stopped"]
    return MLResult(
        reduced=reduced,
        nll=f_best,
        initial_nll=f0,
        iterations=int(res.nit),
        converged=bool(state["stopped"] or res.success),
        max_iterations_exceeded=bool(exceeded),
        projected=bool(projected),
        init_source=source,
        elapsed_seconds=time.perf_counter() - t0,
        diagnostics={"message": str(res.message), "function_evaluations": int(res.nfev)},
    )
