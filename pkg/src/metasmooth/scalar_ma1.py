"""
Scalar MA(1) quasi-maximum likelihood.

Model and sign convention::

    x_t = v_t - psi v_{t-1},   E[v_t^2] = sigma   (sigma is a variance)

so that ``gamma0 = (1 + psi^2) sigma`` and ``gamma1 = -psi sigma``.

The likelihood conditions on a zero pre-sample innovation: residuals follow
``v_1 = x_1, v_t = x_t + psi v_{t-1}`` and the negative log-likelihood is
``sum_t 0.5 log(sigma) + v_t^2 / (2 sigma)`` (constants dropped).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.signal import lfilter

from .errors import DegenerateSeries, DomainError, NotRepresentable

__all__ = [
    "ScalarMA1Fit",
    "ScalarMA1Params",
    "fisher_info",
    "fit",
    "moments_from_params",
    "nll",
    "params_from_moments",
    "residuals",
]

DELTA = 1e-4
BOUNDARY_BAND = 1e-3
PSI_XTOL = 1e-8
GRID_POINTS = 41


@dataclass(frozen=True)
class ScalarMA1Params:
    psi: float
    sigma: float

    def __post_init__(self):
        if not abs(self.psi) < 1.0:
            raise DomainError(f"|psi| must be < 1, got {self.psi}")
        if not self.sigma > 0.0:
            raise DomainError(f"sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class ScalarMA1Fit:
    params: ScalarMA1Params
    nll: float
    iterations: int
    at_boundary: bool
    converged: bool

    @property
    def psi(self):
        return self.params.psi

    @property
    def sigma(self):
        return self.params.sigma


def _as_series(x, min_length=3) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"series must be one-dimensional, got shape {x.shape}")
    if x.size < min_length:
        raise ValueError(f"series needs at least {min_length} observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("series has non-finite values")
    return x


def residuals(x, psi) -> np.ndarray:
    """Innovations ``v_t = x_t + psi v_{t-1}`` with ``v_0 = 0``."""
    return lfilter([1.0], [1.0, -psi], x)


def nll(x, psi, sigma) -> float:
    """Conditional negative log-likelihood at trial ``(psi, sigma)``."""
    x = _as_series(x, min_length=1)
    if not abs(psi) < 1.0:
        raise DomainError(f"|psi| must be < 1, got {psi}")
    if not sigma > 0.0:
        raise DomainError(f"sigma must be > 0, got {sigma}")
    v = residuals(x, psi)
    return float(0.5 * x.size * np.log(sigma) + np.dot(v, v) / (2.0 * sigma))


def fit(x) -> ScalarMA1Fit:
    """Minimize the NLL with sigma concentrated out.

    For fixed psi the optimal variance is ``mean(v_t(psi)^2)``, leaving a
    one-dimensional problem in psi on ``[-1 + 1e-4, 1 - 1e-4]``. A coarse grid
    brackets the minimum, which bounded Brent (golden section with parabolic
    steps) then refines to ``|dpsi| < 1e-8``.
    """
    x = _as_series(x)
    if np.ptp(x) == 0.0:
        raise DegenerateSeries("cannot fit an MA(1) to a constant series")
    T = x.size
    lo, hi = -1.0 + DELTA, 1.0 - DELTA

    def profile(psi):
        v = residuals(x, psi)
        return np.log(np.dot(v, v))

    grid = np.linspace(lo, hi, GRID_POINTS)
    vals = np.array([profile(p) for p in grid])
    k = int(np.argmin(vals))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, GRID_POINTS - 1)]
    res = minimize_scalar(profile, bounds=(a, b), method="bounded", options={"xatol": PSI_XTOL, "maxiter": 500})
    psi = float(res.x)
    if vals[k] < res.fun:
        psi = float(grid[k])
    v = residuals(x, psi)
    sigma = float(np.dot(v, v) / T)
    params = ScalarMA1Params(psi, sigma)
    return ScalarMA1Fit(
        params=params,
        nll=nll(x, psi, sigma),
        iterations=GRID_POINTS + int(res.nfev),
        at_boundary=abs(psi) >= hi - BOUNDARY_BAND,
        converged=bool(res.success),
    )


def moments_from_params(p: ScalarMA1Params):
    """``(gamma0, gamma1) = ((1 + psi^2) sigma, -psi sigma)``."""
    return (1.0 + p.psi**2) * p.sigma, -p.psi * p.sigma


def params_from_moments(gamma0, gamma1) -> ScalarMA1Params:
    """Invertible MA(1) matching the given lag-0/lag-1 autocovariances."""
    if not gamma0 > 0:
        raise NotRepresentable(f"gamma0 must be positive, got {gamma0}")
    r = -gamma1 / gamma0  # = psi / (1 + psi^2)
    if not abs(r) < 0.5:
        raise NotRepresentable(f"|gamma1|/gamma0 = {abs(r):.6g} >= 1/2")
    if r == 0.0:
        return ScalarMA1Params(0.0, float(gamma0))
    # smaller root of r psi^2 - psi + r = 0, written without cancellation
    psi = 2.0 * r / (1.0 + np.sqrt(1.0 - 4.0 * r * r))
    return ScalarMA1Params(float(psi), float(gamma0 / (1.0 + psi * psi)))


def fisher_info(p: ScalarMA1Params) -> np.ndarray:
    """Per-observation information ``diag(1/(1 - psi^2), 1/(2 sigma^2))``."""
    return np.diag([1.0 / (1.0 - p.psi**2), 1.0 / (2.0 * p.sigma**2)])
