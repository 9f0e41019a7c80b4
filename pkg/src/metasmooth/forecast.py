"""
Multivariate EWMA forecasting and the one-step-ahead forecast experiment.

The recursion is ``yhat_{t+1} = (I - Theta) y_t + Theta yhat_t`` started at
``yhat_1 = y_1``; the influence of that start decays like ``Theta^t``.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, MetaSmoothError
from .linalg import spectral_radius
from .model import StructuralParams, structural_to_reduced
from .simulate import SeriesMatrix, SimulationSpec, child_seed, difference, preset, simulate

logger = logging.getLogger(__name__)

__all__ = [
    "ForecastRow",
    "ForecastState",
    "forecast_experiment",
    "forecast_next",
    "forecast_path",
    "write_forecast_csv",
]

ESTIMATORS = ("meta", "ml", "true")


@dataclass(frozen=True)
class ForecastState:
    theta: np.ndarray
    y_hat: np.ndarray

    def __post_init__(self):
        theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
        y_hat = np.asarray(self.y_hat, dtype=float).ravel()
        if theta.shape != (y_hat.size, y_hat.size):
            raise DimensionMismatch(f"theta {theta.shape} does not match forecast of size {y_hat.size}")
        rho = spectral_radius(theta)
        if not rho < 1.0:
            raise ValueError(f"theta must have spectral radius < 1, got {rho:.6g}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "y_hat", y_hat)

    @classmethod
    def start(cls, theta, y_first):
        """Initial state with ``yhat_1 = y_1``."""
        return cls(theta, np.array(y_first, dtype=float))


def forecast_next(state: ForecastState, y_observed) -> ForecastState:
    y = np.asarray(y_observed, dtype=float).ravel()
    if y.size != state.y_hat.size:
        raise DimensionMismatch(f"observation has {y.size} entries, state has {state.y_hat.size}")
    theta = state.theta
    return ForecastState(theta, y - theta @ y + theta @ state.y_hat)


def forecast_path(levels, theta) -> np.ndarray:
    """All one-step forecasts ``yhat_1 .. yhat_{T+1}`` for a T x N level array.

    Row ``t`` (0-based) is the forecast of observation ``t`` made from
    observations ``0..t-1``; the last row forecasts the next, unseen value.
    """
    Y = levels.values if isinstance(levels, SeriesMatrix) else np.asarray(levels, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    state = ForecastState.start(theta, Y[0])
    out = np.empty((Y.shape[0] + 1, Y.shape[1]))
    out[0] = state.y_hat
    for t, y in enumerate(Y):
        state = forecast_next(state, y)
        out[t + 1] = state.y_hat
    return out


@dataclass(frozen=True)
class ForecastRow:
    replication: int
    estimator: str
    component: int
    error: float
    reason: str = ""


def _fit_theta(name, Z, ml_config):
    if name == "meta":
        from .meta import meta_fit

        return meta_fit(Z).reduced.theta
    from .vma_ml import ml_fit

    return ml_fit(Z, ml_config).reduced.theta


def forecast_experiment(model, T=200, R=200, estimators=("meta", "ml", "true"), seed=0, ml_config=None):
    """Forecast the last of T simulated observations from the first T - 1.

    For every replication a fresh series is simulated (stream
    ``child_seed(seed, model_key, T, r)``), each estimator is fitted on the
    differences of the first T - 1 levels, and the EWMA recursion run over
    those levels predicts observation T. "true" uses the exact Theta.

    Returns a list of :class:`ForecastRow` with ``error = y_T - yhat_T``.
    A failed fit produces rows with ``error = nan`` and the failure reason.
    """
    if T < 50:
        raise ValueError(f"T must be at least 50, got {T}")
    unknown = set(estimators) - set(ESTIMATORS)
    if unknown:
        raise ValueError(f"unknown estimators {sorted(unknown)}; choose from {ESTIMATORS}")
    if isinstance(model, StructuralParams):
        params, key = model, 0
    else:
        params, key = preset(model), int(model)
    true_theta = structural_to_reduced(params).theta
    rows = []
    for r in range(R):
        Y = simulate(SimulationSpec(params, T, child_seed(seed, key, T, r)))
        history = Y.head(T - 1)
        Z = difference(history)
        target = Y.values[-1]
        for name in estimators:
            try:
                theta = true_theta if name == "true" else _fit_theta(name, Z, ml_config)
                y_hat = forecast_path(history, theta)[-1]
            except MetaSmoothError as exc:
                logger.info("replication %d, %s failed: %s", r, name, exc)
                rows.extend(ForecastRow(r, name, i + 1, math.nan, str(exc)) for i in range(params.n))
                continue
            err = target - y_hat
            rows.extend(ForecastRow(r, name, i + 1, float(e)) for i, e in enumerate(err))
    return rows


def write_forecast_csv(rows, path_or_buf):
    """Tidy CSV: replication, estimator, component, error, reason."""
    own = isinstance(path_or_buf, str) or hasattr(path_or_buf, "__fspath__")
    fh = open(path_or_buf, "w", newline="") if own else path_or_buf
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["replication", "estimator", "component", "error", "reason"])
        for row in rows:
            w.writerow([row.replication, row.estimator, row.component, repr(row.error), row.reason])
    finally:
        if own:
            fh.close()
