"""
Moment estimation through aggregation (META).

1. For each canonical weight ``w`` fit a scalar MA(1) to ``x_t = w^T z_t``.
2. Map every fit to its lag-0/lag-1 autocovariances.
3. Assemble Gamma0, Gamma1 entrywise (valid because Gamma1 is symmetric).
4. Recover ``(Theta, Sigma_u)`` in closed form.

The sample-moment estimator :func:`mom_fit` skips steps 1-3 and plugs raw
sample autocovariances into step 4.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import scalar_ma1
from .errors import (
    DegenerateSeries,
    DimensionMismatch,
    EstimationFailed,
    KindMismatch,
    MetaSmoothError,
    MissingWeight,
    NotPositiveDefinite,
)
from .model import (
    AutocovPair,
    ReducedParams,
    StructuralParams,
    TransformInfo,
    autocov_to_reduced,
    params_to_json,
    reduced_to_structural,
)
from .simulate import SeriesMatrix

__all__ = [
    "MIN_T",
    "MetaFitReport",
    "aggregate",
    "as_differences",
    "assemble_autocov",
    "canonical_weights",
    "meta_fit",
    "mom_fit",
    "sample_autocov",
]

MIN_T = 20


def canonical_weights(n: int) -> list[np.ndarray]:
    """``e_1..e_n`` followed by ``e_i + e_j`` for ``i < j`` in lexicographic order."""
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    eye = np.eye(n)
    weights = [eye[i].copy() for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            weights.append(eye[i] + eye[j])
    return weights


def _weight_key(w) -> tuple:
    return tuple(int(round(v)) for v in np.asarray(w))


def as_differences(Z) -> np.ndarray:
    """Accept a SeriesMatrix of differences or a plain T x N array."""
    if isinstance(Z, SeriesMatrix):
        if Z.kind != "differences":
            raise KindMismatch(f"estimators need differenced data, got {Z.kind}")
        return Z.values
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.ndim != 2:
        raise ValueError(f"data must be 2-D, got shape {Z.shape}")
    if not np.all(np.isfinite(Z)):
        raise ValueError("data has non-finite values")
    return Z


def aggregate(Z, w) -> np.ndarray:
    Z = as_differences(Z)
    w = np.asarray(w, dtype=float).ravel()
    if w.size != Z.shape[1]:
        raise DimensionMismatch(f"weight has {w.size} entries, data has {Z.shape[1]} columns")
    return Z @ w


def assemble_autocov(moments, n: int) -> AutocovPair:
    """Build Gamma0/Gamma1 from per-aggregate autocovariances.

    ``moments`` maps each canonical weight (as an integer tuple or array) to
    ``(gamma0, gamma1)``. Diagonal entries come from ``e_i``, off-diagonal
    entries from ``(gamma(e_i + e_j) - gamma(e_i) - gamma(e_j)) / 2``.
    """
    table = {_weight_key(k): v for k, v in moments.items()}
    g = np.zeros((2, n, n))
    eye = np.eye(n)

    def lookup(w):
        key = _weight_key(w)
        if key not in table:
            raise MissingWeight(f"no moments supplied for weight {key}")
        return np.asarray(table[key], dtype=float)

    diag = [lookup(eye[i]) for i in range(n)]
    for i in range(n):
        g[:, i, i] = diag[i]
        for j in range(i + 1, n):
            off = 0.5 * (lookup(eye[i] + eye[j]) - diag[i] - diag[j])
            g[:, i, j] = off
            g[:, j, i] = off
    return AutocovPair(g[0], g[1], check=False)


@dataclass
class MetaFitReport:
    """Everything produced by one META run."""

    reduced: ReducedParams
    structural: StructuralParams
    structural_valid: bool
    weights: list
    scalar_fits: list
    autocov: AutocovPair
    diagnostics: dict = field(default_factory=dict)
    estimator: str = "meta"

    def to_json(self) -> dict:
        out = {
            "estimator": self.estimator,
            "n": self.reduced.n,
            "reduced": params_to_json(self.reduced),
            "structural": params_to_json(self.structural),
            "structural_valid": self.structural_valid,
            "autocov": params_to_json(self.autocov),
            "scalar_fits": [
                {
                    "weight": [int(round(v)) for v in w],
                    "psi": f.psi,
                    "sigma": f.sigma,
                    "nll": f.nll,
                    "iterations": f.iterations,
                    "at_boundary": f.at_boundary,
                }
                for w, f in zip(self.weights, self.scalar_fits)
            ],
            "diagnostics": self.diagnostics,
        }
        return out


def _structural_report(reduced, info):
    try:
        return reduced_to_structural(reduced, info=info), True
    except NotPositiveDefinite:
        return reduced_to_structural(reduced, check=False, info=info), False


def meta_fit(Z, executor=None) -> MetaFitReport:
    """Run the META pipeline on differenced data ``Z`` (T x N, T >= 20).

    ``executor`` may be any ``concurrent.futures`` executor; the scalar fits
    are then mapped over it. The result does not depend on completion order.

    Raises EstimationFailed with ``stage`` set to "scalar_fit" or "recover".
    Scalar fits that end at the invertibility boundary are reported in the
    diagnostics but do not abort.
    """
    t0 = time.perf_counter()
    Z = as_differences(Z)
    T, n = Z.shape
    if T < MIN_T:
        raise ValueError(f"META needs at least {MIN_T} observations, got {T}")
    weights = canonical_weights(n)
    series = [Z @ w for w in weights]
    try:
        if executor is None:
            fits = [scalar_ma1.fit(x) for x in series]
        else:
            fits = list(executor.map(scalar_ma1.fit, series))
    except (DegenerateSeries, MetaSmoothError) as exc:
        raise EstimationFailed("scalar_fit", exc) from exc

    moments = {_weight_key(w): scalar_ma1.moments_from_params(f.params) for w, f in zip(weights, fits)}
    autocov = assemble_autocov(moments, n)
    info = TransformInfo()
    try:
        reduced = autocov_to_reduced(autocov, info=info)
    except MetaSmoothError as exc:
        raise EstimationFailed("recover", exc) from exc
    structural, valid = _structural_report(reduced, info)
    diagnostics = {
        "T": T,
        "boundary_flags": [bool(f.at_boundary) for f in fits],
        "any_boundary": any(f.at_boundary for f in fits),
        "symmetrization": dict(info.asymmetry),
        "complex_roots": info.complex_roots,
        "root_moduli": np.abs(info.roots).tolist(),
        "elapsed_seconds": time.perf_counter() - t0,
    }
    return MetaFitReport(
        reduced=reduced,
        structural=structural,
        structural_valid=valid,
        weights=weights,
        scalar_fits=fits,
        autocov=autocov,
        diagnostics=diagnostics,
    )


def sample_autocov(Z) -> AutocovPair:
    """Uncentred lag-0/lag-1 sample autocovariances, both divided by T."""
    Z = as_differences(Z)
    T = Z.shape[0]
    g0 = Z.T @ Z / T
    g1 = Z[1:].T @ Z[:-1] / T
    return AutocovPair(g0, 0.5 * (g1 + g1.T), check=False)


def mom_fit(Z) -> ReducedParams:
    """Sample-moment estimator: raw autocovariances into the closed-form map."""
    Z = as_differences(Z)
    if Z.shape[0] < MIN_T:
        raise ValueError(f"need at least {MIN_T} observations, got {Z.shape[0]}")
    try:
        return autocov_to_reduced(sample_autocov(Z))
    except MetaSmoothError as exc:
        raise EstimationFailed("recover", exc, estimator="mom") from exc
