"""Uniform entry point over the three estimators (meta, ml, mom)."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .errors import EstimationFailed, NotPositiveDefinite
from .meta import meta_fit, mom_fit
from .model import ReducedParams, params_to_json, reduced_to_structural
from .vma_ml import MLConfig, ml_fit

__all__ = ["ESTIMATORS", "Estimate", "estimate"]

ESTIMATORS = ("meta", "ml", "mom")


@dataclass
class Estimate:
    reduced: ReducedParams
    requested: str
    used: str
    elapsed_seconds: float
    report: dict = field(default_factory=dict)

    @property
    def fallback_used(self) -> bool:
        return self.used != self.requested

    def to_json(self) -> dict:
        out = dict(self.report)
        out["estimator"] = self.used
        out["requested_estimator"] = self.requested
        out["fallback_used"] = self.fallback_used
        out["elapsed_seconds"] = self.elapsed_seconds
        out.setdefault("reduced", params_to_json(self.reduced))
        if "structural" not in out:
            try:
                out["structural"] = params_to_json(reduced_to_structural(self.reduced))
                out["structural_valid"] = True
            except NotPositiveDefinite:
                out["structural"] = params_to_json(reduced_to_structural(self.reduced, check=False))
                out["structural_valid"] = False
        return out


def _mom_report(r):
    return {"n": r.n, "reduced": params_to_json(r)}


def estimate(Z, estimator="meta", *, fallback=False, ml_config: MLConfig | None = None) -> Estimate:
    """Fit ``Z`` (differences) with the named estimator.

    With ``fallback=True`` a failed META fit is replaced by the sample-moment
    estimate and ``used`` records that. Without it EstimationFailed
    propagates.
    """
    if estimator not in ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator!r}; choose from {ESTIMATORS}")
    t0 = time.perf_counter()
    if estimator == "meta":
        try:
            rep = meta_fit(Z)
            return Estimate(rep.reduced, "meta", "meta", time.perf_counter() - t0, rep.to_json())
        except EstimationFailed:
            if not fallback:
                raise
        r = mom_fit(Z)
        return Estimate(r, "meta", "mom", time.perf_counter() - t0, _mom_report(r))
    if estimator == "mom":
        r = mom_fit(Z)
        return Estimate(r, "mom", "mom", time.perf_counter() - t0, _mom_report(r))
    res = ml_fit(Z, ml_config)
    return Estimate(res.reduced, "ml", "ml", time.perf_counter() - t0, res.to_json())
