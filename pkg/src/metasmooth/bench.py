"""
Monte Carlo accuracy/timing benchmark in the layout of the reference
comparison table: mean relative Frobenius error of Theta and Sigma_u per
(model, T, estimator), plus mean seconds per fit.

Every replication draws its series from ``child_seed(master_seed, model_key,
T, replication)``, so all estimators in a replication see the same data and
results do not depend on the number of worker processes.
"""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import MetaSmoothError, UnknownModel, ZeroTruth
from .estimators import ESTIMATORS, estimate
from .model import StructuralParams, params_from_json, structural_to_reduced
from .simulate import PRESETS, SimulationSpec, child_seed, difference, preset, simulate
from .vma_ml import MLConfig, vma_residuals

__all__ = [
    "BenchmarkConfig",
    "BenchmarkResult",
    "BenchmarkRow",
    "default_jobs",
    "rmse",
    "run_benchmark",
]

TARGETS = ("theta", "sigma_u")
CUSTOM_KEY_OFFSET = 100


def rmse(estimate, truth) -> float:
    """Relative Frobenius error ``||estimate - truth||_F / ||truth||_F``."""
    est = np.asarray(estimate, dtype=float)
    tru = np.asarray(truth, dtype=float)
    if est.shape != tru.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {tru.shape}")
    den = np.linalg.norm(tru)
    if den == 0.0:
        raise ZeroTruth("relative error is undefined for a zero reference matrix")
    return float(np.linalg.norm(est - tru) / den)


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("META_SMOOTH_JOBS", "1")))
    except ValueError:
        return 1


@dataclass
class BenchmarkConfig:
    """What to run.

    ``models`` holds preset ids (1-4) and/or explicit StructuralParams.
    """

    models: list = field(default_factory=lambda: [1, 2, 3, 4])
    sample_sizes: list = field(default_factory=lambda: [200, 400, 1000])
    replications: int = 100
    estimators: list = field(default_factory=lambda: ["meta", "ml"])
    master_seed: int = 0
    output: str | None = None
    fallback: bool = False
    jobs: int = field(default_factory=default_jobs)
    ml_config: MLConfig | None = None

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not self.sample_sizes or any(int(T) < 20 for T in self.sample_sizes):
            raise ValueError(f"sample sizes must be >= 20, got {self.sample_sizes}")
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad or not self.estimators:
            raise ValueError(f"estimators must be a non-empty subset of {ESTIMATORS}, got {self.estimators}")
        for m in self.models:
            if not isinstance(m, StructuralParams) and m not in PRESETS:
                raise UnknownModel(f"unknown model {m!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    @classmethod
    def from_json(cls, obj):
        """Build from a dict such as
        ``{"models": [1, {"sigma_eta": ..., "sigma_eps": ...}], "sample_sizes": [200],
        "replications": 100, "estimators": ["meta"], "master_seed": 7}``.
        """
        kw = dict(obj)
        models = []
        for m in kw.pop("models", [1, 2, 3, 4]):
            if isinstance(m, dict):
                p = params_from_json(m)
                if not isinstance(p, StructuralParams):
                    raise ValueError("explicit models must give sigma_eta and sigma_eps")
                models.append(p)
            else:
                models.append(int(m))
        kw["models"] = models
        if "seed" in kw:
            kw["master_seed"] = kw.pop("seed")
        if "T" in kw:
            kw["sample_sizes"] = kw.pop("T")
        ml = kw.pop("ml_config", None)
        if ml is not None:
            kw["ml_config"] = MLConfig(**ml)
        known = set(cls.__dataclass_fields__)
        extra = set(kw) - known
        if extra:
            raise ValueError(f"unknown benchmark config keys: {sorted(extra)}")
        return cls(**kw)


@dataclass(frozen=True)
class BenchmarkRow:
    model: str
    T: int
    estimator: str
    target: str
    mean_rmse: float
    std_error: float
    mean_seconds: float
    failures: int
    fallbacks: int
    replications: int


@dataclass(frozen=True)
class _Task:
    params: StructuralParams
    model_key: int
    T: int
    replication: int
    master_seed: int
    estimators: tuple
    fallback: bool
    ml_config: MLConfig | None


_warm = False


def _warm_up():
    global _warm
    if not _warm:
        vma_residuals(np.zeros((2, 1)), np.zeros((1, 1)))
        _warm = True


def _run_replication(task: _Task):
    """One dataset, every estimator. Returns {estimator: record dict}."""
    _warm_up()
    truth = structural_to_reduced(task.params)
    spec = SimulationSpec(task.params, task.T + 1, child_seed(task.master_seed, task.model_key, task.T, task.replication))
    Z = difference(simulate(spec))
    out = {}
    for name in task.estimators:
        t0 = time.perf_counter()
        try:
            est = estimate(Z, name, fallback=task.fallback, ml_config=task.ml_config)
        except MetaSmoothError as exc:
            out[name] = {"ok": False, "seconds": time.perf_counter() - t0, "reason": f"{type(exc).__name__}: {exc}"}
            continue
        seconds = time.perf_counter() - t0
        out[name] = {
            "ok": True,
            "seconds": seconds,
            "fallback": est.fallback_used,
            "theta": rmse(est.reduced.theta, truth.theta),
            "sigma_u": rmse(est.reduced.sigma_u, truth.sigma_u),
        }
    return out


@dataclass
class BenchmarkResult:
    rows: list
    records: dict

    def row(self, model, T, estimator, target="theta") -> BenchmarkRow:
        for r in self.rows:
            if r.model == str(model) and r.T == T and r.estimator == estimator and r.target == target:
                return r
        raise KeyError((model, T, estimator, target))

    def to_csv(self) -> str:
        """Deterministic CSV (accuracy and failure counts, no timings)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model", "T", "estimator", "target", "mean_rmse", "std_error", "failures", "fallbacks", "replications"])
        for r in self.rows:
            w.writerow([r.model, r.T, r.estimator, r.target, repr(r.mean_rmse), repr(r.std_error),
                        r.failures, r.fallbacks, r.replications])
        return buf.getvalue()

    def timing_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model", "T", "estimator", "mean_seconds"])
        for r in self.rows:
            if r.target == "theta":
                w.writerow([r.model, r.T, r.estimator, repr(r.mean_seconds)])
        return buf.getvalue()

    def table(self) -> str:
        """Human-readable summary; errors are multiplied by 1000."""
        ests = sorted({r.estimator for r in self.rows}, key=ESTIMATORS.index)
        head = ["Model", "T"]
        head += [f"Theta {e.upper()}" for e in ests]
        head += [f"Sigma_u {e.upper()}" for e in ests]
        head += [f"Time {e.upper()}" for e in ests]
        head += ["Failures"]
        lines = []
        keys = []
        for r in self.rows:
            if (r.model, r.T) not in keys:
                keys.append((r.model, r.T))
        for model, T in keys:
            cells = [model, str(T)]
            fails = []
            for target in TARGETS:
                for e in ests:
                    cells.append(f"{1000 * self.row(model, T, e, target).mean_rmse:.2f}")
            for e in ests:
                row = self.row(model, T, e)
                cells.append(f"{row.mean_seconds:.4f}")
                fails.append(f"{e}:{row.failures}")
            cells.append(" ".join(fails))
            lines.append(cells)
        widths = [max(len(h), *(len(l[i]) for l in lines)) for i, h in enumerate(head)]
        fmt = "  ".join(f"{{:>{w}}}" for w in widths)
        out = [fmt.format(*head), "-" * (sum(widths) + 2 * (len(widths) - 1))]
        out += [fmt.format(*l) for l in lines]
        return "\n".join(out)


def _summarize(values):
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        return math.nan, math.nan
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.nan
    return mean, se


def run_benchmark(cfg: BenchmarkConfig, progress=None) -> BenchmarkResult:
    """Run the sweep; failures are counted per cell and never abort it.

    Standard errors are the sample standard deviation of the per-replication
    errors over the square root of the number of successful replications.
    Timing covers the estimator call only.
    """
    models = []
    custom = 0
    for m in cfg.models:
        if isinstance(m, StructuralParams):
            custom += 1
            models.append((f"custom{custom}", CUSTOM_KEY_OFFSET + custom, m))
        else:
            models.append((str(m), int(m), preset(m)))

    tasks = []
    for label, key, params in models:
        for T in cfg.sample_sizes:
            for rep in range(cfg.replications):
                tasks.append(((label, int(T), rep), _Task(params, key, int(T), rep, int(cfg.master_seed),
                                                          tuple(cfg.estimators), cfg.fallback, cfg.ml_config)))
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_replication, [t for _, t in tasks], chunksize=4))
    else:
        results = []
        for i, (_, t) in enumerate(tasks):
            results.append(_run_replication(t))
            if progress is not None:
                progress(i + 1, len(tasks))
    records = {key: res for (key, _), res in zip(tasks, results)}

    rows = []
    for label, _, _ in models:
        for T in cfg.sample_sizes:
            T = int(T)
            reps = [records[(label, T, r)] for r in range(cfg.replications)]
            for e in cfg.estimators:
                recs = [rep[e] for rep in reps]
                ok = [r for r in recs if r["ok"]]
                seconds = float(np.mean([r["seconds"] for r in recs]))
                for target in TARGETS:
                    mean, se = _summarize([r[target] for r in ok])
                    rows.append(BenchmarkRow(
                        model=label, T=T, estimator=e, target=target,
                        mean_rmse=mean, std_error=se, mean_seconds=seconds,
                        failures=len(recs) - len(ok),
                        fallbacks=sum(1 for r in ok if r["fallback"]),
                        replications=cfg.replications,
                    ))
    result = BenchmarkResult(rows, records)
    if cfg.output:
        with open(cfg.output, "w", newline="") as fh:
            fh.write(result.to_csv())
    return result
