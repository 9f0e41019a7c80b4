"""
Gaussian simulation of the structural local-level model, differencing, the
four reference presets, and the CSV series format.

Random numbers come from numpy's PCG64. Replication streams are derived with
:func:`child_seed`, which feeds ``(master_seed, *keys)`` to a
``numpy.random.SeedSequence``; the same keys always give the same stream on
every platform.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import KindMismatch, NotPositiveDefinite, UnknownModel
from .model import StructuralParams

__all__ = [
    "PRESETS",
    "SeriesMatrix",
    "SimulationSpec",
    "child_seed",
    "difference",
    "preset",
    "read_csv",
    "simulate",
    "write_csv",
]

_ETA_BIVARIATE = [[1.0, -0.5], [-0.5, 1.5]]
_ETA_TRIVARIATE = [[1.0, -0.5, 0.3], [-0.5, 1.5, -0.2], [0.3, -0.2, 1.0]]

PRESETS = {
    1: (_ETA_BIVARIATE, [[1.5, -0.15], [-0.15, 1.0]]),
    2: (_ETA_BIVARIATE, [[30.0, -3.0], [-3.0, 20.0]]),
    3: (_ETA_TRIVARIATE, [[1.5, -0.15, -0.1], [-0.15, 1.0, 0.3], [-0.1, 0.3, 1.5]]),
    4: (_ETA_TRIVARIATE, [[30.0, -3.0, -2.0], [-3.0, 20.0, 6.0], [-2.0, 6.0, 30.0]]),
}


def preset(model_id) -> StructuralParams:
    """Structural parameters of reference Model 1-4.

    Models 1 and 3 have a high signal-to-noise ratio; 2 and 4 share the same
    level noise but a much larger observation noise.
    """
    try:
        eta, eps = PRESETS[int(model_id)]
    except (KeyError, ValueError, TypeError):
        raise UnknownModel(f"unknown model {model_id!r}; expected one of {sorted(PRESETS)}") from None
    return StructuralParams(np.array(eta), np.array(eps))


@dataclass(frozen=True)
class SeriesMatrix:
    """A T x N block of observations tagged as levels or differences."""

    values: np.ndarray
    kind: str = "levels"
    columns: tuple = field(default=None)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2:
            raise ValueError(f"series values must be 2-D, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("series has non-finite values")
        if self.kind not in ("levels", "differences"):
            raise ValueError(f"kind must be 'levels' or 'differences', got {self.kind!r}")
        object.__setattr__(self, "values", vals)
        cols = self.columns
        if cols is None:
            prefix = "y" if self.kind == "levels" else "z"
            cols = tuple(f"{prefix}{i + 1}" for i in range(vals.shape[1]))
        cols = tuple(cols)
        if len(cols) != vals.shape[1]:
            raise ValueError(f"{len(cols)} column names for {vals.shape[1]} columns")
        object.__setattr__(self, "columns", cols)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def head(self, rows) -> "SeriesMatrix":
        return SeriesMatrix(self.values[:rows], self.kind, self.columns)


@dataclass(frozen=True)
class SimulationSpec:
    params: StructuralParams
    T: int
    seed: int | np.random.SeedSequence = 0
    mu0: np.ndarray | None = None

    def __post_init__(self):
        if int(self.T) < 2:
            raise ValueError(f"T must be at least 2, got {self.T}")


def child_seed(master_seed, *keys) -> np.random.SeedSequence:
    """Deterministic child stream for ``(master_seed, keys...)``; keys are non-negative ints."""
    return np.random.SeedSequence([int(master_seed), *(int(k) for k in keys)])


def _chol(S, name):
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"{name}: {exc}") from exc


def simulate(spec: SimulationSpec) -> SeriesMatrix:
    """Simulate T levels ``y_1..y_T`` of the structural model.

    ``eta`` draws for all t come first from the stream, then ``eps`` draws.
    """
    p = spec.params
    n, T = p.n, int(spec.T)
    L_eta = _chol(p.sigma_eta, "sigma_eta")
    L_eps = _chol(p.sigma_eps, "sigma_eps")
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    eta = rng.standard_normal((T, n)) @ L_eta.T
    eps = rng.standard_normal((T, n)) @ L_eps.T
    mu0 = np.zeros(n) if spec.mu0 is None else np.asarray(spec.mu0, dtype=float).reshape(n)
    mu = mu0 + np.cumsum(eta, axis=0)
    return SeriesMatrix(mu + eps, kind="levels")


def difference(levels: SeriesMatrix) -> SeriesMatrix:
    if levels.kind != "levels":
        raise KindMismatch(f"expected levels, got {levels.kind}")
    if levels.T < 2:
        raise ValueError("need at least 2 observations to difference")
    cols = tuple("z" + c[1:] if c.startswith("y") else f"d_{c}" for c in levels.columns)
    return SeriesMatrix(np.diff(levels.values, axis=0), kind="differences", columns=cols)


# CSV -----------------------------------------------------------------------

def write_csv(series: SeriesMatrix, path_or_buf):
    """Header of column names, then one row per step at 17 significant digits."""
    own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
    fh = open(path_or_buf, "w", newline="") if own else path_or_buf
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(series.columns)
        for row in series.values:
            w.writerow([f"{v:.17g}" for v in row])
    finally:
        if own:
            fh.close()


def read_csv(path_or_buf, kind=None) -> SeriesMatrix:
    """Read a series CSV.

    ``kind`` defaults to "differences" when every header starts with ``z``
    and "levels" otherwise. Malformed cells raise ValueError naming the line
    and column.
    """
    own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
    if own:
        with open(path_or_buf, newline="") as fh:
            text = fh.read()
    else:
        text = path_or_buf.read()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty CSV: no header row")
    header = [h.strip() for h in rows[0]]
    if not header or any(h == "" for h in header):
        raise ValueError(f"line 1: empty column name in header {header}")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(c.strip() == "" for c in row):
            continue
        if len(row) != len(header):
            raise ValueError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        vals = []
        for col, cell in zip(header, row):
            try:
                v = float(cell)
            except ValueError:
                raise ValueError(f"line {lineno}, column '{col}': cannot parse {cell!r} as a number") from None
            if not np.isfinite(v):
                raise ValueError(f"line {lineno}, column '{col}': non-finite value {cell!r}")
            vals.append(v)
        data.append(vals)
    if not data:
        raise ValueError("CSV has a header but no data rows")
    if kind is None:
        kind = "differences" if all(h.lower().startswith("z") for h in header) else "levels"
    return SeriesMatrix(np.array(data), kind=kind, columns=tuple(header))
