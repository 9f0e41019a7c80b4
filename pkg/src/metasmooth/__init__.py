"""Estimation and forecasting for multivariate simple exponential smoothing.

The main estimator, META, fits scalar MA(1) models to N(N+1)/2 aggregates
of the differenced data and recovers the VMA(1) parameters in closed form.
"""

from .errors import (
    DegenerateSeries,
    DimensionMismatch,
    DomainError,
    EstimationFailed,
    KindMismatch,
    MetaSmoothError,
    MissingWeight,
    NoInvertibleRoot,
    NonConvergence,
    NotPositiveDefinite,
    NotPositiveSpectrum,
    NotRepresentable,
    SingularMatrix,
    UnknownModel,
    ZeroTruth,
)
from .meta import MetaFitReport, canonical_weights, meta_fit, mom_fit
from .model import (
    AutocovPair,
    ReducedParams,
    StructuralParams,
    autocov_to_reduced,
    params_to_autocov,
    reduced_to_structural,
    structural_to_reduced,
)
from .simulate import SeriesMatrix, SimulationSpec, difference, preset, simulate
from .vma_ml import MLConfig, ml_fit

__version__ = "0.1.0"
