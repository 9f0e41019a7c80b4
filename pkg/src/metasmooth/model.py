"""
Parameterizations of the multivariate local-level (simple exponential
smoothing) model and the exact maps between them.

Structural form::

    y_t  = mu_t + eps_t,      eps_t ~ (0, Sigma_eps)
    mu_t = mu_{t-1} + eta_t,  eta_t ~ (0, Sigma_eta)

Reduced form (integrated VMA(1))::

    z_t = y_t - y_{t-1} = u_t - Theta u_{t-1},   E[u_t u_t^T] = Sigma_u

Autocovariances of z_t::

    Gamma0 = Sigma_u + Theta Sigma_u Theta^T = Sigma_eta + 2 Sigma_eps
    Gamma1 = -Theta Sigma_u = -Sigma_eps
"""

from __future__ import annotations

import json
from dataclasses import InitVar, dataclass, field

import numpy as np

from .errors import NotPositiveDefinite, SingularMatrix
from .linalg import as_square, solve_theta_quadratic, spectral_radius, sqrt_via_eig, symmetrize

__all__ = [
    "AutocovPair",
    "ReducedParams",
    "StructuralParams",
    "autocov_to_reduced",
    "check_pd",
    "is_pd",
    "params_from_json",
    "params_to_autocov",
    "params_to_json",
    "reduced_to_structural",
    "structural_to_reduced",
]

SYM_TOL = 1e-12
EWMA_SYM_TOL = 1e-8
PD_REL_TOL = 1e-12


def is_pd(M) -> bool:
    """Smallest eigenvalue of the symmetric part exceeds 1e-12 * trace/N."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    S = 0.5 * (M + M.T)
    tr = np.trace(S)
    if not np.isfinite(tr) or tr <= 0:
        return False
    return bool(np.linalg.eigvalsh(S)[0] > PD_REL_TOL * tr / n)


def check_pd(M, name):
    if not is_pd(M):
        eig = np.linalg.eigvalsh(0.5 * (M + M.T))
        raise NotPositiveDefinite(f"{name} is not positive definite (eigenvalues {eig})")


def _check_symmetric(M, name, tol=SYM_TOL):
    gap = np.linalg.norm(M - M.T)
    if gap > tol * max(np.linalg.norm(M), 1e-300):
        raise ValueError(f"{name} is not symmetric (asymmetry {gap:.3g})")


def _rel_asym(M) -> float:
    den = np.linalg.norm(M)
    return float(np.linalg.norm(M - M.T) / den) if den > 0 else 0.0


@dataclass(frozen=True)
class StructuralParams:
    """Noise covariances of the structural model.

    With ``check=False`` the positive-definiteness test is skipped; this is
    how estimators report an estimated Sigma_eta that came out indefinite.
    """

    sigma_eta: np.ndarray
    sigma_eps: np.ndarray
    check: InitVar[bool] = True

    def __post_init__(self, check):
        eta = as_square(self.sigma_eta, "sigma_eta")
        eps = as_square(self.sigma_eps, "sigma_eps")
        if eta.shape != eps.shape:
            raise ValueError(f"sigma_eta {eta.shape} and sigma_eps {eps.shape} differ in shape")
        object.__setattr__(self, "sigma_eta", eta)
        object.__setattr__(self, "sigma_eps", eps)
        if check:
            _check_symmetric(eta, "sigma_eta")
            _check_symmetric(eps, "sigma_eps")
            check_pd(eta, "sigma_eta")
            check_pd(eps, "sigma_eps")

    @property
    def n(self) -> int:
        return self.sigma_eta.shape[0]

    @property
    def is_valid(self) -> bool:
        return is_pd(self.sigma_eta) and is_pd(self.sigma_eps)

    @property
    def signal_to_noise(self) -> np.ndarray:
        return self.sigma_eta @ np.linalg.inv(self.sigma_eps)


@dataclass(frozen=True)
class ReducedParams:
    """MA coefficient and innovation covariance of the integrated VMA(1).

    Invertibility (spectral radius of ``theta`` below one) and positive
    definiteness of ``sigma_u`` are enforced on construction. Membership in
    the exponential-smoothing class (``theta @ sigma_u`` symmetric) is not,
    because an unrestricted ML fit need not satisfy it; see
    :meth:`ewma_asymmetry`.
    """

    theta: np.ndarray
    sigma_u: np.ndarray
    check: InitVar[bool] = True

    def __post_init__(self, check):
        theta = as_square(self.theta, "theta")
        sigma_u = as_square(self.sigma_u, "sigma_u")
        if theta.shape != sigma_u.shape:
            raise ValueError(f"theta {theta.shape} and sigma_u {sigma_u.shape} differ in shape")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "sigma_u", sigma_u)
        if check:
            rho = spectral_radius(theta)
            if not rho < 1.0:
                raise ValueError(f"theta is not invertible (spectral radius {rho:.6g})")
            _check_symmetric(sigma_u, "sigma_u", tol=EWMA_SYM_TOL)
            check_pd(sigma_u, "sigma_u")

    @property
    def n(self) -> int:
        return self.theta.shape[0]

    def ewma_asymmetry(self) -> float:
        """Relative asymmetry of ``theta @ sigma_u`` (zero for the EWMA class)."""
        return _rel_asym(self.theta @ self.sigma_u)


@dataclass(frozen=True)
class AutocovPair:
    """Lag-0 and lag-1 autocovariances of the differenced series."""

    gamma0: np.ndarray
    gamma1: np.ndarray
    check: InitVar[bool] = True

    def __post_init__(self, check):
        g0 = as_square(self.gamma0, "gamma0")
        g1 = as_square(self.gamma1, "gamma1")
        if g0.shape != g1.shape:
            raise ValueError(f"gamma0 {g0.shape} and gamma1 {g1.shape} differ in shape")
        object.__setattr__(self, "gamma0", g0)
        object.__setattr__(self, "gamma1", g1)
        if check:
            _check_symmetric(g0, "gamma0", tol=EWMA_SYM_TOL)
            _check_symmetric(g1, "gamma1", tol=EWMA_SYM_TOL)
            check_pd(g0, "gamma0")

    @property
    def n(self) -> int:
        return self.gamma0.shape[0]


@dataclass
class TransformInfo:
    """Diagnostics collected by the transforms (symmetrization gaps etc.)."""

    asymmetry: dict = field(default_factory=dict)
    complex_roots: bool = False
    roots: np.ndarray | None = None
    rejected_roots: np.ndarray | None = None


def structural_to_reduced(s: StructuralParams) -> ReducedParams:
    """Closed-form reduced parameters.

    ``Theta = (Q + 2I - (Q^2 + 4Q)^{1/2}) / 2`` with ``Q = Sigma_eta Sigma_eps^{-1}``
    and ``Sigma_u = Theta^{-1} Sigma_eps``.
    """
    n = s.n
    eye = np.eye(n)
    Q = s.sigma_eta @ np.linalg.inv(s.sigma_eps)
    root = sqrt_via_eig(Q @ Q + 4.0 * Q)
    theta = 0.5 * (Q + 2.0 * eye - root)
    sigma_u, _ = symmetrize(np.linalg.solve(theta, s.sigma_eps))
    return ReducedParams(theta, sigma_u)


def reduced_to_structural(r: ReducedParams, check=True, info: TransformInfo | None = None) -> StructuralParams:
    """``Sigma_eps = Theta Sigma_u`` and ``Sigma_eta = Gamma0 - 2 Sigma_eps``.

    Raises NotPositiveDefinite when either covariance is not PD, unless
    ``check=False``, in which case the (possibly indefinite) matrices are
    returned unvalidated.
    """
    eps, gap_eps = symmetrize(r.theta @ r.sigma_u)
    eta, gap_eta = symmetrize(r.sigma_u + r.theta @ r.sigma_u @ r.theta.T - 2.0 * eps)
    if info is not None:
        info.asymmetry["sigma_eps"] = gap_eps
        info.asymmetry["sigma_eta"] = gap_eta
    if check:
        check_pd(eps, "sigma_eps")
        check_pd(eta, "sigma_eta")
    return StructuralParams(eta, eps, check=False)


def params_to_autocov(r: ReducedParams, info: TransformInfo | None = None) -> AutocovPair:
    gamma0, gap0 = symmetrize(r.sigma_u + r.theta @ r.sigma_u @ r.theta.T)
    gamma1, gap1 = symmetrize(-r.theta @ r.sigma_u)
    if info is not None:
        info.asymmetry["gamma0"] = gap0
        info.asymmetry["gamma1"] = gap1
    return AutocovPair(gamma0, gamma1, check=False)


def autocov_to_reduced(a: AutocovPair, info: TransformInfo | None = None) -> ReducedParams:
    """Reduced parameters from the two autocovariance matrices.

    Theta solves ``Theta^2 + Gamma0 Gamma1^{-1} Theta + I = 0`` with all
    eigenvalues inside the unit disk, then ``Sigma_u = -Theta^{-1} Gamma1``.

    Raises
    ------
    SingularMatrix
        gamma1 is (numerically) singular.
    NoInvertibleRoot
        No solution with spectral radius below one.
    NotPositiveDefinite
        The recovered Sigma_u is not positive definite.
    """
    g0 = np.asarray(a.gamma0, dtype=float)
    g1 = np.asarray(a.gamma1, dtype=float)
    cond = np.linalg.cond(g1)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularMatrix(f"gamma1 is singular (condition number {cond:.3g})")
    A = np.linalg.solve(g1.T, g0.T).T  # Gamma0 Gamma1^{-1}
    sol = solve_theta_quadratic(A, return_info=True)
    theta = sol.theta
    sigma_u, gap = symmetrize(-np.linalg.solve(theta, g1))
    if info is not None:
        info.asymmetry["sigma_u"] = gap
        info.complex_roots = sol.complex_roots
        info.roots = sol.roots
        info.rejected_roots = sol.rejected_roots
    check_pd(sigma_u, "sigma_u")
    return ReducedParams(theta, sigma_u)


# JSON ----------------------------------------------------------------------

_FIELDS = {
    StructuralParams: ("sigma_eta", "sigma_eps"),
    ReducedParams: ("theta", "sigma_u"),
    AutocovPair: ("gamma0", "gamma1"),
}


def params_to_json(p) -> dict:
    """JSON-ready dict: ``{"n": N, <field>: row-major nested list, ...}``."""
    names = _FIELDS[type(p)]
    out = {"n": p.n}
    for name in names:
        out[name] = np.asarray(getattr(p, name)).tolist()
    return out


def _read_matrix(obj, key, n):
    if key not in obj:
        raise ValueError(f"missing field '{key}'")
    arr = np.asarray(obj[key], dtype=float)
    if arr.ndim == 1:
        if n is None:
            n = int(round(np.sqrt(arr.size)))
        if arr.size != n * n:
            raise ValueError(f"field '{key}' has {arr.size} entries, expected {n * n}")
        arr = arr.reshape(n, n)
    elif arr.ndim == 2 and n is not None and arr.shape != (n, n):
        raise ValueError(f"field '{key}' has shape {arr.shape}, expected ({n}, {n})")
    return arr


def params_from_json(obj):
    """Inverse of :func:`params_to_json`; the type is inferred from the keys.

    Matrices may be nested lists or flat row-major lists of length ``n*n``.
    """
    if isinstance(obj, (str, bytes)):
        obj = json.loads(obj)
    if not isinstance(obj, dict):
        raise ValueError("parameter JSON must be an object")
    n = obj.get("n")
    if n is not None:
        n = int(n)
    for cls, names in _FIELDS.items():
        if all(k in obj for k in names):
            return cls(*(_read_matrix(obj, k, n) for k in names))
    raise ValueError(
        "parameter JSON needs one of the key pairs "
        + ", ".join("/".join(v) for v in _FIELDS.values())
    )
