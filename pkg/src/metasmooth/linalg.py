"""
Eigendecomposition-based matrix functions.

Only diagonalizable inputs are supported. The two public functions built on
top of :func:`eig_decompose` are a principal square root for matrices with a
real positive spectrum and a solver for the matrix quadratic

    X^2 + A X + I = 0

that returns the solution with every eigenvalue inside the unit disk.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NoInvertibleRoot, NonConvergence, NotPositiveSpectrum

__all__ = [
    "EigenDecomposition",
    "QuadraticSolution",
    "as_square",
    "eig_decompose",
    "spectral_radius",
    "sqrt_via_eig",
    "solve_theta_quadratic",
    "symmetrize",
]

REAL_TOL = 1e-8
IMAG_RESIDUE_TOL = 1e-8
UNIT_DISK_TOL = 1e-12


@dataclass(frozen=True)
class EigenDecomposition:
    """Right eigenpairs ``A @ vectors = vectors @ diag(values)``."""

    values: np.ndarray
    vectors: np.ndarray
    condition_estimate: float

    def reconstruct(self, func=None) -> np.ndarray:
        """Return ``V f(D) V^{-1}`` (complex); ``func=None`` gives A back."""
        d = self.values if func is None else func(self.values)
        # V diag(d) V^{-1} == solve(V^T, (V diag(d))^T)^T
        return np.linalg.solve(self.vectors.T, (self.vectors * d).T).T

    def residual(self, A) -> float:
        A = np.asarray(A)
        num = np.linalg.norm(A @ self.vectors - self.vectors * self.values)
        den = np.linalg.norm(A)
        return float(num / den) if den > 0 else float(num)


@dataclass(frozen=True)
class QuadraticSolution:
    theta: np.ndarray
    roots: np.ndarray
    rejected_roots: np.ndarray
    complex_roots: bool
    imag_residue: float
    notes: list = field(default_factory=list)


def as_square(A, name="matrix") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def symmetrize(M):
    """Return ``((M + M^T) / 2, ||M - M^T||_F)``."""
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T), float(np.linalg.norm(M - M.T))


def spectral_radius(A) -> float:
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def eig_decompose(A) -> EigenDecomposition:
    """Eigenvalues and right eigenvectors of a real square matrix.

    Raises NonConvergence if LAPACK fails or the eigenvector matrix is
    numerically singular (defective input).
    """
    A = as_square(A)
    n = A.shape[0]
    try:
        values, vectors = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(n, str(exc)) from exc
    cond = float(np.linalg.cond(vectors))
    if not np.isfinite(cond) or cond > 1e14:
        raise NonConvergence(n, f"eigenvector matrix is singular (cond={cond:.3g})")
    return EigenDecomposition(values=values, vectors=vectors, condition_estimate=max(cond, 1.0))


def _real_part(M, scale, what):
    imag = float(np.linalg.norm(M.imag))
    if imag > IMAG_RESIDUE_TOL * max(scale, 1e-300):
        raise NotPositiveSpectrum(
            f"{what}: imaginary residue {imag:.3g} exceeds tolerance (scale {scale:.3g})"
        )
    return np.ascontiguousarray(M.real), imag


def sqrt_via_eig(A) -> np.ndarray:
    """Principal square root of a diagonalizable matrix with real positive spectrum.

    Raises NotPositiveSpectrum when some eigenvalue is complex beyond
    ``|Im| <= 1e-8 (1 + |lambda|)`` or has a non-positive real part.
    """
    A = as_square(A)
    try:
        eig = eig_decompose(A)
    except NonConvergence as exc:
        raise NotPositiveSpectrum(f"not diagonalizable: {exc}") from exc
    lam = eig.values
    bad_imag = np.abs(lam.imag) > REAL_TOL * (1.0 + np.abs(lam))
    if np.any(bad_imag) or np.any(lam.real <= 0):
        raise NotPositiveSpectrum(f"eigenvalues {np.round(lam, 12)} are not all real and positive")
    S = eig.reconstruct(lambda d: np.sqrt(d.real).astype(complex))
    S, _ = _real_part(S, np.linalg.norm(A) ** 0.5, "matrix square root")
    return S


def _quadratic_roots(a):
    """Both roots of g^2 + a g + 1 = 0 for complex a, ordered (inside, outside)."""
    disc = np.sqrt(a * a - 4.0 + 0j)
    r1 = (-a + disc) / 2.0
    r2 = (-a - disc) / 2.0
    # Vieta: r1 * r2 = 1; rebuild the small root from the large one to avoid cancellation.
    swap = np.abs(r1) > np.abs(r2)
    big = np.where(swap, r1, r2)
    small = 1.0 / big
    return small, big


def solve_theta_quadratic(A, return_info=False):
    """Solve ``X^2 + A X + I = 0`` for the solution with spectral radius < 1.

    A is diagonalized, ``A = P diag(a) P^{-1}``, and for each eigenvalue the
    scalar equation ``g^2 + a g + 1 = 0`` is solved with the root of smaller
    modulus retained. The roots of each pair multiply to one, so at most one
    of them lies strictly inside the unit circle.

    Parameters
    ----------
    A : array_like
        Real diagonalizable coefficient matrix.
    return_info : bool
        If True return a :class:`QuadraticSolution` with the selected and
        rejected roots and whether any complex roots were involved.

    Raises
    ------
    NoInvertibleRoot
        When some eigenvalue yields a root pair on the unit circle.
    """
    A = as_square(A)
    try:
        eig = eig_decompose(A)
    except NonConvergence as exc:
        raise NoInvertibleRoot(f"coefficient matrix is not diagonalizable: {exc}") from exc
    small, big = _quadratic_roots(eig.values)
    if np.any(np.abs(small) >= 1.0 - UNIT_DISK_TOL):
        raise NoInvertibleRoot(
            f"eigenvalues {np.round(eig.values, 10)} give roots on the unit circle "
            f"(moduli {np.round(np.abs(small), 10)})"
        )
    theta_c = eig.reconstruct(lambda d: small)
    scale = 1.0 + np.linalg.norm(A)
    imag = float(np.linalg.norm(theta_c.imag))
    if imag > IMAG_RESIDUE_TOL * scale:
        raise NoInvertibleRoot(f"solution is not real (imaginary residue {imag:.3g})")
    theta = np.ascontiguousarray(theta_c.real)
    if not return_info:
        return theta
    complex_roots = bool(np.any(np.abs(small.imag) > REAL_TOL * (1.0 + np.abs(small))))
    notes = []
    if complex_roots:
        notes.append("complex conjugate roots selected by modulus")
    return QuadraticSolution(
        theta=theta,
        roots=small,
        rejected_roots=big,
        complex_roots=complex_roots,
        imag_residue=imag,
        notes=notes,
    )
