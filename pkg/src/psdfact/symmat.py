"""Dense symmetric-matrix kernel.

All numerical work in the package funnels through here: spectral
decompositions, pseudo-inverses, matrix exponentials, norms, and image
subspaces.  Matrices are plain float ndarrays; ``as_symmetric`` is the
canonical constructor and enforces the two invariants every routine
assumes, exact symmetry and finite entries.

Sizes stay small (side <= ~200), so everything uses dense LAPACK paths
via numpy and favours determinism over speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DimensionError,
    NotPsdError,
    NumericError,
    PreconditionError,
)

# Relative eigenvalue cutoff below which a direction counts as kernel.
RANK_TOL = 1e-9
# Eigenvalues closer than this (relative to the operator norm) are treated
# as one degenerate cluster; shared with the derivative and rescaling code
# so both see identical eigenspaces.
CLUSTER_TOL = 1e-8
# exp() overflows just above 709; anything near this signals a step-size bug.
EXP_CAP = 700.0


def as_symmetric(a) -> np.ndarray:
    """Validate and symmetrize a square matrix: (a + a.T) / 2."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise PreconditionError("matrix has non-finite entries")
    return (a + a.T) / 2.0


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues sorted descending with matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def side(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T

    def top_cluster(self, rel_tol: float = CLUSTER_TOL) -> np.ndarray:
        """Orthonormal basis of the eigenspace of the largest eigenvalue.

        Eigenvalues within ``rel_tol`` times the operator norm of the top
        one count as degenerate and are merged into the cluster.
        """
        lam = self.eigenvalues
        scale = max(abs(lam[0]), abs(lam[-1])) if lam.size else 0.0
        keep = lam >= lam[0] - rel_tol * scale
        return self.eigenvectors[:, keep]


@dataclass(frozen=True)
class Subspace:
    """A linear subspace given by an orthonormal basis matrix (columns)."""

    basis: np.ndarray  # shape (ambient_dim, dim)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def project_point(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.basis @ (self.basis.T @ x)


def spectral_decompose(m: np.ndarray, tol: float = 1e-10) -> SpectralDecomposition:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Raises ConvergenceError if the eigensolver fails or the reconstruction
    residual exceeds ``tol * (1 + ||m||_F)``.
    """
    m = as_symmetric(m)
    try:
        lam, vec = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigendecomposition failed: {exc}") from exc
    lam = lam[::-1]
    vec = vec[:, ::-1]
    dec = SpectralDecomposition(eigenvalues=lam, eigenvectors=vec)
    residual = float(np.linalg.norm(dec.reconstruct() - m))
    if residual > tol * (1.0 + float(np.linalg.norm(m))):
        raise ConvergenceError(
            "spectral reconstruction residual too large", residual=residual
        )
    return dec


def operator_norm(m: np.ndarray) -> float:
    """Largest eigenvalue in absolute value of a symmetric matrix."""
    m = as_symmetric(m)
    if m.shape[0] == 0:
        return 0.0
    lam = np.linalg.eigvalsh(m)
    return float(np.max(np.abs(lam)))


def frobenius_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(m, dtype=float)))


def trace_inner_product(a: np.ndarray, b: np.ndarray) -> float:
    """Trace inner product <A, B> = Tr[A^T B]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.sum(a * b))


def pseudo_inverse(m: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Moore-Penrose inverse of a symmetric matrix via its spectrum.

    Eigenvalues with |lambda| <= rank_tol * |lambda|_max are treated as
    exact zeros and excluded; the zero matrix maps to the zero matrix.
    """
    dec = spectral_decompose(m)
    lam = dec.eigenvalues
    scale = float(np.max(np.abs(lam))) if lam.size else 0.0
    if scale == 0.0:
        return np.zeros_like(np.asarray(m, dtype=float))
    keep = np.abs(lam) > rank_tol * scale
    v = dec.eigenvectors[:, keep]
    return as_symmetric((v / lam[keep]) @ v.T)


def matrix_exponential(m: np.ndarray, exp_cap: float = EXP_CAP) -> np.ndarray:
    """exp(m) for symmetric m, computed through the eigendecomposition."""
    dec = spectral_decompose(m)
    lam = dec.eigenvalues
    if lam.size and lam[0] > exp_cap:
        raise NumericError(
            f"matrix exponential overflows: top eigenvalue {lam[0]:.3g} "
            f"exceeds cap {exp_cap:.3g}"
        )
    v = dec.eigenvectors
    return as_symmetric((v * np.exp(lam)) @ v.T)


def sqrt_psd(m: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """PSD square root; clips eigenvalues below -rank_tol*scale to zero."""
    dec = spectral_decompose(m)
    lam = dec.eigenvalues
    scale = float(np.max(np.abs(lam))) if lam.size else 0.0
    if lam.size and lam[-1] < -rank_tol * max(scale, 1.0):
        raise NotPsdError(
            f"matrix is not PSD: min eigenvalue {lam[-1]:.3g}"
        )
    v = dec.eigenvectors
    return as_symmetric((v * np.sqrt(np.clip(lam, 0.0, None))) @ v.T)


def eig_clip(m: np.ndarray, min_eig: float = 0.0, max_eig: float | None = None) -> np.ndarray:
    """Clip the spectrum of a symmetric matrix into [min_eig, max_eig]."""
    dec = spectral_decompose(m)
    lam = np.clip(dec.eigenvalues, min_eig, max_eig)
    v = dec.eigenvectors
    return as_symmetric((v * lam) @ v.T)


def image_basis(m: np.ndarray, rank_tol: float = RANK_TOL) -> Subspace:
    """Orthonormal basis of the image of a PSD matrix.

    Directions with eigenvalue > rank_tol * lambda_max are kept.  A
    negative eigenvalue below -rank_tol * lambda_max raises NotPsdError.
    """
    dec = spectral_decompose(m)
    lam = dec.eigenvalues
    scale = float(np.max(np.abs(lam))) if lam.size else 0.0
    if lam.size and lam[-1] < -rank_tol * max(scale, 1.0):
        raise NotPsdError(f"matrix is not PSD: min eigenvalue {lam[-1]:.3g}")
    if scale == 0.0:
        return Subspace(basis=np.zeros((m.shape[0], 0)))
    keep = lam > rank_tol * scale
    return Subspace(basis=dec.eigenvectors[:, keep].copy())


def project_point(s: Subspace, x: np.ndarray) -> np.ndarray:
    return s.project_point(x)


def project_subspace(target: Subspace, other: Subspace, rank_tol: float = RANK_TOL) -> Subspace:
    """Orthonormal basis of the projection of ``other`` onto ``target``."""
    if target.ambient_dim != other.ambient_dim:
        raise DimensionError("subspaces live in different ambient dimensions")
    if target.dim == 0 or other.dim == 0:
        return Subspace(basis=np.zeros((target.ambient_dim, 0)))
    projected = target.projector() @ other.basis
    u, sig, _ = np.linalg.svd(projected, full_matrices=False)
    if sig.size == 0 or sig[0] == 0.0:
        return Subspace(basis=np.zeros((target.ambient_dim, 0)))
    keep = sig > rank_tol * sig[0]
    return Subspace(basis=u[:, keep].copy())
