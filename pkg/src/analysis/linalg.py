"""Small dense symmetric linear algebra for PCA and the Fréchet distance."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
import numpy.typing as npt

from handling_errors import InsufficientDataError, NotPSDError, NumericError

logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-9
JACOBI_TOLERANCE = 1e-12
JACOBI_MAX_SWEEPS = 100
PSD_TOLERANCE = 1e-8
RANK_TOLERANCE = 1e-12
# Above this size "auto" hands the problem to LAPACK
JACOBI_MAX_DIM = 64

EighMethod = Literal["auto", "jacobi", "lapack"]


@dataclass(frozen=True, eq=False)
class FrechetStats:
    """Gaussian fit of a feature sample set."""

    mean: npt.NDArray[np.float64]
    cov: npt.NDArray[np.float64]
    n_samples: int

    @property
    def dim(self) -> int:
        return len(self.mean)


def _as_symmetric(matrix: npt.ArrayLike) -> npt.NDArray[np.float64]:
    m = np.array(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NumericError(f"Expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericError("Matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if m.size and np.max(np.abs(m - m.T)) > SYMMETRY_TOLERANCE * scale:
        raise NumericError("Matrix is not symmetric", residual=float(np.max(np.abs(m - m.T))))
    return (m + m.T) / 2


def _off_diagonal_norm(a: npt.NDArray[np.float64]) -> float:
    return float(np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2)))


def _jacobi(a: npt.NDArray[np.float64]) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """Cyclic Jacobi rotations until the off-diagonal mass vanishes."""
    n = len(a)
    a = a.copy()
    v = np.eye(n)
    threshold = JACOBI_TOLERANCE * np.linalg.norm(a)
    off = _off_diagonal_norm(a)
    for sweep in range(JACOBI_MAX_SWEEPS):
        if off <= threshold:
            logger.debug("Jacobi converged after %d sweeps (dim %d)", sweep, n)
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0

                vec_p, vec_q = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
        off = _off_diagonal_norm(a)
    if off <= threshold:
        return np.diag(a).copy(), v
    raise NumericError(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps", residual=off)


def eigh_symmetric(
    matrix: npt.ArrayLike, method: EighMethod = "auto"
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """Eigenvalues (descending) and orthonormal eigenvector columns of a symmetric matrix."""
    m = _as_symmetric(matrix)
    if method == "auto":
        method = "jacobi" if len(m) <= JACOBI_MAX_DIM else "lapack"
    if method == "jacobi":
        eigenvalues, eigenvectors = _jacobi(m)
    elif method == "lapack":
        eigenvalues, eigenvectors = np.linalg.eigh(m)
    else:
        raise ValueError(f"Unknown eigensolver '{method}'")
    order = np.argsort(-eigenvalues, kind="stable")
    return eigenvalues[order], eigenvectors[:, order]


def sqrtm_psd(matrix: npt.ArrayLike, method: EighMethod = "auto") -> npt.NDArray[np.float64]:
    """Symmetric square root of a positive semi-definite matrix."""
    m = _as_symmetric(matrix)
    eigenvalues, eigenvectors = eigh_symmetric(m, method)
    scale = float(np.linalg.norm(m))
    if len(eigenvalues) and eigenvalues[-1] < -PSD_TOLERANCE * scale:
        raise NotPSDError(f"Matrix has eigenvalue {eigenvalues[-1]:.3e}", residual=float(eigenvalues[-1]))
    root = (eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))) @ eigenvectors.T
    return (root + root.T) / 2


def trace_sqrt_product(c1: npt.ArrayLike, c2: npt.ArrayLike, method: EighMethod = "auto") -> float:
    """tr((C2 C1)^(1/2)) via the symmetric similar matrix S C2 S with S = C1^(1/2)."""
    s = sqrtm_psd(c1, method)
    inner = s @ _as_symmetric(c2) @ s
    eigenvalues, _ = eigh_symmetric((inner + inner.T) / 2, method)
    scale = float(np.linalg.norm(inner))
    if len(eigenvalues) and eigenvalues[-1] < -PSD_TOLERANCE * max(scale, 1.0):
        raise NotPSDError(f"Covariance product has eigenvalue {eigenvalues[-1]:.3e}")
    # drop round-off eigenvalues of rank-deficient products
    floor = RANK_TOLERANCE * eigenvalues[0] if len(eigenvalues) else 0.0
    eigenvalues = np.where(eigenvalues > floor, eigenvalues, 0.0)
    return float(np.sum(np.sqrt(eigenvalues)))


def mean_covariance(samples: npt.ArrayLike) -> FrechetStats:
    """Sample mean and unbiased (1/(N-1)) covariance of an N x d sample matrix."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2:
        raise InsufficientDataError(f"Samples must be an N x d matrix, got shape {x.shape}")
    n = len(x)
    if n < 2:
        raise InsufficientDataError(f"Need at least 2 samples for a covariance, got {n}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    return FrechetStats(mean, (cov + cov.T) / 2, n)
