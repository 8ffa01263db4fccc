"""PCA over flattened images and the min-max scaler that maps PCA scores to [0, 1]."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from analysis.linalg import eigh_symmetric
from handling_errors import ConfigurationError, InsufficientDataError

logger = logging.getLogger(__name__)

DEGENERATE_WIDTH = 1e-9


@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: npt.NDArray[np.float64]
    components: npt.NDArray[np.float64]  # k x d, orthonormal rows

    @property
    def k(self) -> int:
        return self.components.shape[0]

    @property
    def dim(self) -> int:
        return self.components.shape[1]


@dataclass(frozen=True, eq=False)
class MinMaxScaler:
    lo: npt.NDArray[np.float64]
    hi: npt.NDArray[np.float64]

    @property
    def span(self) -> npt.NDArray[np.float64]:
        return self.hi - self.lo


def _fix_signs(components: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    """Flip each row so its largest-magnitude entry is positive."""
    pivots = components[np.arange(len(components)), np.argmax(np.abs(components), axis=1)]
    return components * np.where(pivots < 0, -1.0, 1.0)[:, None]


def pca_fit(images: npt.ArrayLike, k: int) -> PcaModel:
    """Top-k principal directions of ``images`` (N x d).

    With fewer samples than pixels the N x N Gram matrix of the centered data
    is decomposed and its eigenvectors are lifted back to pixel space;
    otherwise the d x d covariance is decomposed directly.
    """
    x = np.asarray(images, dtype=np.float64)
    n, d = x.shape
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")
    if n <= k:
        raise InsufficientDataError(f"PCA with k={k} needs more than {k} images, got {n}")
    if k > d:
        raise ConfigurationError(f"k={k} exceeds the data dimension {d}")

    mean = x.mean(axis=0)
    centered = x - mean
    if n < d:
        gram = centered @ centered.T
        eigenvalues, eigenvectors = eigh_symmetric(gram)
        lifted = centered.T @ eigenvectors[:, :k]
        norms = np.linalg.norm(lifted, axis=0)
        # rank-deficient data: leftover directions get a zero-variance filler
        norms[norms == 0.0] = 1.0
        components = (lifted / norms).T
        components = _orthonormalize(components)
    else:
        cov = centered.T @ centered / (n - 1)
        eigenvalues, eigenvectors = eigh_symmetric(cov)
        components = eigenvectors[:, :k].T
    logger.debug("PCA fit on %d x %d, leading eigenvalues %s", n, d, eigenvalues[:k])
    return PcaModel(mean, _fix_signs(components))


def _orthonormalize(rows: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    """Gram-Schmidt via QR, keeping the direction (and sign) of each row."""
    q, r = np.linalg.qr(rows.T)
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    return (q * signs).T


def pca_transform(model: PcaModel, image: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Scores of one image (or of each row of a batch)."""
    x = np.asarray(image, dtype=np.float64)
    if x.shape[-1] != model.dim:
        raise ConfigurationError(f"Image length {x.shape[-1]} does not match PCA dimension {model.dim}")
    return (x - model.mean) @ model.components.T


def pca_inverse(model: PcaModel, scores: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Reconstruct pixels from scores, clamped to [0, 1]."""
    s = np.asarray(scores, dtype=np.float64)
    if s.shape[-1] != model.k:
        raise ConfigurationError(f"Expected {model.k} scores, got {s.shape[-1]}")
    return np.clip(model.mean + s @ model.components, 0.0, 1.0)


def reconstruction_error(model: PcaModel, images: npt.ArrayLike) -> float:
    """Frobenius norm of the unclamped projection residual."""
    x = np.asarray(images, dtype=np.float64)
    projected = model.mean + pca_transform(model, x) @ model.components
    return float(np.linalg.norm(x - projected))


def minmax_fit(scores_matrix: npt.ArrayLike) -> MinMaxScaler:
    s = np.asarray(scores_matrix, dtype=np.float64)
    if s.ndim != 2 or len(s) < 2:
        raise InsufficientDataError(f"Min-max fit needs at least 2 score rows, got shape {s.shape}")
    lo = s.min(axis=0)
    hi = s.max(axis=0)
    degenerate = ~(hi > lo)
    if np.any(degenerate):
        columns = np.flatnonzero(degenerate).tolist()
        warnings.warn(f"Constant score columns {columns}; widening their range by {DEGENERATE_WIDTH}", UserWarning)
        hi = np.where(degenerate, lo + DEGENERATE_WIDTH, hi)
    return MinMaxScaler(lo, hi)


def minmax_apply(scaler: MinMaxScaler, scores: npt.ArrayLike) -> npt.NDArray[np.float64]:
    s = np.asarray(scores, dtype=np.float64)
    if s.shape[-1] != len(scaler.lo):
        raise ConfigurationError(f"Expected {len(scaler.lo)} scores, got {s.shape[-1]}")
    return np.clip((s - scaler.lo) / scaler.span, 0.0, 1.0)


def minmax_invert(scaler: MinMaxScaler, unit_scores: npt.ArrayLike) -> npt.NDArray[np.float64]:
    u = np.asarray(unit_scores, dtype=np.float64)
    if u.shape[-1] != len(scaler.lo):
        raise ConfigurationError(f"Expected {len(scaler.lo)} scores, got {u.shape[-1]}")
    return scaler.lo + u * scaler.span
