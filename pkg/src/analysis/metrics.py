"""Fréchet distance between Gaussian fits of image features.

Features are raw pixels or PCA scores; values are therefore not on the
scale of Inception-based FID and only compare methods with each other.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from analysis.linalg import EighMethod, FrechetStats, mean_covariance, trace_sqrt_product
from analysis.pca import PcaModel, pca_transform
from handling_errors import ConfigurationError, InsufficientDataError, NumericError

logger = logging.getLogger(__name__)

# Negative distances within this fraction of tr(C_a) + tr(C_b) are round-off and clamp to 0
NEGATIVE_TOLERANCE = 1e-8


@dataclass(frozen=True)
class Pixels:
    """Identity features (d = 784)."""


@dataclass(frozen=True, eq=False)
class PcaScores:
    model: PcaModel


FeatureMode = Pixels | PcaScores


def frechet_distance(a: FrechetStats, b: FrechetStats, method: EighMethod = "auto") -> float:
    """||mu_a - mu_b||^2 + tr(C_a + C_b - 2 (C_b C_a)^(1/2))."""
    if a.dim != b.dim:
        raise ConfigurationError(f"Feature dimensions differ: {a.dim} vs {b.dim}")
    mean_term = float(np.sum((a.mean - b.mean) ** 2))
    trace_term = float(np.trace(a.cov) + np.trace(b.cov)) - 2.0 * trace_sqrt_product(a.cov, b.cov, method)
    distance = mean_term + trace_term
    if distance >= 0.0:
        return distance
    scale = max(1.0, float(np.trace(a.cov) + np.trace(b.cov)))
    if distance < -NEGATIVE_TOLERANCE * scale:
        raise NumericError(f"Fréchet distance is negative beyond round-off: {distance:.3e}", residual=distance)
    logger.debug("Fréchet distance %.3e clamped to 0", distance)
    return 0.0


def extract_features(images: npt.ArrayLike, mode: FeatureMode = Pixels()) -> npt.NDArray[np.float64]:
    x = np.asarray(images, dtype=np.float64)
    if x.ndim != 2 or len(x) < 2:
        raise InsufficientDataError(f"Feature extraction needs an N x 784 matrix with N >= 2, got {x.shape}")
    match mode:
        case Pixels():
            return x
        case PcaScores(model):
            return pca_transform(model, x)
    raise ConfigurationError(f"Unknown feature mode {mode!r}")


def frechet_between(images_a: npt.ArrayLike, images_b: npt.ArrayLike, mode: FeatureMode = Pixels()) -> float:
    """Fréchet distance between two image sets under one feature extractor."""
    stats_a = mean_covariance(extract_features(images_a, mode))
    stats_b = mean_covariance(extract_features(images_b, mode))
    return frechet_distance(stats_a, stats_b)
