"""Linear algebra, PCA pipeline and Fréchet scoring."""
from .linalg import FrechetStats, eigh_symmetric, sqrtm_psd, mean_covariance
from .pca import (
    PcaModel,
    MinMaxScaler,
    pca_fit,
    pca_transform,
    pca_inverse,
    minmax_fit,
    minmax_apply,
    minmax_invert,
)
from .metrics import Pixels, PcaScores, frechet_distance, extract_features, frechet_between

__all__ = [
    'FrechetStats', 'eigh_symmetric', 'sqrtm_psd', 'mean_covariance',
    'PcaModel', 'MinMaxScaler', 'pca_fit', 'pca_transform', 'pca_inverse',
    'minmax_fit', 'minmax_apply', 'minmax_invert',
    'Pixels', 'PcaScores', 'frechet_distance', 'extract_features', 'frechet_between',
]
