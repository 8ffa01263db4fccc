"""Classical <-> amplitude encodings used around the circuits.

Amplitude regularization reserves the last basis state of an n-qubit
embedding register: the 2**n - 1 features are written as f_i / 2**n and the
reserved amplitude r takes whatever is left of the unit norm, so a feature's
amplitude never depends on the other features.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from handling_errors import ConfigurationError, EncodingError, NumericError

PROBABILITY_SUM_TOLERANCE = 1e-6
NEGATIVE_PROBABILITY_TOLERANCE = 1e-9
Z_TOLERANCE = 1e-9

NoiseBatch = npt.NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class RegularizedVector:
    """Real amplitudes of length 2**n_embed; the last entry is the reserved amplitude."""

    amplitudes: npt.NDArray[np.float64]
    n_embed: int

    @property
    def reserved(self) -> npt.NDArray[np.float64] | float:
        r = self.amplitudes[..., -1]
        return float(r) if np.ndim(r) == 0 else r

    @property
    def features(self) -> npt.NDArray[np.float64]:
        return self.amplitudes[..., :-1]


def _check_embed(n_embed: int) -> int:
    if n_embed < 1:
        raise ConfigurationError(f"n_embed must be >= 1, got {n_embed}")
    return 2 ** n_embed


def regularize(features: npt.ArrayLike, n_embed: int) -> RegularizedVector:
    """Encode 2**n_embed - 1 features in [0, 1] (a vector or a batch of them)."""
    dim = _check_embed(n_embed)
    values = np.asarray(features, dtype=np.float64)
    if values.shape[-1:] != (dim - 1,):
        raise EncodingError(f"Expected {dim - 1} features for {n_embed} embedding qubits, got shape {values.shape}")
    if not np.all((values >= 0.0) & (values <= 1.0)):
        raise EncodingError("Regularized features must lie in [0, 1]; scale them first")

    scaled = values / dim
    reserved = np.sqrt(1.0 - np.sum(scaled ** 2, axis=-1))
    return RegularizedVector(np.concatenate((scaled, reserved[..., None]), axis=-1), n_embed)


def deregularize(probs: npt.ArrayLike, n_embed: int) -> npt.NDArray[np.float64]:
    """Invert ``regularize`` from measured probabilities; the reserved outcome is dropped."""
    dim = _check_embed(n_embed)
    values = np.asarray(probs, dtype=np.float64)
    if values.shape[-1:] != (dim,):
        raise EncodingError(f"Expected {dim} probabilities, got shape {values.shape}")
    if np.any(values < -NEGATIVE_PROBABILITY_TOLERANCE):
        raise NumericError(f"Negative probability {float(values.min()):.3e} in readout")
    total = values.sum(axis=-1)
    if np.any(np.abs(total - 1.0) > PROBABILITY_SUM_TOLERANCE):
        raise NumericError("Readout probabilities do not sum to one", residual=float(np.max(np.abs(total - 1.0))))

    amplitudes = np.sqrt(np.clip(values[..., :-1], 0.0, None))
    return np.clip(dim * amplitudes, 0.0, 1.0)


def plain_normalize(features: npt.ArrayLike, target_len: int) -> npt.NDArray[np.float64]:
    """Zero-pad to ``target_len`` and divide by the Euclidean norm."""
    if target_len < 1 or target_len & (target_len - 1):
        raise ConfigurationError(f"target_len must be a power of two, got {target_len}")
    values = np.asarray(features, dtype=np.float64)
    if values.shape[-1] > target_len:
        raise EncodingError(f"{values.shape[-1]} features do not fit in {target_len} amplitudes")
    padded = np.zeros(values.shape[:-1] + (target_len,))
    padded[..., : values.shape[-1]] = values
    norms = np.linalg.norm(padded, axis=-1, keepdims=True)
    if np.any(norms == 0.0):
        raise EncodingError("Cannot normalize an all-zero feature vector")
    return padded / norms


def sample_noise(batch_size: int, n_qubits: int, rng: np.random.Generator) -> NoiseBatch:
    """Generator input: i.i.d. uniform angles in [0, 2 pi), shape (batch_size, n_qubits)."""
    if batch_size < 1:
        raise ConfigurationError(f"batch_size must be >= 1, got {batch_size}")
    return rng.uniform(0.0, 2 * np.pi, size=(batch_size, n_qubits))


def z_to_unit(z: npt.ArrayLike) -> npt.NDArray[np.float64] | float:
    """Map a discriminator <Z> in [-1, 1] to a probability in [0, 1]."""
    values = np.asarray(z, dtype=np.float64)
    if np.any(np.abs(values) > 1.0 + Z_TOLERANCE):
        raise NumericError(f"<Z> outside [-1, 1]: {float(np.max(np.abs(values)))}")
    unit = np.clip((values + 1.0) / 2.0, 0.0, 1.0)
    return float(unit) if unit.ndim == 0 else unit
