"""Dense statevector simulation for the small registers used by OrganiQ.

Basis convention: qubit 0 is the most significant bit of the basis index,
so the "first k qubits" of a register are the k leading bits and their
marginal is a contiguous reshape.

Every operation accepts states with leading batch axes
(``amplitudes.shape == batch_shape + (2**n_qubits,)``) so a whole minibatch
travels through a circuit in one numpy call per gate.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import numpy.typing as npt

from handling_errors import ConfigurationError, EncodingError

MAX_QUBITS = 12
NORM_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Pure state of ``n_qubits`` qubits (optionally a batch of them)."""

    n_qubits: int
    amplitudes: npt.NDArray[np.complex128]

    def __post_init__(self):
        if self.amplitudes.shape[-1:] != (2 ** self.n_qubits,):
            raise ConfigurationError(
                f"State of {self.n_qubits} qubits needs {2 ** self.n_qubits} amplitudes, "
                f"got trailing axis {self.amplitudes.shape[-1:]}"
            )

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.amplitudes.shape[:-1]

    def probabilities(self) -> npt.NDArray[np.float64]:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> npt.NDArray[np.float64] | float:
        norms = np.linalg.norm(self.amplitudes, axis=-1)
        return float(norms) if norms.ndim == 0 else norms


def _check_n_qubits(n_qubits: int) -> None:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")


def _check_qubit(state: QuantumState, qubit: int, what: str = "qubit") -> None:
    if not 0 <= qubit < state.n_qubits:
        raise ConfigurationError(f"{what} {qubit} out of range for {state.n_qubits} qubits")


def zero_state(n_qubits: int, batch_shape: tuple[int, ...] = ()) -> QuantumState:
    """|0...0>, repeated over ``batch_shape``."""
    _check_n_qubits(n_qubits)
    amplitudes = np.zeros(batch_shape + (2 ** n_qubits,), dtype=np.complex128)
    amplitudes[..., 0] = 1.0
    return QuantumState(n_qubits, amplitudes)


def prepare_amplitudes(amps: npt.ArrayLike, n_qubits: int | None = None) -> QuantumState:
    """Load a unit-norm amplitude vector (or a batch of them) into a register.

    A vector of length ``2**k`` shorter than the ``n_qubits`` register lives
    on the first k qubits with the trailing qubits in |0>, i.e. amplitude
    ``a`` lands on basis index ``a * 2**(n_qubits - k)``.
    """
    values = np.asarray(amps, dtype=np.complex128)
    length = values.shape[-1] if values.ndim else 0
    if length < 2 or length & (length - 1):
        raise EncodingError(f"Amplitude vector length must be a power of two >= 2, got {length}")
    k = length.bit_length() - 1
    n_qubits = k if n_qubits is None else n_qubits
    _check_n_qubits(n_qubits)
    if k > n_qubits:
        raise EncodingError(f"{length} amplitudes do not fit on {n_qubits} qubits")

    norms = np.linalg.norm(values, axis=-1)
    if np.any(np.abs(norms - 1.0) > NORM_TOLERANCE):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise EncodingError(f"Amplitudes must have unit norm (max deviation {worst:.3e})")

    if k == n_qubits:
        return QuantumState(n_qubits, values.copy())
    amplitudes = np.zeros(values.shape[:-1] + (2 ** n_qubits,), dtype=np.complex128)
    amplitudes[..., :: 2 ** (n_qubits - k)] = values
    return QuantumState(n_qubits, amplitudes)


def apply_rx(state: QuantumState, qubit: int, angle: float | npt.ArrayLike) -> QuantumState:
    """RX(angle) on ``qubit``; ``angle`` may carry one value per batch entry."""
    _check_qubit(state, qubit)
    n = state.n_qubits
    theta = np.asarray(angle, dtype=np.float64)
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    if theta.ndim:
        c = c[..., None, None]
        s = s[..., None, None]

    psi = state.amplitudes.reshape(state.batch_shape + (2 ** qubit, 2, 2 ** (n - qubit - 1)))
    a0 = psi[..., 0, :]
    a1 = psi[..., 1, :]
    out = np.stack((c * a0 - 1j * s * a1, c * a1 - 1j * s * a0), axis=-2)
    # a batched angle on an unbatched state broadcasts it to the angle batch
    return QuantumState(n, out.reshape(out.shape[:-3] + (state.dim,)))


@lru_cache(maxsize=None)
def _cx_permutation(n_qubits: int, control: int, target: int) -> npt.NDArray[np.intp]:
    indices = np.arange(2 ** n_qubits)
    control_mask = 1 << (n_qubits - 1 - control)
    target_mask = 1 << (n_qubits - 1 - target)
    return np.where(indices & control_mask, indices ^ target_mask, indices)


def apply_cx(state: QuantumState, control: int, target: int) -> QuantumState:
    """CNOT: flip ``target`` on basis states where ``control`` is 1."""
    _check_qubit(state, control, "control")
    _check_qubit(state, target, "target")
    if control == target:
        raise ConfigurationError(f"CX control and target must differ, both are {control}")
    permutation = _cx_permutation(state.n_qubits, control, target)
    return QuantumState(state.n_qubits, state.amplitudes[..., permutation])


def marginal_probabilities(state: QuantumState, first_k: int) -> npt.NDArray[np.float64]:
    """Outcome probabilities of the first ``first_k`` qubits (length ``2**first_k``)."""
    if not 1 <= first_k <= state.n_qubits:
        raise ConfigurationError(f"first_k must be in [1, {state.n_qubits}], got {first_k}")
    probs = state.probabilities()
    grouped = probs.reshape(state.batch_shape + (2 ** first_k, 2 ** (state.n_qubits - first_k)))
    return grouped.sum(axis=-1)


def expectation_z(state: QuantumState, qubit: int) -> npt.NDArray[np.float64] | float:
    """<Z> on ``qubit``: P(bit = 0) - P(bit = 1)."""
    _check_qubit(state, qubit)
    n = state.n_qubits
    probs = state.probabilities().reshape(state.batch_shape + (2 ** qubit, 2, 2 ** (n - qubit - 1)))
    per_bit = probs.sum(axis=(-3, -1))
    value = per_bit[..., 0] - per_bit[..., 1]
    return float(value) if value.ndim == 0 else value
