"""Parameterized circuit segments, their construction helpers, inversion and execution."""
from __future__ import annotations

import enum
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from handling_errors import ConfigurationError, InversionError
from qsim.statevector import QuantumState, apply_cx, apply_rx, prepare_amplitudes


# Rotations of the static injection block are drawn from [0, INJECTION_MAX_ANGLE]
INJECTION_MAX_ANGLE = np.pi
INJECTION_LAYERS = 2


class Bank(enum.Enum):
    GENERATOR = "generator"
    DISCRIMINATOR = "discriminator"
    INJECTION = "injection"


@dataclass(frozen=True)
class ParamRef:
    bank: Bank
    index: int


@dataclass(frozen=True)
class RxParam:
    """Tunable RX whose angle is ``sign * banks[ref.bank].values[ref.index]``."""

    qubit: int
    ref: ParamRef
    sign: float = 1.0


@dataclass(frozen=True, eq=False)
class RxConst:
    """Fixed RX; ``angle`` is a float or one angle per batch entry."""

    qubit: int
    angle: float | npt.NDArray[np.float64]


@dataclass(frozen=True)
class Cx:
    control: int
    target: int


@dataclass(frozen=True, eq=False)
class StatePrep:
    """Replaces the running state by ``amplitudes`` (first gate of a pipeline only)."""

    amplitudes: npt.NDArray[np.complex128]


Gate = RxParam | RxConst | Cx | StatePrep


@dataclass(frozen=True, eq=False)
class CircuitSegment:
    n_qubits: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def param_refs(self) -> list[ParamRef]:
        return [gate.ref for gate in self.gates if isinstance(gate, RxParam)]

    def n_params(self, bank: Bank | None = None) -> int:
        return sum(1 for ref in self.param_refs() if bank is None or ref.bank is bank)

    def constant_angles(self) -> list[float]:
        return [float(gate.angle) for gate in self.gates if isinstance(gate, RxConst)]


@dataclass(frozen=True, eq=False)
class ParameterBank:
    bank: Bank
    values: npt.NDArray[np.float64]

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ConfigurationError(f"{self.bank.value} bank must be a vector, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ConfigurationError(f"{self.bank.value} bank holds non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def with_value(self, index: int, value: float) -> ParameterBank:
        values = self.values.copy()
        values[index] = value
        return ParameterBank(self.bank, values)


Banks = Mapping[Bank, ParameterBank]


def as_banks(banks: Banks | Iterable[ParameterBank]) -> dict[Bank, ParameterBank]:
    """Index a collection of banks by their name."""
    if isinstance(banks, Mapping):
        return dict(banks)
    return {bank.bank: bank for bank in banks}


def _ring(n_qubits: int) -> list[Cx]:
    if n_qubits == 1:
        return []
    return [Cx(q, (q + 1) % n_qubits) for q in range(n_qubits)]


def _check_layers(n_qubits: int, n_layers: int) -> None:
    if n_qubits < 1:
        raise ConfigurationError(f"n_qubits must be >= 1, got {n_qubits}")
    if n_layers < 1:
        raise ConfigurationError(f"n_layers must be >= 1, got {n_layers}")


def entangler_block(n_qubits: int, n_layers: int, bank: Bank) -> CircuitSegment:
    """Basic entangler layers: one tunable RX per qubit, then a CX ring."""
    _check_layers(n_qubits, n_layers)
    gates: list[Gate] = []
    for layer in range(n_layers):
        gates.extend(RxParam(q, ParamRef(bank, layer * n_qubits + q)) for q in range(n_qubits))
        gates.extend(_ring(n_qubits))
    return CircuitSegment(n_qubits, tuple(gates))


def injection_block(n_qubits: int, n_layers: int, rng: np.random.Generator) -> CircuitSegment:
    """Static entangler with angles drawn uniformly from [0, pi], stored explicitly."""
    _check_layers(n_qubits, n_layers)
    angles = rng.uniform(0.0, INJECTION_MAX_ANGLE, size=(n_layers, n_qubits))
    return injection_from_angles(n_qubits, angles.ravel())


def injection_from_angles(n_qubits: int, angles: Sequence[float]) -> CircuitSegment:
    """Rebuild an injection block from its recorded angles (layer-major)."""
    angles = [float(a) for a in angles]
    if not angles or len(angles) % n_qubits:
        raise ConfigurationError(f"{len(angles)} injection angles do not fill layers of {n_qubits} qubits")
    gates: list[Gate] = []
    for layer in range(len(angles) // n_qubits):
        gates.extend(RxConst(q, angles[layer * n_qubits + q]) for q in range(n_qubits))
        gates.extend(_ring(n_qubits))
    return CircuitSegment(n_qubits, tuple(gates))


def angle_embedding(noise_row: npt.ArrayLike, n_qubits: int | None = None) -> CircuitSegment:
    """One RX per qubit with the noise value as angle.

    ``noise_row`` may also be a (batch, n_qubits) matrix; gate q then carries
    column q so the segment embeds the whole batch.
    """
    noise = np.asarray(noise_row, dtype=np.float64)
    width = noise.shape[-1] if noise.ndim else 0
    if n_qubits is not None and width != n_qubits:
        raise ConfigurationError(f"Noise row of length {width} does not match {n_qubits} qubits")
    if width < 1:
        raise ConfigurationError("Noise row must not be empty")
    if not np.all(np.isfinite(noise)):
        raise ConfigurationError("Noise values must be finite")
    gates = tuple(RxConst(q, noise[..., q] if noise.ndim > 1 else float(noise[q])) for q in range(width))
    return CircuitSegment(width, gates)


def invert(segment: CircuitSegment) -> CircuitSegment:
    """Adjoint of a segment: reversed gate order with negated rotations."""
    inverted: list[Gate] = []
    for gate in reversed(segment.gates):
        match gate:
            case StatePrep():
                raise InversionError("Cannot invert a segment that prepares a state")
            case RxConst(qubit, angle):
                inverted.append(RxConst(qubit, -angle))
            case RxParam(qubit, ref, sign):
                inverted.append(RxParam(qubit, ref, -sign))
            case Cx():
                inverted.append(gate)
    return CircuitSegment(segment.n_qubits, tuple(inverted))


def check_pipeline(pipeline: Sequence[CircuitSegment], banks: Banks | None = None) -> int:
    """Validate qubit counts, StatePrep placement and (optionally) ParamRef resolution.

    Returns the common qubit count (0 for an empty pipeline).
    """
    widths = {segment.n_qubits for segment in pipeline}
    if len(widths) > 1:
        raise ConfigurationError(f"Pipeline segments disagree on qubit count: {sorted(widths)}")
    for s_idx, segment in enumerate(pipeline):
        for g_idx, gate in enumerate(segment.gates):
            if isinstance(gate, StatePrep) and (s_idx, g_idx) != (0, 0):
                raise ConfigurationError("StatePrep may only be the first gate of the first segment")
            if banks is not None and isinstance(gate, RxParam):
                bank = banks.get(gate.ref.bank)
                if bank is None or not 0 <= gate.ref.index < len(bank):
                    raise ConfigurationError(f"Unresolved parameter {gate.ref.bank.value}[{gate.ref.index}]")
    return widths.pop() if widths else 0


def apply_gate(state: QuantumState, gate: Gate, banks: Banks) -> QuantumState:
    match gate:
        case RxParam(qubit, ref, sign):
            return apply_rx(state, qubit, sign * banks[ref.bank].values[ref.index])
        case RxConst(qubit, angle):
            return apply_rx(state, qubit, angle)
        case Cx(control, target):
            return apply_cx(state, control, target)
        case StatePrep(amplitudes):
            return prepare_amplitudes(amplitudes, state.n_qubits)
    raise ConfigurationError(f"Unknown gate {gate!r}")


def run_gates(gates: Iterable[Gate], banks: Banks, state: QuantumState) -> QuantumState:
    for gate in gates:
        state = apply_gate(state, gate, banks)
    return state


def run(
    pipeline: Sequence[CircuitSegment],
    banks: Banks | Iterable[ParameterBank],
    initial: QuantumState,
) -> QuantumState:
    """Execute the segments in order on ``initial``."""
    banks = as_banks(banks)
    width = check_pipeline(pipeline, banks)
    if width and width != initial.n_qubits:
        raise ConfigurationError(f"Pipeline acts on {width} qubits, initial state has {initial.n_qubits}")
    return run_gates((gate for segment in pipeline for gate in segment.gates), banks, initial)
