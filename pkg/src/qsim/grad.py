"""Parameter-shift gradients of circuit readouts, with a finite-difference oracle.

Only the raw readout is differentiated here; the chain rule through
output normalization and losses belongs to the trainer.
"""
from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TypeVar

import numpy as np
import numpy.typing as npt

from handling_errors import ConfigurationError, UnsupportedCircuitError
from qsim.circuit import (
    Bank,
    Banks,
    CircuitSegment,
    Gate,
    ParameterBank,
    RxParam,
    as_banks,
    check_pipeline,
    run_gates,
)
from qsim.statevector import QuantumState, expectation_z, marginal_probabilities, zero_state


# Valid for RX generators (eigenvalue gap 1)
SHIFT = np.pi / 2

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class ExpectationZ:
    qubit: int

    def evaluate(self, state: QuantumState) -> npt.NDArray[np.float64]:
        return np.asarray(expectation_z(state, self.qubit))


@dataclass(frozen=True)
class MarginalProbs:
    first_k: int

    def evaluate(self, state: QuantumState) -> npt.NDArray[np.float64]:
        return marginal_probabilities(state, self.first_k)


ReadoutSpec = ExpectationZ | MarginalProbs


@dataclass(frozen=True, eq=False)
class GradientVector:
    """d readout / d theta; the parameter axis is last.

    Shape is ``batch_shape + readout_shape + (len(bank),)``: a plain vector
    for a single-state <Z> readout, a (2**k, P) matrix for marginals.
    """

    bank: Bank
    values: npt.NDArray[np.float64]


def ordered_map(fn: Callable[[T], R], items: Sequence[T], max_workers: int | None = None) -> list[R]:
    """Map ``fn`` over ``items``, possibly on a thread pool, keeping input order."""
    if not max_workers or max_workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(fn, items))


def _flatten(pipeline: Sequence[CircuitSegment]) -> list[Gate]:
    return [gate for segment in pipeline for gate in segment.gates]


def _check_active(active_bank: Bank) -> None:
    if active_bank is Bank.INJECTION:
        raise ConfigurationError("The injection bank is static and has no gradient")


def _check_unique_refs(gates: Iterable[Gate]) -> None:
    seen = set()
    for gate in gates:
        if isinstance(gate, RxParam):
            key = (gate.ref.bank, gate.ref.index)
            if key in seen:
                raise UnsupportedCircuitError(
                    f"Parameter {gate.ref.bank.value}[{gate.ref.index}] is used by more than one gate; "
                    "the shift rule needs each parameter on exactly one RX"
                )
            seen.add(key)


def _initial_state(initial: QuantumState | None, n_qubits: int) -> QuantumState:
    if initial is not None:
        return initial
    return zero_state(n_qubits)


def param_shift_gradient(
    pipeline: Sequence[CircuitSegment],
    banks: Banks | Iterable[ParameterBank],
    active_bank: Bank,
    readout: ReadoutSpec,
    initial: QuantumState | None = None,
    max_workers: int | None = None,
) -> GradientVector:
    """Exact gradient of ``readout`` with respect to every parameter of ``active_bank``.

    g_j = (f(theta_j + pi/2) - f(theta_j - pi/2)) / 2. Gates before the first
    active gate are simulated once and shared by all shifted evaluations.
    """
    _check_active(active_bank)
    banks = as_banks(banks)
    n_qubits = check_pipeline(pipeline, banks)
    gates = _flatten(pipeline)
    _check_unique_refs(gates)
    bank = banks[active_bank]

    used = {gate.ref.index for gate in gates if isinstance(gate, RxParam) and gate.ref.bank is active_bank}
    first_active = next(
        (i for i, gate in enumerate(gates) if isinstance(gate, RxParam) and gate.ref.bank is active_bank),
        len(gates),
    )
    prefix = run_gates(gates[:first_active], banks, _initial_state(initial, n_qubits or 1))
    suffix = gates[first_active:]

    def evaluate(task: tuple[int, float]) -> npt.NDArray[np.float64]:
        index, delta = task
        shifted = {**banks, active_bank: bank.with_value(index, bank.values[index] + delta)}
        return readout.evaluate(run_gates(suffix, shifted, prefix))

    active = sorted(used)
    tasks = [(index, delta) for index in active for delta in (SHIFT, -SHIFT)]
    results = ordered_map(evaluate, tasks, max_workers)

    if results:
        base_shape = results[0].shape
    else:
        base_shape = readout.evaluate(run_gates(suffix, banks, prefix)).shape
    values = np.zeros(base_shape + (len(bank),))
    for position, index in enumerate(active):
        plus, minus = results[2 * position], results[2 * position + 1]
        values[..., index] = (plus - minus) / 2
    return GradientVector(active_bank, values)


def central_difference(
    fn: Callable[[npt.NDArray[np.float64]], npt.ArrayLike],
    theta: npt.ArrayLike,
    h: float = 1e-3,
    max_workers: int | None = None,
) -> npt.NDArray[np.float64]:
    """(fn(theta + h e_j) - fn(theta - h e_j)) / 2h for every j, parameter axis last."""
    if h <= 0:
        raise ConfigurationError(f"Finite-difference step must be positive, got {h}")
    theta = np.asarray(theta, dtype=np.float64)

    def evaluate(task: tuple[int, float]) -> npt.NDArray[np.float64]:
        index, delta = task
        shifted = theta.copy()
        shifted[index] += delta
        return np.asarray(fn(shifted), dtype=np.float64)

    tasks = [(index, delta) for index in range(len(theta)) for delta in (h, -h)]
    results = ordered_map(evaluate, tasks, max_workers)
    columns = [(results[2 * j] - results[2 * j + 1]) / (2 * h) for j in range(len(theta))]
    if not columns:
        return np.zeros((0,))
    return np.stack(columns, axis=-1)


def finite_diff_gradient(
    pipeline: Sequence[CircuitSegment],
    banks: Banks | Iterable[ParameterBank],
    active_bank: Bank,
    readout: ReadoutSpec,
    h: float = 1e-3,
    initial: QuantumState | None = None,
    max_workers: int | None = None,
) -> GradientVector:
    """Central-difference oracle with the same contract as ``param_shift_gradient``."""
    _check_active(active_bank)
    banks = as_banks(banks)
    n_qubits = check_pipeline(pipeline, banks)
    gates = _flatten(pipeline)
    start = _initial_state(initial, n_qubits or 1)

    def readout_at(values: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
        shifted = {**banks, active_bank: ParameterBank(active_bank, values)}
        return readout.evaluate(run_gates(gates, shifted, start))

    return GradientVector(active_bank, central_difference(readout_at, banks[active_bank].values, h, max_workers))
