import numpy as np
import pytest

from handling_errors import ConfigurationError, InversionError
from qsim.circuit import (
    Bank,
    CircuitSegment,
    Cx,
    ParameterBank,
    RxConst,
    RxParam,
    StatePrep,
    angle_embedding,
    check_pipeline,
    entangler_block,
    injection_block,
    injection_from_angles,
    invert,
    run,
)
from qsim.statevector import QuantumState, expectation_z, zero_state


def banks_for(n_params, rng):
    return {
        Bank.GENERATOR: ParameterBank(Bank.GENERATOR, rng.uniform(0, np.pi, n_params)),
        Bank.DISCRIMINATOR: ParameterBank(Bank.DISCRIMINATOR, rng.uniform(0, np.pi, n_params)),
    }


class TestEntanglerBlock:
    def test_layout(self):
        block = entangler_block(5, 3, Bank.GENERATOR)
        assert len(block.gates) == 3 * (5 + 5)
        assert [ref.index for ref in block.param_refs()] == list(range(15))
        assert block.n_params(Bank.GENERATOR) == 15
        assert block.n_params(Bank.DISCRIMINATOR) == 0
        ring = [gate for gate in block.gates[5:10]]
        assert ring == [Cx(0, 1), Cx(1, 2), Cx(2, 3), Cx(3, 4), Cx(4, 0)]

    def test_single_qubit_has_no_ring(self):
        block = entangler_block(1, 2, Bank.DISCRIMINATOR)
        assert all(isinstance(gate, RxParam) for gate in block.gates)

    def test_rejects_empty_shapes(self):
        with pytest.raises(ConfigurationError):
            entangler_block(3, 0, Bank.GENERATOR)


class TestInjection:
    def test_inverse_restores_random_states(self, rng):
        injection = injection_block(5, 2, rng)
        amps = rng.normal(size=(100, 32)) + 1j * rng.normal(size=(100, 32))
        state = QuantumState(5, amps / np.linalg.norm(amps, axis=-1, keepdims=True))
        restored = run([injection, invert(injection)], {}, state)
        np.testing.assert_allclose(restored.amplitudes, state.amplitudes, atol=1e-10)

    def test_angles_are_recorded(self, rng):
        injection = injection_block(3, 2, rng)
        angles = injection.constant_angles()
        assert len(angles) == 6
        assert all(0.0 <= a <= np.pi for a in angles)
        rebuilt = injection_from_angles(3, angles)
        assert rebuilt.constant_angles() == angles

    def test_parameterized_segment_inverts_through_sign(self, rng):
        block = entangler_block(3, 2, Bank.GENERATOR)
        banks = banks_for(6, rng)
        there = run([block], banks, zero_state(3))
        back = run([invert(block)], banks, there)
        np.testing.assert_allclose(back.amplitudes, zero_state(3).amplitudes, atol=1e-12)

    def test_state_preparation_cannot_be_inverted(self):
        segment = CircuitSegment(1, (StatePrep(np.array([1.0, 0.0], dtype=complex)),))
        with pytest.raises(InversionError):
            invert(segment)


class TestPipeline:
    def test_width_mismatch(self):
        with pytest.raises(ConfigurationError):
            check_pipeline([entangler_block(3, 1, Bank.GENERATOR), entangler_block(4, 1, Bank.DISCRIMINATOR)])

    def test_state_prep_must_come_first(self):
        prep = CircuitSegment(1, (StatePrep(np.array([0.0, 1.0], dtype=complex)),))
        with pytest.raises(ConfigurationError):
            check_pipeline([CircuitSegment(1, (RxConst(0, 0.1),)), prep])

    def test_unresolved_parameter(self, rng):
        block = entangler_block(2, 2, Bank.GENERATOR)
        short = {Bank.GENERATOR: ParameterBank(Bank.GENERATOR, np.zeros(3))}
        with pytest.raises(ConfigurationError):
            run([block], short, zero_state(2))

    def test_batched_embedding_runs_whole_batch(self, rng):
        noise = rng.uniform(0, 2 * np.pi, (6, 3))
        state = run([angle_embedding(noise, 3)], {}, zero_state(3))
        assert state.batch_shape == (6,)
        np.testing.assert_allclose(expectation_z(state, 2), np.cos(noise[:, 2]), atol=1e-12)

    def test_embedding_width_must_match(self):
        with pytest.raises(ConfigurationError):
            angle_embedding([0.1, 0.2], 3)

    def test_state_prep_then_block(self):
        prep = CircuitSegment(2, (StatePrep(np.array([0.0, 1.0], dtype=complex)),))
        state = run([prep], {}, zero_state(2))
        # length-2 vector sits on qubit 0
        assert expectation_z(state, 0) == pytest.approx(-1.0)
        assert expectation_z(state, 1) == pytest.approx(1.0)


def test_parameter_bank_is_read_only():
    bank = ParameterBank(Bank.GENERATOR, [0.1, 0.2])
    with pytest.raises(ValueError):
        bank.values[0] = 1.0
    assert bank.with_value(0, 1.0).values[0] == 1.0
    assert bank.values[0] == 0.1
    with pytest.raises(ConfigurationError):
        ParameterBank(Bank.GENERATOR, [np.nan])
