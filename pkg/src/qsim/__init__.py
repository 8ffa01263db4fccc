"""Statevector simulator, circuit IR and gradients."""
from .statevector import (
    QuantumState,
    zero_state,
    prepare_amplitudes,
    apply_rx,
    apply_cx,
    marginal_probabilities,
    expectation_z,
)
from .circuit import (
    Bank,
    ParamRef,
    RxParam,
    RxConst,
    Cx,
    StatePrep,
    CircuitSegment,
    ParameterBank,
    entangler_block,
    injection_block,
    angle_embedding,
    invert,
    run,
)
from .grad import (
    ExpectationZ,
    MarginalProbs,
    GradientVector,
    param_shift_gradient,
    finite_diff_gradient,
)

__all__ = [
    'QuantumState', 'zero_state', 'prepare_amplitudes', 'apply_rx', 'apply_cx',
    'marginal_probabilities', 'expectation_z',
    'Bank', 'ParamRef', 'RxParam', 'RxConst', 'Cx', 'StatePrep', 'CircuitSegment',
    'ParameterBank', 'entangler_block', 'injection_block', 'angle_embedding', 'invert', 'run',
    'ExpectationZ', 'MarginalProbs', 'GradientVector', 'param_shift_gradient', 'finite_diff_gradient',
]
