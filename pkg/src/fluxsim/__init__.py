"""Simulation of a two-loop, six-junction superconducting flux-qubit circuit.

Metastable states of the circuit potential, a four-level effective model of
the two qubits, driven dynamics and a small pulse-level gate compiler.
"""

from .circuit import (
    CircuitParams,
    ParameterError,
    expand_phases,
    gradient,
    hessian,
    load_circuit,
    mass_matrix,
    parse_circuit,
    potential,
)
from .dynamics import (
    PulseSpec,
    Trajectory,
    basis_state,
    evolve_full,
    evolve_rwa,
    fidelity_report,
    gate_unitary,
    rotating_frame,
)
from .effective import (
    EffectiveModel,
    OutsideWindowError,
    assemble_from_circuit,
    default_flux_amplitude,
    transition_element,
    transition_frequencies,
)
from .gates import (
    GateSpec,
    PulseSchedule,
    calibrate_rabi,
    compile_bell,
    compile_cnot,
    compile_gate,
    compile_rotation,
    estimate_operation_time,
    initialize,
    target_unitary,
)
from .minima import find_minima, four_state_window, sweep_spectra
from .report import device_report

__version__ = "0.1.0"
