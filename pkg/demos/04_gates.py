# Gates on the device
#
# Compile CNOT and a Bell-state preparation for the device at f = 0.49,
# then check them with both evolution methods.

import numpy as np

from fluxsim import (
    CircuitParams,
    GateSpec,
    assemble_from_circuit,
    basis_state,
    compile_bell,
    compile_cnot,
    compile_rotation,
    gate_unitary,
    initialize,
    rotating_frame,
    target_unitary,
)
from fluxsim.dynamics import fidelity_report, populations, reduced_purity
from fluxsim.gates import CNOT, cnot_up_to_block_phase

params = CircuitParams.uniform(200.0, flux_override=(0.5, 0.5))
model = assemble_from_circuit(params, 0.49)
amp = model.reference_amplitude


def rotated(sched, method):
    u = gate_unitary(model, sched.pulses, method)
    return rotating_frame(u, model, sched.total_time)


# %% CNOT: one pi pulse on 10 <-> 11
cnot = compile_cnot(model, amp)
print(cnot.to_json())
for method in ("rwa", "full"):
    u = rotated(cnot, method)
    print(method, fidelity_report(u, CNOT))
    print("  up to block phase:", fidelity_report(u, cnot_up_to_block_phase(cnot.block_phase))["gate_fidelity"])
print(np.round(rotated(cnot, "rwa"), 3))

# %% single-qubit rotations
for q in (1, 2):
    g = GateSpec("rx", q, np.pi)
    s = compile_rotation(model, g, amp)
    print(f"Rx(pi) on qubit {q}: {s.total_time:.1f} ns,",
          fidelity_report(rotated(s, "rwa"), target_unitary(g)))

# %% Bell state from 00
bell = compile_bell(model, amp)
out = rotated(bell, "full") @ basis_state("00")
print("Bell populations", np.round(populations(out), 4), "purity", reduced_purity(out))

# %% preparing 00 or 11 by detuning the frustration
for target in ("00", "11"):
    _, rep = initialize(CircuitParams.uniform(200.0), target)
    print(target, "is the ground state at f =", rep.f_detuned, rep.ground_labels)
