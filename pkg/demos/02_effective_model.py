# From the circuit to a four-level model
#
# Operate slightly off the symmetry point so the four allowed transitions
# (one bit flips) have distinct frequencies, then compute how a weak
# oscillating flux couples them.

import warnings

import numpy as np

from fluxsim import CircuitParams, assemble_from_circuit, transition_element, transition_frequencies
from fluxsim.effective import ALLOWED_PAIRS, SelectivityWarning, eigenstates
from fluxsim.units import ghz_to_ev

# loop fluxes pinned to half a flux quantum for the drive estimate
params = CircuitParams.uniform(200.0, flux_override=(0.5, 0.5))
model = assemble_from_circuit(params, 0.49)
amp = model.reference_amplitude  # 1 G over a 200 nm loop
print("eps (GHz):", np.round(model.epsilons, 3))
print("flux amplitude (Wb):", amp)

# drive matrix elements of each state, magnetic vs Josephson part
vm = ghz_to_ev(np.array(model.drive_magnetic) * amp)
vj = ghz_to_ev(np.array(model.drive_josephson) * amp)
print("V_M (eV):", vm)
print("V_J (eV):", vj)

# %% transition frequencies and elements
freqs = transition_frequencies(model)
for pair in ALLOWED_PAIRS:
    row = [transition_element(model, pair, mode, amp).value
           for mode in ("exact", "first-order", "literal-paper")]
    print(f"{pair[0]}-{pair[1]}: {freqs[pair]:8.3f} GHz  elements exact/first/literal "
          + " ".join(f"{v: .3e}" for v in row))

# the literal closed form keeps the full diagonal drive in the numerator, so
# it does not cancel a uniform V and comes out orders of magnitude larger

# %% dressed states
_, vecs = eigenstates(model)
print(np.round(vecs, 5))

# at f = 0.5 the four transitions pair up and cannot be addressed separately
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    assemble_from_circuit(params, 0.5)
print([str(w.message) for w in caught if issubclass(w.category, SelectivityWarning)])
