# Which rotating-wave rate is right?
#
# A resonant drive of strength V rotates a two-level pair. Two closed forms
# are in circulation, differing by a factor 2 in the rotation angle. The
# full time-dependent integration decides.

import numpy as np

from fluxsim import EffectiveModel, PulseSpec, basis_state, evolve_full, evolve_rwa
from fluxsim.dynamics import populations
from fluxsim.effective import transition_element, transition_frequencies

# only 00 <-> 01 tunnels, so that pair is isolated
model = EffectiveModel((0.0, 10.0, 13.0, 25.0), (0.3, 0.0, 0.0, 0.0), (0.0, 2.0, 0.5, 1.0))
pair = ("00", "01")
w = transition_element(model, pair).value
nu = transition_frequencies(model)[pair]
print(f"element {w:.4f} GHz at {nu:.4f} GHz, ratio {abs(w) / nu:.1e}")

pulse = PulseSpec(nu, 0.0, 1.0, 1.0 / abs(w), pair)
traj = evolve_full(basis_state("00"), model, pulse, n_samples=201)
print("norm drift:", traj.norm_drift)

for conv in ("standard-rwa", "paper"):
    p_rwa = np.array([
        populations(evolve_rwa(basis_state("00"), model, PulseSpec(nu, 0.0, 1.0, t, pair), 0.0, conv))[1]
        for t in traj.times
    ])
    err = np.max(np.abs(p_rwa - traj.populations[:, 1]))
    print(f"{conv:13s} max population error {err:.3f}")

# populations at a few times, full integration
for k in range(0, 201, 25):
    print(f"t = {traj.times[k]:7.3f} ns   P(01) = {traj.populations[k, 1]:.4f}")
