# Metastable states of the two-loop circuit
#
# Six identical junctions (E_J = 200 GHz, E_C = e^2/C = 2 GHz), both loops
# frustrated by half a flux quantum. The reduced potential has four local
# minima there, one per combination of loop current directions.

import numpy as np

from fluxsim import CircuitParams, find_minima, four_state_window, sweep_spectra

params = CircuitParams.uniform(200.0)

# %% minima at f = 0.5
res = find_minima(params, 0.5)
print("label   U_min(GHz)  eps(GHz)   junction phases")
for s in res:
    print(f"{s.label}   {s.energy:10.3f} {s.ground_energy:9.3f}   {np.round(s.full, 3)}")

# 00/11 and 01/10 are reflections of each other, so their energies agree
by = res.by_label()
print("U00 - U11 =", by["00"].energy - by["11"].energy)

# normal modes of the 00 well (GHz); the ground energy adds half their sum
print("modes 00:", np.round(by["00"].mode_frequencies, 3))

# %% how far can f move before a state disappears?
w = four_state_window(params)
print(f"four states for {w.f_lo:.3f} <= f <= {w.f_hi:.3f}  (f_c = {w.f_c:.3f})")

# a much stiffer shared junction squeezes the window to the single point f = 0.5
stiff = CircuitParams((200, 1000, 200, 200, 200, 200), (1.0,) * 6)
print("E2 = 5 E_J:", four_state_window(stiff))

# %% level diagram versus frustration, written as CSV for plotting elsewhere
table = sweep_spectra(params, 0.3, 0.7, 41)
counts = table.counts()
# print only where the number of states changes
for i in np.flatnonzero(np.diff(counts)) + 1:
    print(f"f = {table.f_values[i]:.2f}: {counts[i - 1]} -> {counts[i]} states")
with open("spectra.csv", "w") as fh:
    fh.write(table.to_csv())
