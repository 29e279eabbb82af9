"""Order-of-magnitude device summary.

Plasma frequency, level splittings, drive magnitudes and predicted gate
times for a circuit at one operating point, as a flat JSON-ready dict.
"""

from __future__ import annotations

import warnings

import numpy as np

from . import units
from .circuit import CircuitParams
from .dynamics import DEFAULT_CONVENTION
from .effective import (
    ALLOWED_PAIRS,
    DEFAULT_DELTA,
    SelectivityWarning,
    assemble_from_circuit,
    default_flux_amplitude,
    drive_elements,
    pair_key,
    transition_frequencies,
)
from .gates import GateSpec, estimate_operation_time
from .minima import find_minima

DEFAULT_F_OP = 0.49

REPORT_GATES = (
    GateSpec("cnot"),
    GateSpec("rx", 1, np.pi),
    GateSpec("rx", 2, np.pi),
    GateSpec("ry", 1, np.pi / 2),
    GateSpec("ry", 2, np.pi / 2),
    GateSpec("bell-prep"),
)


def gate_name(gate: GateSpec) -> str:
    if gate.qubit is None:
        return gate.kind
    return f"{gate.kind}_q{gate.qubit}_{gate.theta:.4f}"


def plasma_frequency(state) -> float:
    """Angular small-oscillation frequency (2 pi GHz), geometric mean of the modes."""
    nu = np.asarray(state.mode_frequencies)
    return float(units.TWO_PI * np.exp(np.mean(np.log(nu))))


def device_report(params: CircuitParams, f_op: float = DEFAULT_F_OP, deltas=DEFAULT_DELTA,
                  field_gauss: float = 1.0, n_seeds: int = 64, rng_seed: int = 0,
                  convention: str = DEFAULT_CONVENTION) -> dict:
    """Summary numbers for ``params`` operated at ``f_op``.

    Drive magnitudes are max |V| over the four states for a uniform field of
    ``field_gauss`` over the mean loop area. Gate times use predicted Rabi
    rates for ``convention``.
    """
    minima = find_minima(params, f_op, n_seeds, rng_seed)
    amplitude = default_flux_amplitude(params, field_gauss)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SelectivityWarning)
        model = assemble_from_circuit(params, f_op, deltas, amplitude, n_seeds, rng_seed,
                                      minima=minima)
    ground = min(minima, key=lambda s: s.ground_energy)
    parts = drive_elements(minima, params, amplitude)
    vm = float(np.max(np.abs(units.ghz_to_ev(parts.magnetic))))
    vj = float(np.max(np.abs(units.ghz_to_ev(parts.josephson))))
    freqs = transition_frequencies(model)
    times = {gate_name(g): estimate_operation_time(model, g, amplitude, convention)
             for g in REPORT_GATES}
    return {
        "f_op": float(f_op),
        "ground_label": ground.label,
        "mode_frequencies_ghz": [float(v) for v in ground.mode_frequencies],
        "plasma_frequency_rad_per_ns": plasma_frequency(ground),
        "level_splittings_ghz": {pair_key(p): float(freqs[p]) for p in ALLOWED_PAIRS},
        "mean_level_splitting_ghz": float(np.mean([freqs[p] for p in ALLOWED_PAIRS])),
        "flux_amplitude_wb": float(amplitude),
        "drive_magnetic_ev": vm,
        "drive_josephson_ev": vj,
        "drive_ratio": vm / vj if vj > 0 else float("inf"),
        "gate_times_ns": times,
        "convention": convention,
        "rng_seed": rng_seed,
    }


def format_report(rep: dict) -> str:
    lines = [
        f"operating point f = {rep['f_op']}",
        f"ground state {rep['ground_label']}, modes (GHz) "
        + ", ".join(f"{v:.2f}" for v in rep["mode_frequencies_ghz"]),
        f"plasma frequency omega_p = {rep['plasma_frequency_rad_per_ns']:.1f} rad/ns",
        "level splittings (GHz): "
        + ", ".join(f"{k} {v:.2f}" for k, v in rep["level_splittings_ghz"].items()),
        f"drive: V_M = {rep['drive_magnetic_ev']:.3e} eV, V_J = {rep['drive_josephson_ev']:.3e} eV,"
        f" ratio {rep['drive_ratio']:.3g}",
        f"gate times ({rep['convention']}):",
    ]
    lines += [f"  {k:<22s} {v:10.2f} ns" for k, v in rep["gate_times_ns"].items()]
    return "\n".join(lines) + "\n"
