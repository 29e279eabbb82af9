"""Pulse schedules for Rx, Ry, CNOT and Bell preparation.

Each gate is a sequence of resonant rectangular pulses, one per two-level
subspace it acts on. Durations come from Rabi rates measured on a short full
integration (``durations="calibrated"``) unless a predicted rate is asked
for.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .circuit import CircuitParams
from .dynamics import (
    DEFAULT_CONVENTION,
    PulseSpec,
    basis_state,
    evolve_full,
    gate_unitary,
    rotating_frame,
)
from .effective import (
    ALLOWED_PAIRS,
    INDEX,
    EffectiveModel,
    canonical_pair,
    eigenstates,
    selectivity_gap,
    transition_element,
    transition_frequencies,
)
from .minima import find_minima

GATE_KINDS = ("rx", "ry", "cnot", "bell-prep")
DURATION_SOURCES = ("calibrated", "standard-rwa", "paper")
PHASE_CONVENTIONS = ("target", "paper")
PAPER_PHASES = {"rx": -np.pi, "ry": np.pi / 2, "cnot": np.pi}

QUBIT_PAIRS = {
    1: (("00", "10"), ("01", "11")),
    2: (("00", "01"), ("10", "11")),
}
CNOT_PAIR = ("10", "11")

CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


class NoOscillationError(ValueError):
    pass


class CompileError(ValueError):
    pass


def rx(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


@dataclass(frozen=True)
class GateSpec:
    kind: str
    qubit: int | None = None
    theta: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"gate kind must be one of {GATE_KINDS}")
        if self.kind in ("rx", "ry"):
            if self.qubit not in (1, 2):
                raise ValueError("rotations need qubit 1 or 2")
            if self.theta is None or not np.isfinite(self.theta):
                raise ValueError("rotations need a finite theta")
        elif self.qubit is not None or self.theta is not None:
            raise ValueError(f"{self.kind} takes no qubit/theta")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "qubit": self.qubit, "theta": self.theta}

    @classmethod
    def from_dict(cls, d: dict) -> "GateSpec":
        return cls(d["kind"], d.get("qubit"), d.get("theta"))


def target_unitary(gate: GateSpec) -> np.ndarray:
    """Ideal gate in the basis (00, 01, 10, 11); qubit 1 is the first bit."""
    if gate.kind == "cnot":
        return CNOT.copy()
    if gate.kind == "bell-prep":
        return CNOT @ np.kron(ry(np.pi / 2), np.eye(2))
    single = rx(gate.theta) if gate.kind == "rx" else ry(gate.theta)
    if gate.qubit == 1:
        return np.kron(single, np.eye(2))
    return np.kron(np.eye(2), single)


@dataclass
class RabiCalibration:
    pair: tuple
    amplitude: float
    rate: float  # rotation-angle rate, rad/ns
    element: float  # GHz
    source: str

    def to_dict(self) -> dict:
        return {
            "pair": "-".join(self.pair),
            "amplitude_wb": self.amplitude,
            "rate_rad_per_ns": self.rate,
            "element_ghz": self.element,
            "source": self.source,
        }


def predicted_rate(element: float, convention: str) -> float:
    """Rotation-angle rate (rad/ns) implied by a transition element (GHz)."""
    factor = {"standard-rwa": 2.0, "paper": 4.0}[convention]
    return factor * np.pi * abs(element)


def calibrate_rabi(model: EffectiveModel, pair, amplitude: float, dt: float | None = None,
                   n_samples: int = 400) -> RabiCalibration:
    """Measure the Rabi rotation rate of ``pair`` with a full-integration probe.

    Starts in the lower level, drives on resonance for about one and a
    quarter population periods of the slower of the two conventions, and
    fits P_upper(t) = A sin^2(rate t / 2).
    """
    pair = canonical_pair(pair)
    if pair not in ALLOWED_PAIRS:
        raise ValueError(f"{pair} is not an allowed transition")
    w = transition_element(model, pair, "exact", amplitude).value if amplitude > 0 else 0.0
    if amplitude <= 0 or w == 0:
        raise NoOscillationError(f"no oscillation on {pair}: zero coupling")
    energies, _ = eigenstates(model, "exact")
    lo, hi = sorted(pair, key=lambda lab: energies[INDEX[lab]])
    nu = transition_frequencies(model)[pair]
    gap = selectivity_gap(model)
    if abs(w) > max(nu, gap) / 10:
        raise ValueError("drive is not perturbative for this pair")
    guess = predicted_rate(w, "standard-rwa")
    probe = PulseSpec(nu, 0.0, amplitude, 1.25 * 2 * np.pi / guess, pair)
    traj = evolve_full(basis_state(lo), model, probe, dt=dt, n_samples=n_samples)
    t = traj.times
    p = traj.populations[:, INDEX[hi]]
    if p.max() < 0.5:
        raise NoOscillationError(f"no oscillation on {pair}: peak population {p.max():.3g}")
    # first maximum seeds the fit
    peak = np.argmax(p > 0.9 * p.max())
    while peak + 1 < len(p) and p[peak + 1] >= p[peak]:
        peak += 1
    r0 = np.pi / max(t[peak], t[1])
    (amp_fit, rate), _ = curve_fit(
        lambda tt, a, r: a * np.sin(r * tt / 2) ** 2, t, p, p0=(1.0, r0)
    )
    return RabiCalibration(pair, amplitude, float(abs(rate)), float(w), "calibrated")


@dataclass
class PulseSchedule:
    pulses: list
    gate: GateSpec | None = None
    convention: str = DEFAULT_CONVENTION
    phase_convention: str = "target"
    durations: str = "calibrated"
    calibration: dict = field(default_factory=dict)
    block_phase: float | None = None  # CNOT: phase of the flipped block

    @property
    def total_time(self) -> float:
        return float(sum(p.duration for p in self.pulses))

    def __add__(self, other: "PulseSchedule") -> "PulseSchedule":
        cal = dict(self.calibration)
        cal.update(other.calibration)
        return PulseSchedule(
            self.pulses + other.pulses, None, self.convention,
            self.phase_convention, self.durations, cal, other.block_phase,
        )

    def to_json_obj(self) -> dict:
        return {
            "gate": None if self.gate is None else self.gate.to_dict(),
            "pulses": [p.to_dict() for p in self.pulses],
            "convention": self.convention,
            "phase_convention": self.phase_convention,
            "durations": self.durations,
            "calibration": {k: v.to_dict() for k, v in sorted(self.calibration.items())},
            "block_phase_rad": self.block_phase,
            "total_time_ns": self.total_time,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json_obj(cls, obj: dict) -> "PulseSchedule":
        cal = {}
        for k, v in (obj.get("calibration") or {}).items():
            cal[k] = RabiCalibration(
                tuple(v["pair"].split("-")), v["amplitude_wb"], v["rate_rad_per_ns"],
                v["element_ghz"], v["source"],
            )
        gate = obj.get("gate")
        return cls(
            pulses=[PulseSpec.from_dict(p) for p in obj["pulses"]],
            gate=None if gate is None else GateSpec.from_dict(gate),
            convention=obj.get("convention", DEFAULT_CONVENTION),
            phase_convention=obj.get("phase_convention", "target"),
            durations=obj.get("durations", "calibrated"),
            calibration=cal,
            block_phase=obj.get("block_phase_rad"),
        )

    @classmethod
    def from_json(cls, text: str) -> "PulseSchedule":
        return cls.from_json_obj(json.loads(text))


def _rate(model, pair, amplitude, durations, cache):
    key = "-".join(pair)
    if key in cache and cache[key].amplitude == amplitude:
        return cache[key]
    if durations == "calibrated":
        cal = calibrate_rabi(model, pair, amplitude)
    elif durations in ("standard-rwa", "paper"):
        w = transition_element(model, pair, "exact", amplitude).value
        if w == 0:
            raise NoOscillationError(f"no oscillation on {pair}: zero coupling")
        cal = RabiCalibration(pair, amplitude, predicted_rate(w, durations), w, durations)
    else:
        raise ValueError(f"durations must be one of {DURATION_SOURCES}")
    cache[key] = cal
    return cal


def _check_selective(model, margin=1e-3):
    if selectivity_gap(model) <= margin:
        raise CompileError("allowed transition frequencies are degenerate; "
                           "move the operating point off f = 0.5")


def _pair_pulse(model, pair, kind, theta, amplitude, durations, phase_convention, cache):
    """One resonant pulse rotating ``pair`` (ordered target bit 0, then 1)."""
    x0, x1 = pair
    cp = canonical_pair(pair)
    nu = transition_frequencies(model)[cp]
    if theta == 0:
        return PulseSpec(nu, 0.0, amplitude, 0.0, cp)
    cal = _rate(model, cp, amplitude, durations, cache)
    tau = abs(theta) / cal.rate
    if phase_convention == "paper":
        phi = PAPER_PHASES[kind]
    else:
        energies, _ = eigenstates(model, "exact")
        sigma = 1.0 if energies[INDEX[x0]] <= energies[INDEX[x1]] else -1.0
        s = np.sign(cal.element) * np.sign(theta)
        if kind == "ry":
            phi = sigma * (-s * np.pi / 2)
        else:
            phi = 0.0 if s > 0 else np.pi
    return PulseSpec(nu, float(phi), amplitude, float(tau), cp)


def compile_rotation(model: EffectiveModel, gate: GateSpec, amplitude: float,
                     durations: str = "calibrated", phase_convention: str = "target",
                     calibration: dict | None = None) -> PulseSchedule:
    """Rx or Ry on one qubit as two pulses, one per subspace of the other qubit.

    With phase_convention="target" the rotating-frame action on each
    subspace is exactly Rx(theta) / Ry(theta) in the order (bit 0, bit 1);
    "paper" uses the fixed carrier phases -pi (rx) and pi/2 (ry).
    """
    if gate.kind not in ("rx", "ry"):
        raise ValueError("compile_rotation handles rx and ry")
    _check_selective(model)
    cache = {} if calibration is None else calibration
    pulses = [
        _pair_pulse(model, pair, gate.kind, gate.theta, amplitude, durations,
                    phase_convention, cache)
        for pair in QUBIT_PAIRS[gate.qubit]
    ]
    used = {k: v for k, v in cache.items() if k in {"-".join(p.target_pair) for p in pulses}}
    return PulseSchedule(pulses, gate, DEFAULT_CONVENTION, phase_convention, durations, used)


def compile_cnot(model: EffectiveModel, amplitude: float, durations: str = "calibrated",
                 phase_convention: str = "target",
                 calibration: dict | None = None) -> PulseSchedule:
    """Single pi pulse on the 10 <-> 11 transition (qubit 1 controls).

    The rotating-frame action on the flipped block is exp(i b) X rather than
    X (b = -pi/2 with target phases); b is kept in ``block_phase``.
    """
    _check_selective(model)
    cache = {} if calibration is None else calibration
    pulse = _pair_pulse(model, CNOT_PAIR, "cnot", np.pi, amplitude, durations,
                        phase_convention, cache)
    used = {"10-11": cache["10-11"]}
    u = rotating_frame(gate_unitary(model, [pulse], "rwa"), model, pulse.duration)
    block = float(np.angle(u[INDEX["11"], INDEX["10"]]))
    return PulseSchedule([pulse], GateSpec("cnot"), DEFAULT_CONVENTION, phase_convention,
                         durations, used, block_phase=block)


def compile_bell(model: EffectiveModel, amplitude: float, durations: str = "calibrated",
                 phase_convention: str = "target",
                 calibration: dict | None = None) -> PulseSchedule:
    """Ry(pi/2) on qubit 1 followed by CNOT."""
    cache = {} if calibration is None else calibration
    sched = compile_rotation(model, GateSpec("ry", 1, np.pi / 2), amplitude, durations,
                             phase_convention, cache)
    sched = sched + compile_cnot(model, amplitude, durations, phase_convention, cache)
    sched.gate = GateSpec("bell-prep")
    return sched


def compile_gate(model: EffectiveModel, gate: GateSpec, amplitude: float, **kwargs) -> PulseSchedule:
    if gate.kind in ("rx", "ry"):
        return compile_rotation(model, gate, amplitude, **kwargs)
    if gate.kind == "cnot":
        return compile_cnot(model, amplitude, **kwargs)
    return compile_bell(model, amplitude, **kwargs)


def estimate_operation_time(model: EffectiveModel, gate: GateSpec, amplitude: float,
                            convention: str = DEFAULT_CONVENTION) -> float:
    """Schedule length (ns) from predicted Rabi rates; no dynamics is run."""
    return compile_gate(model, gate, amplitude, durations=convention).total_time


def cnot_up_to_block_phase(block_phase: float) -> np.ndarray:
    u = CNOT.copy()
    u[2:, 2:] *= np.exp(1j * block_phase)
    return u


# -- initialization -------------------------------------------------------------


@dataclass
class InitReport:
    target: str
    f_detuned: float
    ground_label: str
    ground_labels: dict  # f -> label of the lowest harmonic level


class InitializationError(RuntimeError):
    pass


DETUNED_POINTS = (0.2, 0.8)


def ground_label(params: CircuitParams, f: float, n_seeds: int = 64, rng_seed: int = 0) -> str:
    states = find_minima(params, f, n_seeds, rng_seed)
    if not states.states:
        raise InitializationError(f"no minima at f={f}")
    return min(states, key=lambda s: s.ground_energy).label


def initialize(params: CircuitParams, target: str, f_detuned: float | None = None,
               n_seeds: int = 64, rng_seed: int = 0):
    """Prepare 00 or 11 by relaxing at a strongly detuned frustration.

    Checks that the target is the unique ground state at the detuned point
    and returns the corresponding basis state. Without ``f_detuned`` the
    point among 0.2 and 0.8 whose ground state is ``target`` is used.
    """
    if target not in ("00", "11"):
        raise ValueError("target must be '00' or '11'")
    labels = {f: ground_label(params, f, n_seeds, rng_seed) for f in DETUNED_POINTS}
    if f_detuned is None:
        matches = [f for f, lab in labels.items() if lab == target]
        if not matches:
            raise InitializationError(f"{target} is not the ground state at f in {DETUNED_POINTS}")
        f_detuned = matches[0]
    else:
        labels.setdefault(f_detuned, ground_label(params, f_detuned, n_seeds, rng_seed))
    got = labels[f_detuned]
    if got != target:
        raise InitializationError(f"ground state at f={f_detuned} is {got}, not {target}")
    return basis_state(target), InitReport(target, f_detuned, got, labels)
