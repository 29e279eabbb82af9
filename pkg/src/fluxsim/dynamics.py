"""Driven evolution of the four-level model.

Units: energies in GHz (E/h), time in ns, so i d/dt c = 2 pi H c. The drive is
diag(V) * amplitude * cos(2 pi omega t + phi) with ``omega`` in GHz and ``t``
the global clock (pulses in a sequence share one clock).

Amplitudes are kets, c_ij = <ij|psi>. The printed two-level recurrence is
written for the conjugate amplitudes <psi|ij> with ij the upper level; both
describe the same rotation.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, asdict

import numpy as np
import scipy.linalg

from .effective import (
    ALLOWED_PAIRS,
    INDEX,
    EffectiveModel,
    build_h0,
    canonical_pair,
    eigenstates,
    transition_element,
    transition_frequencies,
)
from .minima import LABELS

CONVENTIONS = ("standard-rwa", "paper")
DEFAULT_CONVENTION = "standard-rwa"
DETUNING_TOL = 0.1  # GHz
DT_SAFETY = 50.0


class OffResonantError(ValueError):
    pass


class ZeroCouplingError(ValueError):
    pass


class DtTooLargeError(ValueError):
    def __init__(self, dt, suggested):
        super().__init__(f"dt={dt:g} ns is too large; use dt <= {suggested:.3e} ns")
        self.dt = dt
        self.suggested = suggested


class IntegratorError(RuntimeError):
    pass


@dataclass(frozen=True)
class PulseSpec:
    """Rectangular harmonic flux pulse.

    omega: carrier frequency in GHz (angular rate 2 pi omega rad/ns).
    phi: carrier phase in rad, relative to the global clock.
    amplitude: flux amplitude in Wb.
    duration: ns.
    """

    omega: float
    phi: float
    amplitude: float
    duration: float
    target_pair: tuple | None = None

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("duration must be >= 0")
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        if self.target_pair is not None:
            object.__setattr__(self, "target_pair", canonical_pair(self.target_pair))

    def to_dict(self) -> dict:
        return {
            "omega_ghz": float(self.omega),
            "phi_rad": float(self.phi),
            "amplitude_wb": float(self.amplitude),
            "duration_ns": float(self.duration),
            "target_pair": None if self.target_pair is None else "-".join(self.target_pair),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PulseSpec":
        tp = d.get("target_pair")
        return cls(
            omega=float(d["omega_ghz"]),
            phi=float(d["phi_rad"]),
            amplitude=float(d["amplitude_wb"]),
            duration=float(d["duration_ns"]),
            target_pair=None if tp is None else tuple(tp.split("-")),
        )


def basis_state(label: str) -> np.ndarray:
    psi = np.zeros(4, dtype=complex)
    psi[INDEX[label]] = 1.0
    return psi


def as_state(state) -> np.ndarray:
    psi = np.asarray(state, dtype=complex).reshape(4)
    if abs(np.linalg.norm(psi) - 1.0) > 1e-9:
        raise ValueError("state must be normalised")
    return psi


def populations(state) -> np.ndarray:
    return np.abs(np.asarray(state)) ** 2


# -- rotating-wave evolution -----------------------------------------------------


def resonant_pair(model: EffectiveModel, pulse: PulseSpec, mode="exact",
                  tol=DETUNING_TOL) -> tuple:
    freqs = transition_frequencies(model, mode)
    if pulse.target_pair is not None:
        candidates = [pulse.target_pair] if pulse.target_pair in freqs else []
    else:
        candidates = list(ALLOWED_PAIRS)
    hits = [p for p in candidates if abs(freqs[p] - pulse.omega) <= tol]
    if not hits:
        raise OffResonantError(
            f"pulse at {pulse.omega:.6g} GHz matches no allowed transition "
            f"within {tol} GHz: {', '.join(f'{k[0]}-{k[1]}: {v:.6g}' for k, v in freqs.items())}"
        )
    if len(hits) > 1:
        raise OffResonantError(f"pulse is resonant with several transitions: {hits}")
    return hits[0]


def rabi_half_angle(element: float, duration: float, convention: str) -> float:
    """Signed rotation half-angle for an element (GHz) applied for ``duration``."""
    if convention == "standard-rwa":
        return np.pi * element * duration
    if convention == "paper":
        return 2.0 * np.pi * element * duration
    raise ValueError(f"convention must be one of {CONVENTIONS}")


def _free_phases(energies, t):
    return np.exp(-2j * np.pi * energies * t)


def evolve_rwa(state, model: EffectiveModel, pulse: PulseSpec, t0: float = 0.0,
               convention: str = DEFAULT_CONVENTION, mode: str = "exact",
               tol: float = DETUNING_TOL) -> np.ndarray:
    """Two-level rotating-wave evolution across one pulse.

    The resonant pair (a lower, b upper) rotates in the interaction picture as
        a -> cos(x) a - i e^{i phi} sin(x) b
        b -> cos(x) b - i e^{-i phi} sin(x) a
    with half-angle x = pi V t ("standard-rwa") or 2 pi V t ("paper");
    every level then acquires its free phase. Works in the eigenbasis of
    H0 and maps back to the logical basis.
    """
    psi = np.asarray(state, dtype=complex)
    energies, vecs = eigenstates(model, mode)
    t1 = t0 + pulse.duration
    d = vecs.T @ psi
    if pulse.duration == 0:
        return psi.copy()
    if pulse.amplitude > 0:
        pair = resonant_pair(model, pulse, mode, tol)
        w = transition_element(model, pair, mode, pulse.amplitude).value
        if w == 0:
            raise ZeroCouplingError(f"transition element for {pair} vanishes")
        i, j = INDEX[pair[0]], INDEX[pair[1]]
        a, b = (i, j) if energies[i] <= energies[j] else (j, i)
        x = rabi_half_angle(w, pulse.duration, convention)
        dt_ = d * np.conj(_free_phases(energies, t0))
        da, db = dt_[a], dt_[b]
        e = np.exp(1j * pulse.phi)
        dt_[a] = np.cos(x) * da - 1j * e * np.sin(x) * db
        dt_[b] = np.cos(x) * db - 1j * np.conj(e) * np.sin(x) * da
        d = dt_ * _free_phases(energies, t1)
    else:
        d = d * _free_phases(energies, pulse.duration)
    return vecs @ d


# -- full integration --------------------------------------------------------------


def max_step(model: EffectiveModel, pulse: PulseSpec) -> float:
    """Largest admissible step (ns) resolving carrier and coupling scales.

    Energies are measured from the mean level, which only shifts a global
    phase.
    """
    h = build_h0(model)
    h = h - np.trace(h) / 4 * np.eye(4)
    v = np.array(model.drive) * pulse.amplitude
    v = v - v.mean()
    hmax = 2 * np.pi * (np.max(np.abs(h)) + np.max(np.abs(v)))
    rates = [hmax, 2 * np.pi * abs(pulse.omega)]
    rate = max(rates)
    return np.inf if rate == 0 else 1.0 / (DT_SAFETY * rate)


def _step_generators(hs, vs, t_start, h, omega, phi):
    """Hermitian K with U = exp(-i K) for Magnus-4 steps starting at t_start."""
    s3 = np.sqrt(3.0) / 6.0
    w = 2 * np.pi * omega
    t_start = np.atleast_1d(t_start)
    h = np.broadcast_to(h, t_start.shape)
    c1 = np.cos(w * (t_start + (0.5 - s3) * h) + phi)
    c2 = np.cos(w * (t_start + (0.5 + s3) * h) + phi)
    comm = hs @ vs - vs @ hs
    k = np.pi * h[:, None, None] * (2 * hs + (c1 + c2)[:, None, None] * vs)
    k = k - 1j * (np.sqrt(3.0) * np.pi**2 / 3.0) * (h**2 * (c1 - c2))[:, None, None] * comm
    return k


def _expm_herm(k):
    lam, q = np.linalg.eigh(k)
    return (q * np.exp(-1j * lam)[..., None, :]) @ np.conj(np.swapaxes(q, -1, -2))


def _unitary_power(u, k):
    if k == 0:
        return np.eye(u.shape[0], dtype=complex)
    t, z = scipy.linalg.schur(u, output="complex")
    ev = np.diag(t)
    ev = ev / np.abs(ev)
    return (z * ev**k) @ np.conj(z.T)


class _Propagator:
    """Fixed-step Magnus-4 propagator of one pulse from the clock time t0.

    The step is the largest h <= dt that divides the carrier period, so the
    per-period propagator is computed once and reused for every period.
    """

    def __init__(self, model, pulse, dt, t0):
        h0 = build_h0(model)
        self.e_mean = np.trace(h0) / 4
        v = np.array(model.drive) * pulse.amplitude
        self.v_mean = v.mean()
        self.hs = (h0 - self.e_mean * np.eye(4)).astype(complex)
        self.vs = np.diag(v - self.v_mean).astype(complex)
        self.omega, self.phi, self.t0 = pulse.omega, pulse.phi, t0
        self.driven = pulse.omega != 0 and pulse.amplitude != 0
        if self.driven:
            period = 1.0 / abs(pulse.omega)
            n = max(1, int(np.ceil(period / dt - 1e-9)))
            self.period, self.n, self.h = period, n, period / n
            starts = t0 + self.h * np.arange(n)
            steps = _expm_herm(_step_generators(self.hs, self.vs, starts, self.h,
                                                self.omega, self.phi))
            cum = np.empty((n + 1, 4, 4), dtype=complex)
            cum[0] = np.eye(4)
            for j in range(n):
                cum[j + 1] = steps[j] @ cum[j]
            self.cum = cum
            self._power_cache = {}
        else:
            self.static = self.hs + self.vs * np.cos(self.phi)

    def _period_power(self, k):
        if k not in self._power_cache:
            self._power_cache[k] = _unitary_power(self.cum[self.n], k)
        return self._power_cache[k]

    def global_phase(self, t):
        """Phase dropped by measuring energies from the mean level."""
        tau = t - self.t0
        arg = self.e_mean * tau
        if self.driven:
            w = 2 * np.pi * self.omega
            arg = arg + self.v_mean * (np.sin(w * t + self.phi) - np.sin(w * self.t0 + self.phi)) / w
        elif self.omega == 0:
            arg = arg + self.v_mean * np.cos(self.phi) * tau
        return np.exp(-2j * np.pi * arg)

    def __call__(self, t):
        """Propagator from t0 to t (t >= t0)."""
        tau = t - self.t0
        if not self.driven:
            u = _expm_herm(2 * np.pi * tau * self.static[None])[0]
            return u * self.global_phase(t)
        k = int(np.floor(tau / self.period + 1e-12))
        rem = tau - k * self.period
        m = int(np.floor(rem / self.h + 1e-9))
        m = min(m, self.n)
        r = rem - m * self.h
        u = self.cum[m] @ self._period_power(k)
        if r > 1e-15 * max(1.0, self.h):
            start = self.t0 + k * self.period + m * self.h
            step = _expm_herm(_step_generators(self.hs, self.vs, start, r,
                                               self.omega, self.phi))[0]
            u = step @ u
        return u * self.global_phase(t)


@dataclass
class Trajectory:
    times: np.ndarray  # ns
    states: np.ndarray  # (n, 4) complex
    norm_drift: float

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.states) ** 2

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["t_ns"]
        header += [f"{p}_{lab}" for lab in LABELS for p in ("re", "im")]
        header += [f"p_{lab}" for lab in LABELS] + ["norm"]
        w.writerow(header)
        for t, c in zip(self.times, self.states):
            row = [t]
            for z in c:
                row += [z.real, z.imag]
            row += list(np.abs(c) ** 2) + [np.linalg.norm(c)]
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def evolve_full(state, model: EffectiveModel, pulse: PulseSpec, dt: float | None = None,
                t0: float = 0.0, n_samples: int = 101, renormalize: bool = False) -> Trajectory:
    """Integrate i dc/dt = 2 pi (H0 + diag(V) cos(2 pi omega t + phi)) c.

    Fixed-step fourth-order Magnus scheme in the logical basis. ``dt``
    defaults to the admissible maximum; a larger value raises
    DtTooLargeError carrying the suggested step.
    """
    psi = np.asarray(state, dtype=complex)
    bound = max_step(model, pulse)
    if dt is None:
        dt = bound
    if dt <= 0:
        raise ValueError("dt must be positive")
    if dt > bound * (1 + 1e-12):
        raise DtTooLargeError(dt, bound)
    prop = _Propagator(model, pulse, dt, t0)
    times = t0 + np.linspace(0.0, pulse.duration, max(2, n_samples))
    states = np.array([prop(t) @ psi for t in times])
    if not np.all(np.isfinite(states)):
        raise IntegratorError("non-finite amplitudes")
    norms = np.linalg.norm(states, axis=1)
    drift = float(np.max(np.abs(norms - np.linalg.norm(psi))))
    if renormalize:
        states = states / norms[:, None]
    return Trajectory(times, states, drift)


def full_propagator(model: EffectiveModel, pulse: PulseSpec, dt: float | None = None,
                    t0: float = 0.0) -> np.ndarray:
    bound = max_step(model, pulse)
    dt = bound if dt is None else dt
    if dt > bound * (1 + 1e-12):
        raise DtTooLargeError(dt, bound)
    if pulse.duration == 0:
        return np.eye(4, dtype=complex)
    return _Propagator(model, pulse, dt, t0)(t0 + pulse.duration)


# -- gates and fidelities --------------------------------------------------------


def state_fidelity(a, b) -> float:
    return float(abs(np.vdot(np.asarray(a), np.asarray(b))) ** 2)


def gate_unitary(model: EffectiveModel, pulses, method: str = "rwa",
                 convention: str = DEFAULT_CONVENTION, dt: float | None = None,
                 t0: float = 0.0) -> np.ndarray:
    """Lab-frame propagator of a pulse sequence played back to back."""
    u = np.eye(4, dtype=complex)
    t = t0
    for p in pulses:
        if method == "rwa":
            step = np.column_stack(
                [evolve_rwa(u[:, k], model, p, t, convention) for k in range(4)]
            )
            u = step
        elif method == "full":
            u = full_propagator(model, p, dt, t) @ u
        else:
            raise ValueError("method must be 'rwa' or 'full'")
        t += p.duration
    return u


def free_propagator(model: EffectiveModel, t: float, mode: str = "exact") -> np.ndarray:
    energies, vecs = eigenstates(model, mode)
    return (vecs * _free_phases(energies, t)) @ vecs.T


def rotating_frame(u, model: EffectiveModel, t1: float, t0: float = 0.0) -> np.ndarray:
    """Interaction-picture version of a propagator from t0 to t1."""
    return np.conj(free_propagator(model, t1).T) @ u @ free_propagator(model, t0)


def unitarity_defect(u) -> float:
    u = np.asarray(u)
    return float(np.max(np.abs(np.conj(u.T) @ u - np.eye(u.shape[0]))))


def gate_fidelity(u_actual, u_target) -> float:
    """|Tr(U_target^dag U_actual)|^2 / d^2, insensitive to global phase."""
    u_actual, u_target = np.asarray(u_actual), np.asarray(u_target)
    d = u_target.shape[0]
    return float(abs(np.trace(np.conj(u_target.T) @ u_actual)) ** 2 / d**2)


def basis_fidelity(u_actual, u_target) -> float:
    """Mean over basis inputs of the output-state fidelity."""
    u_actual, u_target = np.asarray(u_actual), np.asarray(u_target)
    overlaps = np.abs(np.sum(np.conj(u_target) * u_actual, axis=0)) ** 2
    return float(np.mean(overlaps))


def population_fidelity(u_actual, u_target) -> float:
    """Mean classical fidelity of output populations over basis inputs."""
    pa, pt = np.abs(np.asarray(u_actual)) ** 2, np.abs(np.asarray(u_target)) ** 2
    return float(np.mean(np.sum(np.sqrt(pa * pt), axis=0) ** 2))


def fidelity_report(u_actual, u_target) -> dict:
    return {
        "gate_fidelity": gate_fidelity(u_actual, u_target),
        "basis_fidelity": basis_fidelity(u_actual, u_target),
        "population_fidelity": population_fidelity(u_actual, u_target),
    }


def reduced_purity(state, qubit: int = 1) -> float:
    """Tr(rho^2) of one qubit of a two-qubit pure state (qubit 1 = first bit)."""
    m = np.asarray(state).reshape(2, 2)
    rho = m @ np.conj(m.T) if qubit == 1 else m.T @ np.conj(m)
    return float(np.real(np.trace(rho @ rho)))


def matrix_to_json(u) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(u)]


def matrix_from_json(obj) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in obj])
