"""Metastable states of the reduced potential.

Multistart conjugate-gradient search, current-direction labelling, harmonic
zero-point levels, frustration sweeps and the four-state window.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import units
from .circuit import (
    CircuitParams,
    circulating_currents,
    expand_phases,
    gradient,
    hessian,
    junction_currents,
    mass_matrix,
    potential,
)
from .optimize import conjugate_gradient

LABELS = ("00", "01", "10", "11")

# Current-direction signs per junction (1..6) for each labelled state;
# 0 marks junctions carrying no current.
CURRENT_TEMPLATES = {
    "00": (-1, 0, 1, -1, -1, 1),
    "01": (-1, -1, 1, 1, 1, -1),
    "10": (1, 1, -1, -1, -1, 1),
    "11": (1, 0, -1, 1, 1, -1),
}

GTOL_REL = 1e-10
MAXITER = 10_000
DEDUP_TOL = 1e-4
SADDLE_TOL_REL = 1e-9
TRACK_JUMP = 0.3


class NotAMinimumError(ValueError):
    pass


@dataclass(frozen=True)
class StationaryState:
    """A classified local minimum of the reduced potential.

    ``mode_frequencies`` are normal-mode frequencies in GHz (cycles), so
    ``ground_energy = energy + sum(mode_frequencies) / 2`` in the same E/h
    units as the potential.
    """

    reduced: np.ndarray
    f: float
    energy: float
    label: str
    mode_frequencies: np.ndarray
    ground_energy: float
    currents: np.ndarray
    circulation: np.ndarray

    @property
    def full(self) -> np.ndarray:
        return expand_phases(self.reduced, self.f)

    def to_dict(self) -> dict:
        return {
            "f": float(self.f),
            "label": self.label,
            "U_min": float(self.energy),
            "epsilon": float(self.ground_energy),
            "omega": [float(w) for w in self.mode_frequencies],
            "gamma": [float(g) for g in self.reduced],
            "currents": [float(c) for c in self.currents],
        }


@dataclass
class SeedFailure:
    seed_index: int
    grad_norm: float
    n_iter: int


@dataclass
class MinimaResult:
    """Deduplicated minima at one frustration value.

    Iterates over the states. ``status`` is "ok" or "empty".
    """

    f: float
    states: list
    failures: list = field(default_factory=list)
    saddles_rejected: int = 0

    @property
    def status(self) -> str:
        return "ok" if self.states else "empty"

    def __iter__(self):
        return iter(self.states)

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]

    def by_label(self) -> dict:
        out = {}
        for s in self.states:
            out.setdefault(s.label, s)
        return out

    @property
    def labels(self) -> list:
        return [s.label for s in self.states]

    def has_four_states(self) -> bool:
        return sorted(self.labels) == list(LABELS)


def n_workers(workers=None) -> int:
    if workers is None:
        workers = int(os.environ.get("FLUXSIM_THREADS", "1") or 1)
    return max(1, int(workers))


def _pmap(fn, items, workers):
    items = list(items)
    if n_workers(workers) <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=n_workers(workers)) as pool:
        return list(pool.map(fn, items))


def seed_points(n_seeds: int, rng_seed: int) -> np.ndarray:
    """Uniform starting points on (-pi, pi]^4 from a counter-based generator."""
    rng = np.random.Generator(np.random.Philox(rng_seed))
    return np.pi - rng.uniform(0.0, 2.0 * np.pi, size=(n_seeds, 4))


def phase_distance(a, b) -> float:
    """Max-norm distance modulo 2 pi lattice translations."""
    return float(np.max(np.abs(units.wrap_phase(np.asarray(a) - np.asarray(b)))))


def _descend(args):
    x0, params, f = args
    scale = params.e_scale
    return conjugate_gradient(
        lambda x: potential(x, params, f),
        lambda x: gradient(x, params, f),
        x0,
        gtol=GTOL_REL * scale,
        maxiter=MAXITER,
    )


def normal_mode_frequencies(hess, mass) -> np.ndarray:
    """sqrt of the generalized eigenvalues of hess v = lam mass v, ascending.

    Raises NotAMinimumError if ``hess`` is not positive definite.
    """
    lam = scipy.linalg.eigh(hess, mass, eigvals_only=True)
    if np.any(lam <= 0):
        raise NotAMinimumError(f"not a minimum: curvature eigenvalues {lam}")
    return np.sqrt(lam)


def harmonic_levels(state_or_phases, params: CircuitParams, f: float | None = None):
    """Normal-mode frequencies (GHz) and harmonic ground energy (GHz).

    Accepts a StationaryState or raw reduced phases (then ``f`` defaults to
    ``params.frustration``).
    """
    if isinstance(state_or_phases, StationaryState):
        reduced, f = state_or_phases.reduced, state_or_phases.f
    else:
        reduced = np.asarray(state_or_phases, dtype=float)
        f = params.frustration if f is None else f
    h_joule = units.ghz_to_joule(hessian(reduced, params, f))
    omega = normal_mode_frequencies(h_joule, mass_matrix(params))  # rad/s
    nu = omega / (2.0 * np.pi) / 1e9
    eps = float(potential(reduced, params, f)) + 0.5 * float(np.sum(nu))
    return nu, eps


def classify_currents(full, params: CircuitParams) -> str:
    """Two-bit label from loop circulation signs (negative -> 0)."""
    circ = circulating_currents(full, params)
    ic = float(np.mean(units.critical_current(params.energies)))
    tiny = 1e-6 * ic
    if np.all(np.abs(circ) > tiny):
        return "".join("0" if c < 0 else "1" for c in circ)
    signs = np.sign(np.where(np.abs(np.sin(full)) > 1e-6, np.sin(full), 0.0))
    for label, template in CURRENT_TEMPLATES.items():
        t = np.asarray(template)
        nz = t != 0
        if np.any(signs != 0) and np.all(signs[nz] == t[nz]) and np.all(signs[~nz] == 0):
            return label
    return "other"


def classify_state(state, params: CircuitParams) -> str:
    return classify_currents(expand_phases(state.reduced, state.f), params)


def make_state(reduced, params: CircuitParams, f: float) -> StationaryState:
    reduced = units.wrap_phase(reduced)
    full = expand_phases(reduced, f)
    nu, eps = harmonic_levels(reduced, params, f)
    return StationaryState(
        reduced=reduced,
        f=float(f),
        energy=float(potential(reduced, params, f)),
        label=classify_currents(full, params),
        mode_frequencies=nu,
        ground_energy=eps,
        currents=junction_currents(full),
        circulation=circulating_currents(full, params),
    )


def _sort_key(s):
    return (s.label, tuple(np.round(s.reduced, 9)))


def find_minima(params: CircuitParams, f: float | None = None, n_seeds: int = 64,
                rng_seed: int = 0, workers=None) -> MinimaResult:
    """Multistart search for local minima at frustration ``f``."""
    if n_seeds < 16:
        raise ValueError("n_seeds must be >= 16")
    f = params.frustration if f is None else float(f)
    seeds = seed_points(n_seeds, rng_seed)
    runs = _pmap(_descend, [(x0, params, f) for x0 in seeds], workers)

    scale = params.e_scale
    found, failures, saddles = [], [], 0
    for i, r in enumerate(runs):
        if not r.converged:
            failures.append(SeedFailure(i, r.grad_norm, r.n_iter))
            continue
        x = units.wrap_phase(r.x)
        if any(phase_distance(x, y) < DEDUP_TOL for y in found):
            continue
        if np.linalg.eigvalsh(hessian(x, params, f)).min() < SADDLE_TOL_REL * scale:
            saddles += 1
            continue
        found.append(x)
    states = sorted((make_state(x, params, f) for x in found), key=_sort_key)
    return MinimaResult(f, states, failures, saddles)


def relax(reduced, params: CircuitParams, f: float) -> StationaryState:
    """Descend from ``reduced`` and return the minimum reached."""
    r = _descend((np.asarray(reduced, dtype=float), params, f))
    if not r.converged:
        raise NotAMinimumError("descent did not converge")
    return make_state(r.x, params, f)


# -- sweeps ----------------------------------------------------------------------


@dataclass
class TrackBreak:
    f_from: float
    f_to: float
    label: str
    kind: str  # "appear" or "vanish"


@dataclass
class SpectraTable:
    rows: list  # list of MinimaResult, sorted by f
    breaks: list = field(default_factory=list)

    @property
    def f_values(self) -> np.ndarray:
        return np.array([r.f for r in self.rows])

    def counts(self) -> np.ndarray:
        return np.array([len(r) for r in self.rows])

    def records(self) -> list:
        out = []
        for row in self.rows:
            for s in row.states:
                out.append(
                    [row.f, s.label, s.energy, s.ground_energy,
                     *s.mode_frequencies, *s.reduced]
                )
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for rec in self.records():
            w.writerow([_fmt(v) for v in rec])
        return buf.getvalue()


CSV_COLUMNS = ["f", "label", "U_min", "epsilon",
               "omega1", "omega2", "omega3", "omega4",
               "gamma2", "gamma3", "gamma4", "gamma5"]


def _fmt(v):
    if isinstance(v, str):
        return v
    return repr(float(v))


def _row_task(args):
    params, f, n_seeds, rng_seed = args
    return find_minima(params, f, n_seeds, rng_seed, workers=1)


def track_breaks(rows, jump=TRACK_JUMP) -> list:
    breaks = []
    for prev, cur in zip(rows[:-1], rows[1:]):
        for s in cur.states:
            if not prev.states or min(phase_distance(s.reduced, p.reduced) for p in prev.states) > jump:
                breaks.append(TrackBreak(prev.f, cur.f, s.label, "appear"))
        for p in prev.states:
            if not cur.states or min(phase_distance(p.reduced, s.reduced) for s in cur.states) > jump:
                breaks.append(TrackBreak(prev.f, cur.f, p.label, "vanish"))
    return breaks


def sweep_spectra(params: CircuitParams, f_min: float, f_max: float, n_steps: int,
                  n_seeds: int = 64, rng_seed: int = 0, workers=None) -> SpectraTable:
    """Minima at ``n_steps`` evenly spaced frustration values."""
    if not f_min < f_max:
        raise ValueError("need f_min < f_max")
    if n_steps < 2:
        raise ValueError("n_steps must be >= 2")
    fs = np.linspace(f_min, f_max, n_steps)
    rows = _pmap(_row_task, [(params, float(f), n_seeds, rng_seed) for f in fs], workers)
    return SpectraTable(rows, track_breaks(rows))


@dataclass
class WindowResult:
    f_lo: float
    f_hi: float
    f_c: float
    status: str  # "ok" or "no-window"
    resolution: float


def four_state_window(params: CircuitParams, resolution: float = 0.005,
                      n_seeds: int = 64, rng_seed: int = 0) -> WindowResult:
    """Largest grid window around f = 0.5 with exactly the four labelled states.

    The grid is 0.5 + k * resolution; f_lo and f_hi are the outermost grid
    points that still carry all four states.
    """
    if not 0 < resolution <= 0.005:
        raise ValueError("resolution must be in (0, 0.005]")

    def four(f):
        return find_minima(params, f, n_seeds, rng_seed).has_four_states()

    if not four(0.5):
        return WindowResult(np.nan, np.nan, np.nan, "no-window", resolution)
    kmax = int(np.floor(0.5 / resolution))
    edges = []
    for sign in (1, -1):
        k = 0
        while k < kmax and four(0.5 + sign * (k + 1) * resolution):
            k += 1
        edges.append(0.5 + sign * k * resolution)
    f_hi, f_lo = edges
    return WindowResult(f_lo, f_hi, (f_hi - f_lo) / 2.0, "ok", resolution)


def minima_to_json_obj(result: MinimaResult) -> dict:
    return {
        "f": float(result.f),
        "status": result.status,
        "failed_seeds": len(result.failures),
        "minima": [s.to_dict() for s in result.states],
    }
