"""Four-level effective Hamiltonian in the basis (00, 01, 10, 11).

H(t) = H0 + diag(V) cos(w t + phi), with H0 carrying the harmonic ground
energies on the diagonal and tunnelling amplitudes between states that differ
in one bit. 00<->11 and 01<->10 tunnelling is excluded.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import units
from .circuit import CircuitParams, expand_phases, loop_flux
from .minima import LABELS, find_minima

INDEX = {lab: i for i, lab in enumerate(LABELS)}
ALLOWED_PAIRS = (("00", "01"), ("00", "10"), ("01", "11"), ("10", "11"))
FORBIDDEN_PAIRS = (("00", "11"), ("01", "10"))
MODES = ("literal-paper", "first-order", "exact")

DEFAULT_DELTA = 0.5  # GHz
DEFAULT_FIELD_GAUSS = 1.0


class OutsideWindowError(ValueError):
    """Operating point does not carry all four metastable states."""


class DegenerateLevelsError(ValueError):
    pass


class PerturbativeWarning(UserWarning):
    pass


class SelectivityWarning(UserWarning):
    pass


def canonical_pair(pair) -> tuple:
    a, b = (str(p) for p in pair)
    if a not in INDEX or b not in INDEX or a == b:
        raise ValueError(f"invalid pair {pair!r}")
    return tuple(sorted((a, b)))


def pair_key(pair) -> str:
    a, b = canonical_pair(pair)
    return f"{a}-{b}"


@dataclass(frozen=True)
class EffectiveModel:
    """Parameters of the four-level Hamiltonian.

    Attributes:
        epsilons: ground energies of 00, 01, 10, 11 in GHz.
        deltas: tunnelling amplitudes (GHz) for ALLOWED_PAIRS, in that order.
        drive: diagonal drive coupling in GHz per Wb of flux amplitude.
        f_op: operating frustration the model was built at.
        drive_magnetic, drive_josephson: the two parts of ``drive`` when the
            model was assembled from a circuit.
        reference_amplitude: flux amplitude (Wb) the model was assembled for.
    """

    epsilons: tuple
    deltas: tuple = (DEFAULT_DELTA,) * 4
    drive: tuple = (0.0, 0.0, 0.0, 0.0)
    f_op: float | None = None
    drive_magnetic: tuple | None = None
    drive_josephson: tuple | None = None
    reference_amplitude: float | None = None
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("epsilons", "deltas", "drive"):
            vals = tuple(float(v) for v in getattr(self, name))
            if len(vals) != 4 or not np.all(np.isfinite(vals)):
                raise ValueError(f"{name} needs 4 finite values")
            object.__setattr__(self, name, vals)
        if min(self.deltas) < 0:
            raise ValueError("tunnelling amplitudes must be non-negative")
        eps = np.array(self.epsilons)
        gaps = np.abs(eps[:, None] - eps[None, :])[np.triu_indices(4, 1)]
        if max(self.deltas) > 0 and max(self.deltas) > gaps.min() / 5:
            warnings.warn(
                f"tunnelling {max(self.deltas):.3g} GHz exceeds a fifth of the "
                f"smallest level gap {gaps.min():.3g} GHz",
                PerturbativeWarning,
                stacklevel=3,
            )

    def delta(self, pair) -> float:
        pair = canonical_pair(pair)
        if pair in FORBIDDEN_PAIRS:
            return 0.0
        return self.deltas[ALLOWED_PAIRS.index(pair)]

    def to_json_obj(self) -> dict:
        obj = {
            "basis": list(LABELS),
            "epsilons_ghz": list(self.epsilons),
            "deltas_ghz": {pair_key(p): d for p, d in zip(ALLOWED_PAIRS, self.deltas)},
            "drive_ghz_per_wb": list(self.drive),
            "f_op": self.f_op,
            "provenance": dict(self.provenance),
        }
        if self.drive_magnetic is not None:
            obj["drive_parts_ghz_per_wb"] = {
                "magnetic": list(self.drive_magnetic),
                "josephson": list(self.drive_josephson),
            }
        if self.reference_amplitude is not None:
            obj["reference_amplitude_wb"] = self.reference_amplitude
        return obj

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json_obj(cls, obj: dict) -> "EffectiveModel":
        if list(obj.get("basis", LABELS)) != list(LABELS):
            raise ValueError("basis must be [00, 01, 10, 11]")
        deltas = obj["deltas_ghz"]
        parts = obj.get("drive_parts_ghz_per_wb") or {}
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PerturbativeWarning)
            return cls(
                epsilons=tuple(obj["epsilons_ghz"]),
                deltas=tuple(deltas[pair_key(p)] for p in ALLOWED_PAIRS),
                drive=tuple(obj["drive_ghz_per_wb"]),
                f_op=obj.get("f_op"),
                drive_magnetic=_opt_tuple(parts.get("magnetic")),
                drive_josephson=_opt_tuple(parts.get("josephson")),
                reference_amplitude=obj.get("reference_amplitude_wb"),
                provenance=dict(obj.get("provenance") or {}),
            )

    @classmethod
    def from_json(cls, text: str) -> "EffectiveModel":
        return cls.from_json_obj(json.loads(text))


def _opt_tuple(v):
    return None if v is None else tuple(v)


def build_h0(model: EffectiveModel) -> np.ndarray:
    h = np.diag(np.array(model.epsilons))
    for (a, b), d in zip(ALLOWED_PAIRS, model.deltas):
        i, j = INDEX[a], INDEX[b]
        h[i, j] = h[j, i] = d
    return h


def drive_diagonal(model: EffectiveModel, amplitude: float = 1.0) -> np.ndarray:
    return np.array(model.drive) * amplitude


# -- eigenstates ------------------------------------------------------------------


def _complement(label):
    return "".join("1" if c == "0" else "0" for c in label)


def _literal_prefactor(model, label):
    """Own-ket coefficient of the printed first-order eigenkets."""
    e = dict(zip(LABELS, model.epsilons))
    if label in ("00", "11"):
        return 2 * e[label] - e["01"] - e["10"]
    return 2 * e[label] - e["00"] - e["11"]


def _fix_signs(vecs):
    signs = np.sign(np.diag(vecs))
    signs[signs == 0] = 1.0
    return vecs * signs


def eigenstates(model: EffectiveModel, mode: str = "exact"):
    """Perturbed eigenkets as columns ordered (00, 01, 10, 11).

    Returns (energies, vectors). Every column is normalised and has a
    positive component on its own basis ket. Energies are exact eigenvalues
    in "exact" mode and the bare epsilons otherwise.
    """
    eps = np.array(model.epsilons)
    h0 = build_h0(model)
    if mode == "exact":
        w, v = np.linalg.eigh(h0)
        # assign eigenvectors to basis labels by maximal total overlap
        rows, cols = linear_sum_assignment(-np.abs(v) ** 2)
        order = np.empty(4, dtype=int)
        order[rows] = cols
        return w[order], _fix_signs(v[:, order])
    if mode == "first-order":
        vecs = np.eye(4)
        for a, b in ALLOWED_PAIRS:
            i, j = INDEX[a], INDEX[b]
            d = h0[i, j]
            if d == 0:
                continue
            if eps[i] == eps[j]:
                raise DegenerateLevelsError("degenerate levels; use exact mode")
            vecs[j, i] = d / (eps[i] - eps[j])
            vecs[i, j] = d / (eps[j] - eps[i])
    elif mode == "literal-paper":
        vecs = np.zeros((4, 4))
        for lab in LABELS:
            i = INDEX[lab]
            pref = _literal_prefactor(model, lab)
            if pref == 0:
                raise DegenerateLevelsError("degenerate levels; use exact mode")
            vecs[:, i] = h0[:, i]
            vecs[i, i] = pref
    else:
        raise ValueError(f"mode must be one of {MODES}")
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    return eps.copy(), _fix_signs(vecs)


@dataclass(frozen=True)
class TransitionElement:
    pair: tuple
    value: float  # GHz per Wb times amplitude
    mode: str
    second_order: bool = False  # forbidden pair reported as O(delta^2) -> 0


def transition_element(model: EffectiveModel, pair, mode: str = "exact",
                       amplitude: float = 1.0) -> TransitionElement:
    """<psi_a| diag(V) |psi_b> for the canonical pair (a, b).

    Real-valued: H0 is real symmetric, so eigenvectors are real. In
    "literal-paper" mode the printed closed form is used with a taken as the
    member of {00, 11} and b the member of {01, 10}:
    (V_a / (2 e_b - e_a - e_abar) + V_b / (2 e_a - e_bbar - e_abar)) * Delta_ab.
    """
    pair = canonical_pair(pair)
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    forbidden = pair in FORBIDDEN_PAIRS
    if forbidden and mode != "exact":
        return TransitionElement(pair, 0.0, mode, second_order=True)
    v = drive_diagonal(model, amplitude)
    if mode == "literal-paper":
        a, b = pair if pair[0] in ("00", "11") else pair[::-1]
        e = dict(zip(LABELS, model.epsilons))
        va, vb = v[INDEX[a]], v[INDEX[b]]
        abar, bbar = _complement(a), _complement(b)
        d1 = 2 * e[b] - e[a] - e[abar]
        d2 = 2 * e[a] - e[bbar] - e[abar]
        if d1 == 0 or d2 == 0:
            raise DegenerateLevelsError("degenerate levels; use exact mode")
        value = (va / d1 + vb / d2) * model.delta(pair)
        return TransitionElement(pair, float(value), mode)
    _, vecs = eigenstates(model, mode)
    i, j = INDEX[pair[0]], INDEX[pair[1]]
    value = vecs[:, i] @ (v * vecs[:, j])
    return TransitionElement(pair, float(value), mode, second_order=forbidden)


def transition_frequencies(model: EffectiveModel, mode: str = "exact") -> dict:
    """|E_a - E_b| in GHz for every allowed pair."""
    energies, _ = eigenstates(model, mode)
    return {
        p: float(abs(energies[INDEX[p[0]]] - energies[INDEX[p[1]]]))
        for p in ALLOWED_PAIRS
    }


def selectivity_gap(model: EffectiveModel, mode: str = "exact") -> float:
    """Smallest separation between two allowed transition frequencies."""
    w = sorted(transition_frequencies(model, mode).values())
    return float(np.min(np.diff(w)))


# -- coupling to the circuit ------------------------------------------------------


@dataclass(frozen=True)
class DriveElements:
    magnetic: np.ndarray  # GHz, order (00, 01, 10, 11)
    josephson: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.magnetic + self.josephson


def _states_by_label(states):
    if hasattr(states, "by_label"):
        states = states.by_label()
    elif not isinstance(states, dict):
        states = {s.label: s for s in states}
    missing = [lab for lab in LABELS if lab not in states]
    if missing:
        raise ValueError(f"missing labelled state(s): {', '.join(missing)}")
    return states


def drive_elements(states, params: CircuitParams, delta_phi_ext: float) -> DriveElements:
    """Magnetic and Josephson parts of the diagonal drive, GHz.

    magnetic:  (sum_k phi_k / L_k) * dphi
    josephson: 2 pi (-E1 sin g1 + E6 sin g6) * dphi / Phi0
    """
    states = _states_by_label(states)
    ej = params.energies
    dfr = delta_phi_ext / units.PHI0
    vm, vj = np.zeros(4), np.zeros(4)
    for lab in LABELS:
        s = states[lab]
        phi = loop_flux(s, params)
        vm[INDEX[lab]] = units.joule_to_ghz(np.sum(phi / params.inductances_h) * delta_phi_ext)
        full = expand_phases(s.reduced, s.f)
        vj[INDEX[lab]] = 2 * np.pi * (-ej[0] * np.sin(full[0]) + ej[5] * np.sin(full[5])) * dfr
    return DriveElements(vm, vj)


def default_flux_amplitude(params: CircuitParams, field_gauss: float = DEFAULT_FIELD_GAUSS) -> float:
    """Flux amplitude (Wb) of a uniform field over the mean loop area."""
    return units.gauss_to_wb(field_gauss, float(np.mean(params.loop_areas)))


def assemble_from_circuit(params: CircuitParams, f_op: float, deltas=None,
                          delta_phi_ext: float | None = None, n_seeds: int = 64,
                          rng_seed: int = 0, selectivity_margin: float = 0.5,
                          minima=None) -> EffectiveModel:
    """Effective model at operating point ``f_op``.

    Ground energies come from the harmonic levels of the four minima, the
    drive from :func:`drive_elements` (stored per Wb), tunnelling amplitudes
    are passed through (scalar or one per allowed pair, default 0.5 GHz).
    """
    if deltas is None:
        deltas = DEFAULT_DELTA
    deltas = tuple(np.broadcast_to(np.asarray(deltas, dtype=float), (4,)))
    if delta_phi_ext is None:
        delta_phi_ext = default_flux_amplitude(params)
    if minima is None:
        minima = find_minima(params, f_op, n_seeds, rng_seed)
    if not minima.has_four_states():
        raise OutsideWindowError(
            f"f_op={f_op} is outside the four-state window (labels found: {minima.labels})"
        )
    by = minima.by_label()
    parts = drive_elements(by, params, 1.0)  # per Wb, linear in the amplitude
    model = EffectiveModel(
        epsilons=tuple(by[lab].ground_energy for lab in LABELS),
        deltas=deltas,
        drive=tuple(parts.total),
        f_op=float(f_op),
        drive_magnetic=tuple(parts.magnetic),
        drive_josephson=tuple(parts.josephson),
        reference_amplitude=float(delta_phi_ext),
        provenance={"circuit_file": params.source, "rng_seed": rng_seed},
    )
    gap = selectivity_gap(model)
    if gap < selectivity_margin:
        warnings.warn(
            f"allowed transition frequencies are only {gap:.3g} GHz apart "
            f"(margin {selectivity_margin} GHz)",
            SelectivityWarning,
            stacklevel=2,
        )
    return model
