"""Two-loop, six-junction circuit: phases, potential and its derivatives.

Orientation (fixed once, keyed to the circuit figure)::

        loop 1                    loop 2
    J1 (+) J2 (+) J3 (-)    J2 (-) J4 (+) J5 (+) J6 (-)

A junction contributes to a loop's circulation with the sign shown, i.e. the
sign with which its phase enters the fluxoid constraint of that loop::

    g1 + g2 - g3        = 2 pi f
    -g2 + g4 + g5 - g6  = 2 pi f

The free coordinates are (g2, g3, g4, g5); g1 and g6 are eliminated through
the constraints. A positive junction current sin(g_k) points along the reference arrow of
junction k, so the sign pattern of ``junction_currents`` gives the current
directions directly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import units

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib


class ParameterError(ValueError):
    """Invalid circuit parameters or circuit description file."""


class FluxRegimeWarning(UserWarning):
    pass


# Rows: junctions 1..6, columns: reduced coordinates (g2, g3, g4, g5).
INCIDENCE = np.array(
    [
        [-1.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [-1.0, 0.0, 1.0, 1.0],
    ]
)
# Offset of each junction phase in units of 2 pi f.
FLUX_OFFSET = np.array([1.0, 0.0, 0.0, 0.0, 0.0, -1.0])

LOOP_ORIENTATION = np.array(
    [
        [1.0, 1.0, -1.0, 0.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, 1.0, 1.0, -1.0],
    ]
)


@dataclass(frozen=True)
class CircuitParams:
    """Physical description of the device.

    Attributes:
        junction_energies: E_1..E_6 in GHz (E/h).
        charging_energies: Ec_1..Ec_6 in GHz with Ec_i = e^2 / (2 C_i).
        loop_inductances: L_1, L_2 in pH.
        frustration: applied flux per loop in units of the flux quantum.
        loop_areas: A_1, A_2 in m^2.
        flux_override: optional fixed loop fluxes (units of the flux
            quantum) used by :func:`loop_flux` instead of the computed ones.
    """

    junction_energies: tuple
    charging_energies: tuple
    loop_inductances: tuple = (5.0, 5.0)
    frustration: float = 0.5
    loop_areas: tuple = (math.pi * 1e-14, math.pi * 1e-14)
    flux_override: tuple | None = None
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        for name, n in (
            ("junction_energies", 6),
            ("charging_energies", 6),
            ("loop_inductances", 2),
            ("loop_areas", 2),
        ):
            vals = tuple(float(v) for v in getattr(self, name))
            if len(vals) != n:
                raise ParameterError(f"{name} needs {n} values, got {len(vals)}")
            if not all(np.isfinite(vals)) or min(vals) <= 0:
                raise ParameterError(f"{name} must be finite and positive: {vals}")
            object.__setattr__(self, name, vals)
        f = float(self.frustration)
        if not np.isfinite(f):
            raise ParameterError("frustration must be finite")
        object.__setattr__(self, "frustration", f)
        if self.flux_override is not None:
            fo = tuple(float(v) for v in self.flux_override)
            if len(fo) != 2:
                raise ParameterError("flux_override needs 2 values")
            object.__setattr__(self, "flux_override", fo)
        ej, ec = self.energies, self.charging
        if np.any(ec > ej / 10):
            warnings.warn(
                "charging energy exceeds E_J/10 for some junction; "
                "the flux-regime picture may not hold",
                FluxRegimeWarning,
                stacklevel=3,
            )

    @property
    def energies(self) -> np.ndarray:
        return np.array(self.junction_energies)

    @property
    def charging(self) -> np.ndarray:
        return np.array(self.charging_energies)

    @property
    def capacitances(self) -> np.ndarray:
        """Junction capacitances in farads."""
        return units.E_CHARGE**2 / (2.0 * units.ghz_to_joule(self.charging))

    @property
    def inductances_h(self) -> np.ndarray:
        return np.array(self.loop_inductances) * 1e-12

    @property
    def e_scale(self) -> float:
        return float(np.max(self.junction_energies))

    def with_frustration(self, f: float) -> "CircuitParams":
        return _replace(self, frustration=f)

    @classmethod
    def uniform(
        cls,
        e_j: float = 1.0,
        e_c: float | None = None,
        *,
        convention: str = "paper",
        **kwargs,
    ) -> "CircuitParams":
        """All six junctions identical.

        ``e_c`` defaults to ``e_j / 100`` and is read in ``convention``
        ("paper": E_C = e^2/C, "half": E_C = e^2/2C).
        """
        if e_c is None:
            e_c = e_j / 100.0
        ec_half = _to_half_convention(e_c, convention)
        return cls((e_j,) * 6, (ec_half,) * 6, **kwargs)


def _replace(params, **changes):
    from dataclasses import replace

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FluxRegimeWarning)
        return replace(params, **changes)


def _to_half_convention(ec, convention):
    if convention == "paper":
        return np.asarray(ec, dtype=float) / 2.0
    if convention == "half":
        return np.asarray(ec, dtype=float)
    raise ParameterError(f"convention must be 'paper' or 'half', got {convention!r}")


_CIRCUIT_KEYS = {
    "junction_energies",
    "charging_energies",
    "convention",
    "loop_inductances",
    "loop_areas",
    "frustration",
    "flux_override",
}


def parse_circuit(text: str, source: str | None = None) -> CircuitParams:
    """Build :class:`CircuitParams` from TOML text.

    Keys: junction_energies, charging_energies, convention ("paper" or
    "half", default "paper"), loop_inductances, loop_areas, frustration and
    the optional flux_override. Any other key is rejected.
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParameterError(f"malformed circuit file: {exc}") from None
    unknown = sorted(set(data) - _CIRCUIT_KEYS)
    if unknown:
        raise ParameterError(f"unknown key(s) in circuit file: {', '.join(unknown)}")
    for key in ("junction_energies", "charging_energies", "loop_inductances",
                "loop_areas", "frustration"):
        if key not in data:
            raise ParameterError(f"missing key in circuit file: {key}")
    convention = data.get("convention", "paper")
    try:
        ec = tuple(_to_half_convention(data["charging_energies"], convention))
        return CircuitParams(
            junction_energies=tuple(data["junction_energies"]),
            charging_energies=ec,
            loop_inductances=tuple(data["loop_inductances"]),
            frustration=data["frustration"],
            loop_areas=tuple(data["loop_areas"]),
            flux_override=data.get("flux_override"),
            source=source,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ParameterError):
            raise
        raise ParameterError(f"bad value in circuit file: {exc}") from None


def load_circuit(path) -> CircuitParams:
    path = Path(path)
    return parse_circuit(path.read_text(encoding="utf-8"), source=str(path))


def dump_circuit(params: CircuitParams) -> str:
    """TOML text (half convention) that round-trips through parse_circuit."""

    def arr(v):
        return "[" + ", ".join(repr(float(x)) for x in v) + "]"

    lines = [
        f"junction_energies = {arr(params.junction_energies)}",
        f"charging_energies = {arr(params.charging_energies)}",
        'convention = "half"',
        f"loop_inductances = {arr(params.loop_inductances)}",
        f"loop_areas = {arr(params.loop_areas)}",
        f"frustration = {params.frustration!r}",
    ]
    if params.flux_override is not None:
        lines.append(f"flux_override = {arr(params.flux_override)}")
    return "\n".join(lines) + "\n"


# -- phases -----------------------------------------------------------------


def junction_phases(reduced, f):
    """Unwrapped phases of all six junctions, shape (..., 6)."""
    g = np.asarray(reduced, dtype=float)
    return g @ INCIDENCE.T + 2.0 * np.pi * f * FLUX_OFFSET


def expand_phases(reduced, f):
    """Full junction phases from the reduced coordinates.

    g1 and g6 are fixed by the fluxoid constraints and reduced to (-pi, pi];
    g2..g5 are passed through unchanged.
    """
    full = junction_phases(reduced, f)
    full[..., 0] = units.wrap_phase(full[..., 0])
    full[..., 5] = units.wrap_phase(full[..., 5])
    return full


def constraint_residuals(full, f):
    """Loop constraint mismatch reduced mod 2 pi, shape (..., 2)."""
    full = np.asarray(full, dtype=float)
    return units.wrap_phase(full @ LOOP_ORIENTATION.T - 2.0 * np.pi * f)


# -- potential ----------------------------------------------------------------


def _params_ef(params, f):
    ej = params.energies
    if f is None:
        f = params.frustration
    return ej, f


def potential(reduced, params: CircuitParams, f: float | None = None):
    """Josephson potential of the reduced coordinates, GHz."""
    ej, f = _params_ef(params, f)
    a = junction_phases(reduced, f)
    return np.sum(ej * (1.0 - np.cos(a)), axis=-1)


def gradient(reduced, params: CircuitParams, f: float | None = None):
    ej, f = _params_ef(params, f)
    a = junction_phases(reduced, f)
    return (ej * np.sin(a)) @ INCIDENCE


def hessian(reduced, params: CircuitParams, f: float | None = None):
    ej, f = _params_ef(params, f)
    a = junction_phases(reduced, f)
    w = ej * np.cos(a)
    return np.einsum("ji,...j,jk->...ik", INCIDENCE, w, INCIDENCE)


def mass_matrix(params: CircuitParams) -> np.ndarray:
    """Kinetic-energy matrix of (g2, g3, g4, g5) in SI units (J s^2).

    T = 1/2 gdot^T M gdot with M = (hbar/2e)^2 B^T diag(C) B.
    """
    c = params.capacitances
    if np.any(c <= 0):
        raise ParameterError("capacitances must be positive")
    return (units.HBAR / (2.0 * units.E_CHARGE)) ** 2 * (INCIDENCE.T * c) @ INCIDENCE


# -- currents and flux ----------------------------------------------------------


def junction_currents(full):
    """Tunnel currents I_k / I_c^k = sin(g_k)."""
    return np.sin(np.asarray(full, dtype=float))


def circulating_currents(full, params: CircuitParams):
    """Mean signed branch current around each loop, amperes."""
    ic = units.critical_current(params.energies)
    branch = ic * junction_currents(full)
    weights = np.abs(LOOP_ORIENTATION).sum(axis=1)
    return (branch @ LOOP_ORIENTATION.T) / weights


def loop_flux(state, params: CircuitParams, override=None):
    """Flux through each loop while the circuit sits in ``state``, in Wb.

    phi_k = f Phi0 + L_k I_circ,k. ``override`` (or ``params.flux_override``),
    given in units of Phi0, pins both values instead.
    """
    label = getattr(state, "label", None)
    if label is None or label == "other":
        raise ValueError("loop_flux needs a classified state")
    if override is None:
        override = params.flux_override
    if override is not None:
        return np.asarray(override, dtype=float) * units.PHI0
    f = getattr(state, "f", params.frustration)
    full = expand_phases(state.reduced, f)
    circ = circulating_currents(full, params)
    return f * units.PHI0 + params.inductances_h * circ
