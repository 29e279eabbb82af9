"""Physical constants and unit conversions.

Energies are carried as frequencies in GHz (E/h), time in ns, flux in units
of the flux quantum except at the Weber boundary.
"""

import numpy as np
from scipy import constants as _c

H = _c.h
HBAR = _c.hbar
E_CHARGE = _c.e
PHI0 = _c.physical_constants["mag. flux quantum"][0]  # Wb
EV = _c.electron_volt

TWO_PI = 2.0 * np.pi


def ghz_to_joule(x):
    return np.asarray(x) * H * 1e9


def joule_to_ghz(x):
    return np.asarray(x) / (H * 1e9)


def ghz_to_ev(x):
    return ghz_to_joule(x) / EV


def ev_to_ghz(x):
    return joule_to_ghz(np.asarray(x) * EV)


def gauss_to_wb(field_gauss, area_m2):
    """Flux of a uniform field (Gauss) through ``area_m2``."""
    return field_gauss * 1e-4 * area_m2


def critical_current(junction_energy_ghz):
    """I_c = 2e E_J / hbar in amperes."""
    return 2.0 * E_CHARGE * ghz_to_joule(junction_energy_ghz) / HBAR


def wrap_phase(x):
    """Map angles onto (-pi, pi]."""
    x = np.asarray(x, dtype=float)
    return np.pi - np.mod(np.pi - x, TWO_PI)
