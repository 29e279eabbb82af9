import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from fluxsim import units


def test_flux_quantum():
    assert np.isclose(units.PHI0, units.H / (2 * units.E_CHARGE), rtol=1e-12)
    assert np.isclose(units.PHI0, 2.067833848e-15, rtol=1e-9)


def test_energy_roundtrip():
    x = np.array([0.1, 1.0, 200.0])
    assert np.allclose(units.ev_to_ghz(units.ghz_to_ev(x)), x)
    # 1 meV is about 241.8 GHz
    assert np.isclose(units.ev_to_ghz(1e-3), 241.7989, rtol=1e-6)


def test_gauss_to_wb():
    area = np.pi * (100e-9) ** 2
    assert np.isclose(units.gauss_to_wb(1.0, area), 1e-4 * area)


def test_critical_current():
    # 200 GHz junction carries roughly 0.4 uA
    ic = units.critical_current(200.0)
    assert np.isclose(ic, 2 * units.E_CHARGE * units.H * 200e9 / units.HBAR)
    assert 0.3e-6 < ic < 0.5e-6


@given(st.floats(-100, 100, allow_nan=False))
def test_wrap_phase_range(x):
    w = units.wrap_phase(x)
    assert -np.pi < w <= np.pi
    assert np.isclose(np.cos(w), np.cos(x), atol=1e-9)
    assert np.isclose(np.sin(w), np.sin(x), atol=1e-9)


def test_wrap_phase_pi():
    assert units.wrap_phase(np.pi) == np.pi
    assert units.wrap_phase(-np.pi) == np.pi
