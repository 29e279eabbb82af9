import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluxsim import units
from fluxsim.circuit import (
    CircuitParams,
    FluxRegimeWarning,
    ParameterError,
    circulating_currents,
    constraint_residuals,
    dump_circuit,
    expand_phases,
    gradient,
    hessian,
    junction_currents,
    load_circuit,
    loop_flux,
    mass_matrix,
    parse_circuit,
    potential,
)

TOML = """
junction_energies = [200, 200, 200, 200, 200, 200]
charging_energies = [2, 2, 2, 2, 2, 2]
loop_inductances = [5, 5]
loop_areas = [3.14e-14, 3.14e-14]
frustration = 0.5
"""

angles = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)
reduced = st.tuples(angles, angles, angles, angles).map(np.array)
frustrations = st.floats(0.0, 1.0, allow_nan=False)


def test_parse_circuit_paper_convention():
    p = parse_circuit(TOML)
    # e^2/C = 2 GHz means e^2/2C = 1 GHz
    assert p.charging_energies == (1.0,) * 6
    assert p.frustration == 0.5
    assert p.flux_override is None


def test_parse_circuit_errors():
    with pytest.raises(ParameterError, match="bogus"):
        parse_circuit(TOML + "bogus = 1\n")
    with pytest.raises(ParameterError, match="junction_energies"):
        parse_circuit("")
    with pytest.raises(ParameterError, match="needs 6"):
        parse_circuit(TOML.replace("[200, 200, 200, 200, 200, 200]", "[200, 200]"))
    with pytest.raises(ParameterError, match="positive"):
        parse_circuit(TOML.replace("loop_inductances = [5, 5]", "loop_inductances = [5, -5]"))
    with pytest.raises(ParameterError, match="convention"):
        parse_circuit(TOML + 'convention = "weird"\n')
    with pytest.raises(ParameterError, match="malformed"):
        parse_circuit("junction_energies = [")


def test_dump_roundtrip(tmp_path):
    p = CircuitParams.uniform(150.0, 3.0, flux_override=(0.5, 0.5), frustration=0.47)
    path = tmp_path / "c.toml"
    path.write_text(dump_circuit(p))
    q = load_circuit(path)
    assert q == p
    assert q.source == str(path)


def test_flux_regime_warning():
    with pytest.warns(FluxRegimeWarning):
        CircuitParams.uniform(10.0, 5.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        CircuitParams.uniform(200.0)


def test_expand_phases_examples():
    assert np.allclose(expand_phases(np.zeros(4), 0.0), 0.0)
    full = expand_phases(np.zeros(4), 0.5)
    assert np.isclose(full[0], np.pi) and np.isclose(abs(full[5]), np.pi)
    assert np.allclose(full[1:5], 0.0)


def test_expand_phases_table_row():
    # reduced phases of the tabulated 00 row give gamma1, gamma6 off the tabulated
    # -1.52, 1.08 by about 0.1 rad
    full = expand_phases(np.array([0.0, 1.51, -1.08, -1.08]), 0.5)
    assert np.isclose(full[0], -1.63, atol=0.01)
    assert np.isclose(full[5], 0.98, atol=0.01)


@given(reduced, frustrations)
def test_constraints_hold(g, f):
    full = expand_phases(g, f)
    assert np.allclose(full[1:5], g)
    assert np.all(np.abs(constraint_residuals(full, f)) < 1e-9)
    assert -np.pi < full[0] <= np.pi and -np.pi < full[5] <= np.pi


def test_potential_examples(uniform):
    assert potential(np.zeros(4), uniform, 0.0) == 0.0
    assert np.isclose(potential(np.zeros(4), uniform, 0.5), 4 * 200.0)


@given(reduced, frustrations)
def test_potential_periodicity(g, f):
    p = CircuitParams.uniform(1.0)
    u = potential(g, p, f)
    assert u >= 0
    shift = np.zeros(4)
    shift[1] = 2 * np.pi
    assert np.isclose(potential(g + shift, p, f), u, atol=1e-9)
    assert np.isclose(potential(g, p, f + 1.0), u, atol=1e-9)
    # reflection symmetry
    assert np.isclose(potential(-g, p, 1.0 - f), u, atol=1e-9)


def test_potential_vectorized(uniform, rng):
    g = rng.uniform(-np.pi, np.pi, size=(7, 4))
    u = potential(g, uniform, 0.3)
    assert u.shape == (7,)
    assert np.allclose(u, [potential(x, uniform, 0.3) for x in g])


def test_gradient_vs_central_differences(rng):
    p = CircuitParams((180, 200, 210, 190, 220, 205), (1,) * 6)
    h = 1e-6
    worst = 0.0
    for _ in range(200):
        g = rng.uniform(-np.pi, np.pi, 4)
        f = rng.uniform(0, 1)
        num = np.array([
            (potential(g + h * e, p, f) - potential(g - h * e, p, f)) / (2 * h)
            for e in np.eye(4)
        ])
        ana = gradient(g, p, f)
        worst = max(worst, np.max(np.abs(ana - num)) / np.max(np.abs(ana)))
    assert worst < 1e-6


def test_gradient_zero_at_origin(uniform):
    assert np.allclose(gradient(np.zeros(4), uniform, 0.0), 0.0)


def test_hessian_closed_form_at_origin():
    p = CircuitParams.uniform(1.0)
    expected = np.array([
        [3, -1, -1, -1],
        [-1, 2, 0, 0],
        [-1, 0, 2, 1],
        [-1, 0, 1, 2],
    ], dtype=float)
    assert np.allclose(hessian(np.zeros(4), p, 0.0), expected)


def test_hessian_vs_differenced_gradient(rng):
    p = CircuitParams((180, 200, 210, 190, 220, 205), (1,) * 6)
    h = 1e-6
    for _ in range(100):
        g = rng.uniform(-np.pi, np.pi, 4)
        f = rng.uniform(0, 1)
        hs = hessian(g, p, f)
        assert np.allclose(hs, hs.T)
        num = np.column_stack([
            (gradient(g + h * e, p, f) - gradient(g - h * e, p, f)) / (2 * h)
            for e in np.eye(4)
        ])
        assert np.max(np.abs(hs - num)) / np.max(np.abs(hs)) < 1e-5


def _kinetic_oracle(params, gdot):
    """T = sum_i C_i/2 (hbar/2e)^2 gdot_i^2 over all six junctions."""
    g2, g3, g4, g5 = gdot
    jdot = np.array([-g2 + g3, g2, g3, g4, g5, -g2 + g4 + g5])
    return 0.5 * np.sum(params.capacitances * jdot**2) * (units.HBAR / (2 * units.E_CHARGE)) ** 2


def test_mass_matrix_quadratic_form(rng):
    for _ in range(20):
        p = CircuitParams((200,) * 6, tuple(rng.uniform(0.5, 3.0, 6)))
        m = mass_matrix(p)
        for _ in range(10):
            v = rng.normal(size=4)
            t = 0.5 * v @ m @ v
            assert abs(t - _kinetic_oracle(p, v)) <= 1e-12 * abs(t)


def test_mass_matrix_uniform_structure():
    p = CircuitParams.uniform(200.0, 2.0)
    c = p.capacitances[0]
    expected = np.array([[3, -1, -1, -1], [-1, 2, 0, 0], [-1, 0, 2, 1], [-1, 0, 1, 2]])
    scale = c * (units.HBAR / (2 * units.E_CHARGE)) ** 2
    assert np.allclose(mass_matrix(p) / scale, expected, rtol=1e-12)


def test_mass_matrix_positive_definite(rng):
    for _ in range(100):
        p = CircuitParams((200,) * 6, tuple(rng.uniform(0.1, 10.0, 6)))
        assert np.all(np.linalg.eigvalsh(mass_matrix(p)) > 0)


def test_mass_matrix_small_c6_decouples():
    # C_6 -> 0 means Ec_6 -> infinity
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FluxRegimeWarning)
        p = CircuitParams((200,) * 6, (1, 1, 1, 1, 1, 1e12))
    m = mass_matrix(p)
    assert abs(m[2, 3]) < 1e-10 * abs(m[2, 2])


def test_junction_currents():
    assert np.allclose(junction_currents(np.zeros(6)), 0.0)
    row00 = np.array([-1.52, 0.0, 1.51, -1.08, -1.08, 1.08])
    signs = np.sign(junction_currents(row00))
    assert list(signs) == [-1, 0, 1, -1, -1, 1]
    row11 = np.array([1.51, 0.0, -1.52, 1.08, 1.08, -1.08])
    assert np.array_equal(np.sign(junction_currents(row11)), -signs)


def test_circulating_currents_units(uniform):
    full = np.array([-np.pi / 2, 0, np.pi / 2, 0, 0, 0])
    circ = circulating_currents(full, uniform)
    ic = units.critical_current(200.0)
    # loop 1 = (+g1, +g2, -g3): mean (-1 + 0 - 1)/3
    assert np.isclose(circ[0], -2 * ic / 3)
    assert circ[1] == 0.0


class _Fake:
    def __init__(self, reduced, f, label):
        self.reduced, self.f, self.label = np.asarray(reduced, float), f, label


def test_loop_flux(uniform, device):
    zero = _Fake(np.zeros(4), 0.0, "00")
    assert np.allclose(loop_flux(zero, uniform), 0.0)
    # zero currents at f: flux is f Phi0
    assert np.allclose(loop_flux(zero, uniform.with_frustration(0.3)), 0.0)
    st = _Fake(np.zeros(4), 0.3, "00")
    assert np.allclose(loop_flux(st, uniform), 0.3 * units.PHI0 + 5e-12 * circulating_currents(
        expand_phases(st.reduced, 0.3), uniform))
    assert np.allclose(loop_flux(st, device), 0.5 * units.PHI0)
    assert np.allclose(loop_flux(st, uniform, override=(0.25, 0.5)), [0.25 * units.PHI0, 0.5 * units.PHI0])
    assert np.all(np.abs(loop_flux(st, device) - 1e-15) < 1e-15)
    with pytest.raises(ValueError):
        loop_flux(_Fake(np.zeros(4), 0.3, "other"), uniform)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.1, 5.0), min_size=6, max_size=6))
def test_capacitance_conversion(ec):
    p = CircuitParams((200,) * 6, tuple(ec))
    assert np.allclose(units.E_CHARGE**2 / (2 * p.capacitances), units.ghz_to_joule(ec))
