import numpy as np
import pytest

from fluxsim.circuit import CircuitParams, expand_phases, gradient, hessian
from fluxsim.minima import (
    CSV_COLUMNS,
    LABELS,
    NotAMinimumError,
    classify_currents,
    find_minima,
    four_state_window,
    harmonic_levels,
    normal_mode_frequencies,
    phase_distance,
    relax,
    seed_points,
    sweep_spectra,
)
from fluxsim.units import wrap_phase

TABLE = {
    "00": (-1.52, 0.0, 1.51, -1.08, -1.08, 1.08),
    "01": (-0.57, 4.28, 0.57, 0.38, 0.38, -0.38),
    "10": (0.57, 2.01, -0.57, -0.38, -0.38, 0.38),
    "11": (1.51, 0.0, -1.52, 1.08, 1.08, -1.08),
}


def test_four_labelled_minima(minima_half):
    assert minima_half.status == "ok"
    assert minima_half.labels == list(LABELS)
    assert not minima_half.failures


def test_minima_near_table(minima_half):
    for s in minima_half:
        assert np.max(np.abs(wrap_phase(s.full - np.array(TABLE[s.label])))) < 0.15


def test_state_invariants(minima_half, uniform):
    for s in minima_half:
        assert np.linalg.norm(gradient(s.reduced, uniform, 0.5)) < 1e-8 * 200
        assert np.all(np.linalg.eigvalsh(hessian(s.reduced, uniform, 0.5)) > 0)
        assert np.isclose(s.ground_energy, s.energy + 0.5 * np.sum(s.mode_frequencies))
        assert classify_currents(s.full, uniform) == s.label


def test_golden_values(minima_half):
    by = minima_half.by_label()
    assert np.isclose(by["00"].energy, 698.4677343906, rtol=1e-9)
    assert np.isclose(by["01"].energy, 389.56, rtol=1e-4)
    assert np.allclose(by["00"].mode_frequencies, [9.5553, 27.3256, 27.3256, 32.06], rtol=1e-3)


def test_reflection_degeneracy(minima_half):
    by = minima_half.by_label()
    assert abs(by["00"].energy - by["11"].energy) < 1e-9 * 200
    assert abs(by["01"].energy - by["10"].energy) < 1e-9 * 200
    assert abs(by["00"].ground_energy - by["11"].ground_energy) < 1e-6
    assert np.allclose(wrap_phase(by["00"].reduced + by["11"].reduced), 0.0, atol=1e-6)


def test_deterministic_and_seed_independent(uniform, minima_half):
    again = find_minima(uniform, 0.5)
    assert [s.label for s in again] == minima_half.labels
    assert all(np.array_equal(a.reduced, b.reduced) for a, b in zip(again, minima_half))
    other = find_minima(uniform, 0.5, rng_seed=7)
    assert other.labels == minima_half.labels
    for a, b in zip(other, minima_half):
        assert phase_distance(a.reduced, b.reduced) < 1e-4


def test_parallel_matches_serial(uniform, minima_half):
    par = find_minima(uniform, 0.5, workers=2)
    assert all(np.array_equal(a.reduced, b.reduced) for a, b in zip(par, minima_half))


def test_detuned_ground_states(uniform):
    # ground states at the two detuned points are complements of each other
    low = find_minima(uniform, 0.2)
    high = find_minima(uniform, 0.8)
    assert len(low) <= 2 and len(high) <= 2
    g_low = min(low, key=lambda s: s.ground_energy).label
    g_high = min(high, key=lambda s: s.ground_energy).label
    assert {g_low, g_high} == {"00", "11"}
    assert g_low == "11"


def test_seed_validation(uniform):
    with pytest.raises(ValueError):
        find_minima(uniform, 0.5, n_seeds=8)
    pts = seed_points(32, 0)
    assert pts.shape == (32, 4)
    assert np.all(pts > -np.pi) and np.all(pts <= np.pi)
    assert np.array_equal(pts, seed_points(32, 0))


def test_phase_distance_wraps():
    a = np.array([np.pi - 1e-6, 0, 0, 0])
    b = np.array([-np.pi + 1e-6, 0, 0, 0])
    assert phase_distance(a, b) < 1e-5


def test_classify_templates(uniform):
    row = np.array(TABLE["01"])
    assert classify_currents(row, uniform) == "01"
    assert classify_currents(-row, uniform) == "10"
    assert classify_currents(np.zeros(6), uniform) == "other"


def test_normal_modes_isotropic():
    nu = normal_mode_frequencies(4.0 * np.eye(4), 0.25 * np.eye(4))
    assert np.allclose(nu, 4.0)


def test_normal_modes_permutation_invariant(rng):
    a = rng.normal(size=(4, 4))
    h = a @ a.T + np.eye(4)
    b = rng.normal(size=(4, 4))
    m = b @ b.T + np.eye(4)
    p = np.eye(4)[rng.permutation(4)]
    assert np.allclose(normal_mode_frequencies(h, m), normal_mode_frequencies(p @ h @ p.T, p @ m @ p.T))


def test_normal_modes_reject_saddle():
    with pytest.raises(NotAMinimumError):
        normal_mode_frequencies(np.diag([1.0, 1.0, -1.0, 1.0]), np.eye(4))


def test_harmonic_levels_plasma_scale(minima_half, uniform):
    nu, eps = harmonic_levels(minima_half[0], uniform)
    assert np.allclose(nu, minima_half[0].mode_frequencies)
    # angular plasma frequency of order 100 GHz
    wp = 2 * np.pi * np.exp(np.mean(np.log(nu)))
    assert 100 / 3 < wp < 300


def test_relax_returns_nearby_minimum(uniform, minima_half):
    s = minima_half.by_label()["01"]
    r = relax(s.reduced + 0.05, uniform, 0.5)
    assert r.label == "01"
    assert phase_distance(r.reduced, s.reduced) < 1e-6


def test_sweep_mirror_symmetry(uniform):
    table = sweep_spectra(uniform, 0.46, 0.54, 9)
    flip = {"00": "11", "11": "00", "01": "10", "10": "01"}
    rows = table.rows
    for row, mirror in zip(rows, rows[::-1]):
        assert np.isclose(row.f + mirror.f, 1.0)
        a = {s.label: s.energy for s in row}
        b = {flip[s.label]: s.energy for s in mirror}
        assert a.keys() == b.keys()
        for k in a:
            assert abs(a[k] - b[k]) < 1e-9 * 200


def test_sweep_counts_and_breaks(uniform):
    table = sweep_spectra(uniform, 0.3, 0.7, 81)
    counts = table.counts()
    four = table.f_values[counts == 4]
    assert np.isclose(four.min(), 0.485) and np.isclose(four.max(), 0.515)
    assert np.all(counts[(table.f_values < 0.485 - 1e-9) | (table.f_values > 0.515 + 1e-9)] < 4)
    # the number of states only drops moving away from f = 0.5
    mid = len(counts) // 2
    assert np.all(np.diff(counts[mid:]) <= 0) and np.all(np.diff(counts[:mid + 1]) >= 0)
    assert np.array_equal(counts, counts[::-1])
    assert counts[0] == 3
    kinds = {(b.label, b.kind) for b in table.breaks}
    assert kinds == {("00", "appear"), ("11", "vanish")}


def test_sweep_csv(uniform):
    table = sweep_spectra(uniform, 0.49, 0.51, 3)
    lines = table.to_csv().splitlines()
    assert lines[0].split(",") == CSV_COLUMNS
    assert len(lines) == 1 + 12
    with pytest.raises(ValueError):
        sweep_spectra(uniform, 0.4, 0.6, 1)


def test_window_uniform(uniform):
    w = four_state_window(uniform)
    assert w.status == "ok"
    assert np.isclose(w.f_lo, 0.485) and np.isclose(w.f_hi, 0.515)
    assert np.isclose(w.f_c, 0.015)
    assert np.isclose(0.5 - w.f_lo, w.f_hi - 0.5)


def test_window_asymmetric_junction():
    p = CircuitParams((200, 1000, 200, 200, 200, 200), (1,) * 6)
    w = four_state_window(p)
    assert w.status == "ok"
    assert w.f_c == 0.0


def test_window_resolution_checked(uniform):
    with pytest.raises(ValueError):
        four_state_window(uniform, resolution=0.01)


def test_to_dict(minima_half):
    d = minima_half[0].to_dict()
    assert set(d) == {"f", "label", "U_min", "epsilon", "omega", "gamma", "currents"}
    assert len(d["gamma"]) == 4 and len(d["omega"]) == 4


def test_window_absent():
    # weak outer junctions leave only the 01/10 pair at f = 0.5
    p = CircuitParams((60, 200, 60, 200, 200, 60), (0.5,) * 6)
    w = four_state_window(p)
    assert w.status == "no-window"
    assert np.isnan(w.f_c)


def test_empty_status():
    from fluxsim.minima import MinimaResult

    assert MinimaResult(0.5, []).status == "empty"
