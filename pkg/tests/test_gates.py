import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sim2spec.core import SpectralConfig, UnobservableError
from sim2spec.gates import build_samples, compute_weights, energy_gate, obs_gate

CFG = SpectralConfig()


def test_obs_gate_half_at_m1():
    assert obs_gate(np.array([1]), CFG)[0] == pytest.approx(0.5)
    assert obs_gate(np.array([-1]), CFG)[0] == pytest.approx(0.5)


def test_obs_gate_zero_at_m0():
    assert obs_gate(np.array([0]), CFG)[0] == 0.0


def test_energy_gate_at_max():
    e = np.array([0.01, 1.0])
    g = energy_gate(e, CFG)
    assert g[1] == pytest.approx(1.0 / (1.0 + math.exp(-9.0)))
    assert g[1] == pytest.approx(0.99988, abs=1e-5)


def test_rotation_m0_gets_zero_weight():
    e = np.array([1.0, 1.0])
    m = np.array([0, 3])
    w, g_lo, g_hi = compute_weights(e, m, CFG)
    assert w[0] == 0.0
    assert w[1] > 0.0
    assert 0 < g_lo <= g_hi


def test_all_zero_energy_raises():
    with pytest.raises(UnobservableError):
        compute_weights(np.zeros(5), None, CFG)


def test_translation_gate_is_energy_only():
    e = np.array([0.2, 1.0])
    w, g_lo, g_hi = compute_weights(e, None, CFG)
    assert np.allclose(w, energy_gate(e, CFG) * e)
    assert g_hi <= 1.0


def test_gate_bounds_cover_all_samples():
    rng = np.random.default_rng(0)
    e = rng.uniform(0.001, 1.0, 200)
    m = rng.integers(1, 12, 200)
    w, g_lo, g_hi = compute_weights(e, m, CFG)
    g = w / e
    assert np.all(g >= g_lo - 1e-12)
    assert np.all(g <= g_hi + 1e-12)
    assert math.isfinite(g_hi / g_lo)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_energy_gate_monotone(e1, e2):
    lo, hi = sorted((e1, e2))
    g = energy_gate(np.array([lo, hi, 1.0]), CFG)
    assert g[0] <= g[1] + 1e-12


@given(st.integers(0, 50), st.integers(0, 50))
def test_obs_gate_monotone_in_abs_m(m1, m2):
    lo, hi = sorted((m1, m2))
    g = obs_gate(np.array([lo, hi]), CFG)
    assert g[0] <= g[1] + 1e-12


def test_build_samples_layout():
    s = build_samples(omega_x=np.array([1.0, 2.0]), omega_y=0.0, m=0.0,
                      nu=0.0, omega_t=np.array([3.0, -1.0]),
                      energies=np.array([1.0, 0.5]), harmonic_index=None,
                      cfg=CFG)
    assert s.rows.shape == (2, 5)
    assert np.allclose(s.rows[:, 0], [1.0, 2.0])
    assert np.allclose(s.rows[:, 4], 1.0)
    assert np.allclose(s.targets, [-3.0, 1.0])
