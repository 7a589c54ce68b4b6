import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ionize.asymptotics import (
    DecayFit,
    amplitude_bridge,
    fit_power_law,
    lattice_envelope,
    local_maxima,
)


def test_pure_power_raw():
    t = np.linspace(1, 100, 2000)
    fit = fit_power_law(t, 3 * t**-1.5, (10, 100), "raw-regression")
    assert fit.exponent == pytest.approx(-1.5, abs=1e-12)
    assert fit.amplitude == pytest.approx(3.0, rel=1e-12)


def test_modulated_power_envelope():
    t = np.linspace(1, 200, 40000)
    y = t**-1.5 * (1 + 0.3 * np.cos(5 * t))
    fit = fit_power_law(t, y, (20, 200), "envelope")
    assert abs(fit.exponent + 1.5) < 0.02


def test_transient_on_late_window():
    t = np.linspace(0.5, 100, 20000)
    fit = fit_power_law(t, t**-1.5 + np.exp(-t), (20, 100), "raw-regression")
    assert abs(fit.exponent + 1.5) < 0.01


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, -0.5), st.floats(-3, 3))
def test_log_shift_equivariance(k, logc):
    t = np.linspace(1, 50, 500)
    a = fit_power_law(t, t**k, (5, 50), "raw-regression")
    b = fit_power_law(t, math.exp(logc) * t**k, (5, 50), "raw-regression")
    assert b.exponent == pytest.approx(a.exponent, abs=1e-10)
    assert b.log_amplitude - a.log_amplitude == pytest.approx(logc, abs=1e-10)


def test_window_too_short():
    t = np.linspace(1, 10, 100)
    with pytest.raises(ValueError, match="window too short"):
        fit_power_law(t, t**-1.5, (9.5, 10), "raw-regression")
    with pytest.raises(ValueError, match="window too short"):
        fit_power_law(t, t**-1.5, (2, 10), "envelope")


def test_default_window_and_bad_input():
    t = np.linspace(1, 100, 1000)
    assert fit_power_law(t, t**-2, method="raw-regression").window == (25.0, 100.0)
    with pytest.raises(ValueError):
        fit_power_law(t, np.zeros_like(t), (10, 100), "raw-regression")
    with pytest.raises(ValueError):
        fit_power_law(t, t, (10, 100), "median")
    with pytest.raises(ValueError):
        DecayFit(-1.5, 0.0, (2.0, 1.0), 0.0, "envelope")


def test_local_maxima():
    assert list(local_maxima(np.array([0, 1, 0, 2, 2, 1]))) == [1, 4]
    assert local_maxima(np.array([1.0])).size == 0


def test_bridge_synthetic():
    d = 0.4 - 0.3j
    t = np.linspace(1, 100, 5000)
    fit = fit_power_law(t, abs(d) / (2 * math.sqrt(math.pi)) * t**-1.5, (20, 100), "raw-regression")
    rep = amplitude_bridge(fit, d)
    assert rep.ratio == pytest.approx(1.0, abs=1e-6)
    assert rep.passed and rep.note == ""


def test_bridge_tolerance_edges():
    fit = DecayFit(-1.5, math.log(1.0), (1, 2), 0.0, "raw-regression")
    two_sqrt_pi = 2 * math.sqrt(math.pi)
    assert amplitude_bridge(fit, 0.81 * two_sqrt_pi).passed
    assert not amplitude_bridge(fit, 0.79 * two_sqrt_pi).passed


def test_bridge_without_branch_term():
    fit = DecayFit(-1.5, 0.0, (1, 2), 0.0, "envelope")
    rep = amplitude_bridge(fit, 0.0)
    assert rep.ratio == math.inf and not rep.passed
    assert "no branch contribution" in rep.note


def test_lattice_envelope():
    assert lattice_envelope({0: 0.5}) == pytest.approx(0.5)
    assert lattice_envelope({0: 1.0, 1: 0.5, -1: 0.5}) == pytest.approx(2.0)
    # components out of phase never add up fully
    assert lattice_envelope({0: 1.0, 2: 1j}) == pytest.approx(2.0, abs=1e-6)
    assert lattice_envelope({0: 1.0, 1: -0.25, -1: -0.25}) == pytest.approx(1.5, abs=1e-6)


def test_bridge_with_lattice():
    fit = DecayFit(-1.5, math.log(2.0 / (2 * math.sqrt(math.pi))), (1, 2), 0.0, "envelope")
    rep = amplitude_bridge(fit, 1.0, lattice={0: 1.0, 1: 0.5, -1: 0.5})
    assert rep.ratio == pytest.approx(1.0) and rep.passed


def test_to_json_target():
    fit = DecayFit(-1.4, 0.0, (1, 2), 0.0, "envelope", 7)
    assert fit.to_json((-1.8, -1.2))["pass"] is True
    assert fit.to_json((-1.3, -1.2))["pass"] is False
