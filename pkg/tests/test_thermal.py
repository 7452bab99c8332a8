"""Thermal maps, wire temperature profiles and the stationary FDM solve."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from emgrid import fixtures
from emgrid.errors import ConfigError
from emgrid.thermal import (ThermalParams, TemperatureProfile,
                            characteristic_length, dump_thermal_map,
                            load_thermal_map, sample_temperature,
                            segment_profile, solve_stationary_fdm)

import oracles
from conftest import single_wire_grid


def _wire_segment():
    return single_wire_grid().segments[0]


# ------------------------------------------------------------ thermal maps

def test_map_round_trip():
    tm = load_thermal_map(fixtures.thermal_map_text("hotspot"))
    again = load_thermal_map(dump_thermal_map(tm))
    assert np.allclose(tm.temps, again.temps, rtol=1e-9)
    assert again.x0 == pytest.approx(tm.x0)
    assert again.dx == pytest.approx(tm.dx)


def test_map_kinds_share_mean():
    means = [load_thermal_map(fixtures.thermal_map_text(k)).mean
             for k in ("uniform", "gradient", "hotspot")]
    assert means[0] == pytest.approx(350.0)
    # file values carry 9 significant digits, so means agree to ~1e-7 K
    assert max(means) - min(means) < 1e-6


def test_map_header_errors():
    with pytest.raises(ConfigError, match="header"):
        load_thermal_map("0 0 10 10 3\n")
    with pytest.raises(ConfigError, match="rows"):
        load_thermal_map("0 0 10 10 2 2\n300,300\n")
    with pytest.raises(ConfigError, match="values"):
        load_thermal_map("0 0 10 10 2 2\n300,300\n300,300,300\n")
    with pytest.raises(ConfigError, match="empty"):
        load_thermal_map("")


def test_sampling_hits_grid_points_exactly():
    tm = load_thermal_map("0 0 10 10 3 3\n"
                          "300,310,320\n330,340,350\n360,370,380\n")
    assert sample_temperature(tm, 0.0, 0.0) == pytest.approx(300.0)
    assert sample_temperature(tm, 20e-6, 20e-6) == pytest.approx(380.0)
    assert sample_temperature(tm, 10e-6, 0.0) == pytest.approx(310.0)
    # cell-center average of the four corners
    assert sample_temperature(tm, 5e-6, 5e-6) == pytest.approx(320.0)


def test_sampling_matches_reference_oracle():
    tm = load_thermal_map(fixtures.thermal_map_text("hotspot"))
    rng = np.random.default_rng(7)
    ny, nx = tm.temps.shape
    for _ in range(200):
        x = tm.x0 + rng.uniform(0, (nx - 1) * tm.dx)
        y = tm.y0 + rng.uniform(0, (ny - 1) * tm.dy)
        assert sample_temperature(tm, x, y) == pytest.approx(
            oracles.bilinear_reference(tm, x, y), rel=1e-12)


def test_sampling_clamps_half_pitch_then_errors():
    tm = load_thermal_map("0 0 10 10 3 3\n"
                          "300,310,320\n330,340,350\n360,370,380\n")
    assert sample_temperature(tm, -4.9e-6, 0.0) == pytest.approx(300.0)
    with pytest.raises(ConfigError, match="outside"):
        sample_temperature(tm, -5.1e-6, 0.0)


@settings(max_examples=50, deadline=None)
@given(fx=st.floats(0.0, 1.0), fy=st.floats(0.0, 1.0))
def test_sampling_stays_within_map_range(fx, fy):
    tm = load_thermal_map(fixtures.thermal_map_text("hotspot"))
    ny, nx = tm.temps.shape
    t = sample_temperature(tm, tm.x0 + fx * (nx - 1) * tm.dx,
                           tm.y0 + fy * (ny - 1) * tm.dy)
    assert tm.temps.min() - 1e-9 <= t <= tm.temps.max() + 1e-9


# ---------------------------------------------------------------- profiles

def test_characteristic_length_value():
    seg = _wire_segment()
    p = ThermalParams()  # k_cu=400, k_ild=1, t_ild=0.2 um
    # sqrt(0.2e-6 * 0.2e-6 * 400 / 1) = 4 um
    assert characteristic_length(seg, p) == pytest.approx(4.0e-6, rel=1e-12)
    half = ThermalParams(k_cu=400, k_ild=2, t_ild=0.2e-6)
    assert characteristic_length(seg, half) == pytest.approx(
        4.0e-6 / np.sqrt(2), rel=1e-12)


def test_profile_hits_both_endpoints():
    rng = np.random.default_rng(3)
    for _ in range(50):
        t1, t2 = rng.uniform(300, 420, size=2)
        prof = TemperatureProfile(t1, t2, tm=rng.uniform(0, 5),
                                  gamma=4e-6, length=rng.uniform(20, 300) * 1e-6)
        assert prof.temperature(-prof.length / 2) == pytest.approx(t1, abs=1e-9)
        assert prof.temperature(+prof.length / 2) == pytest.approx(t2, abs=1e-9)


def test_profile_constant_without_joule_or_gradient():
    prof = TemperatureProfile(350.0, 350.0, tm=0.0, gamma=4e-6, length=1e-4)
    xs = np.linspace(-5e-5, 5e-5, 11)
    assert np.allclose(prof.temperature(xs), 350.0, atol=1e-12)
    assert np.allclose(prof.gradient(xs), 0.0, atol=1e-9)


def test_profile_peak_value():
    prof = TemperatureProfile(350.0, 350.0, tm=2.0, gamma=4e-6, length=1e-4)
    expected = 350.0 + 2.0 * (1.0 - 1.0 / np.cosh(5e-5 / 4e-6))
    assert prof.temperature(0.0) == pytest.approx(expected, rel=1e-12)


def test_gradient_matches_finite_difference():
    prof = TemperatureProfile(340.0, 365.0, tm=1.5, gamma=4e-6, length=1e-4)
    xs = np.linspace(-4.5e-5, 4.5e-5, 21)
    eps = 1e-10
    fd = (prof.temperature(xs + eps) - prof.temperature(xs - eps)) / (2 * eps)
    assert np.allclose(prof.gradient(xs), fd, rtol=1e-5)


def test_segment_profile_samples_map_and_joule_bump():
    grid = single_wire_grid()
    seg = grid.segments[0]
    tm = load_thermal_map("0 0 100 100 2 2\n340,360\n340,360\n")
    p = ThermalParams()
    prof = segment_profile(seg, tm, p, grid, j=1e10)
    assert prof.t1 == pytest.approx(340.0)
    assert prof.t2 == pytest.approx(360.0)
    # rho j^2 Gamma^2 / k_cu = 2.2e-8 * 1e20 * 1.6e-11 / 400
    assert prof.tm == pytest.approx(0.088, rel=1e-9)
    cold = segment_profile(seg, tm, p, grid, j=1e10, include_joule=False)
    assert cold.tm == 0.0


# ------------------------------------------------------------- FDM solve

def test_fdm_constant_case_is_exact():
    seg = _wire_segment()
    sol = solve_stationary_fdm(seg, ThermalParams(), 350.0, 350.0, j=0.0, n=21)
    assert np.allclose(sol, 350.0, atol=1e-9)


def test_fdm_matches_closed_form():
    grid = single_wire_grid()
    seg = grid.segments[0]
    p = ThermalParams()
    prof = segment_profile(seg, None, p, grid, j=2e10)
    prof = TemperatureProfile(338.0, 371.0, prof.tm, prof.gamma, seg.length)
    n = 1001
    xs = np.linspace(-seg.length / 2, seg.length / 2, n)
    sol = solve_stationary_fdm(seg, p, 338.0, 371.0, j=2e10, n=n)
    err = np.abs(sol - prof.temperature(xs)).max() / 350.0
    assert err < 1e-3


def test_fdm_second_order_convergence():
    grid = single_wire_grid()
    seg = grid.segments[0]
    p = ThermalParams()
    prof = segment_profile(seg, None, p, grid, j=2e10)
    prof = TemperatureProfile(338.0, 371.0, prof.tm, prof.gamma, seg.length)
    errs = []
    for n in (51, 101, 201):
        xs = np.linspace(-seg.length / 2, seg.length / 2, n)
        sol = solve_stationary_fdm(seg, p, 338.0, 371.0, j=2e10, n=n)
        errs.append(np.abs(sol - prof.temperature(xs)).max())
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.15)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.15)


def test_fdm_rejects_tiny_grid():
    with pytest.raises(ConfigError):
        solve_stationary_fdm(_wire_segment(), ThermalParams(), 350, 350, 0.0, 2)
