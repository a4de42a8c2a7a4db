import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wallopt.building import Building, OccupancySchedule, Surface, Zone, default_reunion_house
from wallopt.materials import Layer, Material, WallAssembly, baseline_reunion_wall, total_resistance, with_layer_thickness
from wallopt.thermal_sim import (
    AIR_DENSITY, AIR_SPECIFIC_HEAT, SimConfig, discretize, infiltration_conductance, simulate,
    solve_tridiagonal, step_wall, zone_balance,
)
from wallopt.weather import WeatherSeries

STEADY_FLUX = 5.0 / 1.14473  # (30 - 25) / baseline wall resistance with 0.04 + 0.13 films


def _steady_flux(wall, outside, inside, dt=3600.0, max_steps=20000):
    flux = None
    for _ in range(max_steps):
        new, q = step_wall(wall, outside, inside, dt)
        if np.max(np.abs(new.temperatures - wall.temperatures)) < 1e-12:
            return q
        wall, flux = new, q
    return flux


def _constant_weather(days, db=27.0, rh=70.0, ghi=0.0):
    n = 24 * days
    return WeatherSeries([db] * n, [rh] * n, [ghi] * n, [2.0] * n)


def test_discretize_counts_and_partition():
    wall = discretize(baseline_reunion_wall(), 4)
    assert wall.n_nodes == 12
    assert wall.spacings.sum() == pytest.approx(0.2532, abs=1e-12)
    single = discretize(WallAssembly((Layer(Material("m", 1, 1000, 1000), 0.3),)), 5)
    np.testing.assert_allclose(single.spacings, 0.06)
    with pytest.raises(ValueError):
        discretize(baseline_reunion_wall(), 1)


def test_thomas_matches_dense_solve():
    rng = np.random.default_rng(0)
    n = 9
    lower, upper = -rng.uniform(0.1, 1, n - 1), -rng.uniform(0.1, 1, n - 1)
    diag = 3 + rng.uniform(0, 1, n)
    rhs = rng.normal(size=(n, 3))
    dense = np.diag(diag) + np.diag(lower, -1) + np.diag(upper, 1)
    np.testing.assert_allclose(solve_tridiagonal(lower, diag, upper, rhs), np.linalg.solve(dense, rhs))


def test_equilibrium_is_fixed():
    wall = discretize(baseline_reunion_wall(), 4, initial_temperature=26.0)
    new, q = step_wall(wall, 26.0, 26.0, 3600.0)
    assert q == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_allclose(new.temperatures, 26.0, atol=1e-9)


@pytest.mark.parametrize("nodes", [4, 8])
def test_steady_flux_matches_series_resistance(nodes):
    q = _steady_flux(discretize(baseline_reunion_wall(), nodes, 27.5), 30.0, 25.0)
    assert total_resistance(baseline_reunion_wall()) == pytest.approx(1.14473, abs=1e-5)
    assert q == pytest.approx(STEADY_FLUX, rel=0.01)
    assert q == pytest.approx(4.368, abs=1e-3)


def test_grid_refinement_and_symmetry():
    q4 = _steady_flux(discretize(baseline_reunion_wall(), 4, 27.5), 30.0, 25.0)
    q8 = _steady_flux(discretize(baseline_reunion_wall(), 8, 27.5), 30.0, 25.0)
    assert abs(q8 - q4) / abs(q4) < 0.005
    q_swapped = _steady_flux(discretize(baseline_reunion_wall(), 4, 27.5), 25.0, 30.0)
    assert q_swapped == pytest.approx(-q4, rel=1e-9)


def test_step_wall_energy_residual():
    wall = discretize(baseline_reunion_wall(), 4, 20.0)
    dt = 3600.0
    g_ext, _, g_int = wall.conductances()
    for _ in range(50):
        new, q_in = step_wall(wall, 40.0, 25.0, dt)
        stored = np.sum(wall.capacitance * (new.temperatures - wall.temperatures)) / dt
        q_ext = g_ext * (40.0 - new.temperatures[0])
        terms = max(abs(stored), abs(q_ext), abs(q_in))
        assert abs(stored - (q_ext - q_in)) < 1e-6 * terms
        wall = new


def test_zone_balance_examples():
    zone = Zone("z", 20.0, 54.0, infiltration=0.5)
    assert zone_balance(zone, [], 27.0, 0.0, 27.0, 3600.0) == 27.0
    t = 35.0
    for _ in range(100):
        t_new = zone_balance(zone, [], 25.0, 0.0, t, 3600.0)
        assert 25.0 <= t_new <= t
        # Strict decay until the offset is below the float spacing at 25 C.
        assert t_new < t or t - 25.0 < 1e-13
        t = t_new
    gains = 300.0
    t = 25.0
    for _ in range(2000):
        t = zone_balance(zone, [], 25.0, gains, t, 3600.0)
    m_dot_c = AIR_DENSITY * 54.0 * 0.5 / 3600.0 * AIR_SPECIFIC_HEAT
    assert infiltration_conductance(zone) == pytest.approx(m_dot_c)
    assert t - 25.0 == pytest.approx(gains / m_dot_c, rel=0.01)


def test_sim_config_validation():
    for bad in ({"timestep": 0}, {"timestep": 3601}, {"nodes_per_layer": 1}, {"warmup_days": -1}):
        with pytest.raises(ValueError):
            SimConfig(**bad)
    assert SimConfig(timestep=1000).substeps == 4


def test_constant_weather_converges(house):
    # Occupancy gains vary by hour, so switch them off to leave only constant forcing.
    idle = Building(house.zones, OccupancySchedule({z.name: np.zeros(168) for z in house.zones}), house.assemblies)
    series = simulate(idle, _constant_weather(60, ghi=300.0), SimConfig(warmup_days=0))
    tail = np.abs(np.diff(series.air_temperature[-48:], axis=0))
    assert tail.max() < 0.01
    assert len(series) == 60 * 24


def test_no_forcing_is_fixed_point():
    wall = baseline_reunion_wall()
    zone = Zone("z", 20.0, 54.0, surfaces=(Surface("w", 30.0, 0.0),))
    b = Building([zone], OccupancySchedule({"z": np.zeros(168)}), {"w": wall})
    series = simulate(b, _constant_weather(10, db=26.0), SimConfig(warmup_days=1))
    assert (series.air_temperature == 26.0).all()
    assert (series.mean_radiant_temperature == 26.0).all()


def _swing(series, zone):
    t = series.column(zone)["air_temperature"].reshape(-1, 24)
    return np.mean(t.max(1) - t.min(1))


def test_thicker_concrete_damps_swing(house, tropical_month):
    thick = default_reunion_house(with_layer_thickness(baseline_reunion_wall(), 2, 0.4064))
    a = simulate(house, tropical_month)
    b = simulate(thick, tropical_month)
    for zone in a.zones:
        assert _swing(b, zone) < _swing(a, zone)


def test_default_year_is_warmer_than_outdoors(house, tropical_year):
    series = simulate(house, tropical_year)
    assert len(series) == (365 - 7) * 24
    outdoor = tropical_year.dry_bulb[7 * 24:].mean()
    indoor = series.air_temperature.mean()
    assert outdoor < indoor < outdoor + 4.0
    assert series.max_energy_residual < 1e-6
    np.testing.assert_array_equal(series.relative_humidity[:, 0], tropical_year.relative_humidity[7 * 24:])
    assert (series.air_velocity == 0.15).all()


def test_determinism(house, tropical_month):
    a, b = simulate(house, tropical_month), simulate(house, tropical_month)
    assert np.array_equal(a.air_temperature, b.air_temperature)
    assert np.array_equal(a.mean_radiant_temperature, b.mean_radiant_temperature)


@settings(max_examples=8, deadline=None)
@given(st.floats(1.0, 3600.0))
def test_stable_for_any_timestep(house, dt):
    series = simulate(house, _constant_weather(3, ghi=500.0), SimConfig(timestep=dt, warmup_days=0))
    assert np.isfinite(series.air_temperature).all()
    assert series.max_energy_residual < 1e-6


@pytest.mark.slow
@pytest.mark.parametrize("dt", [3600.0, 900.0])
def test_full_year_stability(house, tropical_year, dt):
    series = simulate(house, tropical_year, SimConfig(timestep=dt))
    assert np.isfinite(series.air_temperature).all()
    assert np.isfinite(series.mean_radiant_temperature).all()
    assert series.max_energy_residual < 1e-6


def test_hour_of_week_alignment(house, tropical_month):
    series = simulate(house, tropical_month, SimConfig(warmup_days=7))
    assert series.first_hour == 168
    assert series.hour_of_week[0] == 0


def test_zone_csv(tmp_path, house):
    series = simulate(house, _constant_weather(2), SimConfig(warmup_days=1))
    series.write_csv(tmp_path / "z.csv")
    lines = (tmp_path / "z.csv").read_text().splitlines()
    assert lines[0] == "hour,zone,air_c,mrt_c,rh_pct,vel_ms"
    assert len(lines) == 1 + 24 * 5


def test_warmup_longer_than_weather(house):
    with pytest.raises(ValueError):
        simulate(house, _constant_weather(2), SimConfig(warmup_days=2))
