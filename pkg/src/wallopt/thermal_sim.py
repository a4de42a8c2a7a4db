"""Free-running multi-zone simulation.

Walls are 1-D cell-centred finite-volume stacks marched with backward Euler;
each zone's air node is solved implicitly together with its walls, so the
scheme is stable for any time step up to one hour.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .building import HOURS_PER_WEEK, Building, Zone
from .materials import WallAssembly
from .weather import VERTICAL_INCIDENCE_FACTOR, WeatherSeries, sol_air_series

AIR_DENSITY = 1.2  # kg/m3
AIR_SPECIFIC_HEAT = 1005.0  # J/(kg K)

ZONE_CSV_HEADER = ("hour", "zone", "air_c", "mrt_c", "rh_pct", "vel_ms")


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    timestep: float = 3600.0  # s
    nodes_per_layer: int = 4
    warmup_days: int = 7
    air_velocity: float = 0.15  # m/s
    initial_temperature: float | None = None  # defaults to first dry-bulb
    incidence_factor: float = VERTICAL_INCIDENCE_FACTOR
    longwave_correction: float = 0.0

    def __post_init__(self):
        if not 0 < self.timestep <= 3600:
            raise ValueError(f"timestep must lie in (0, 3600] s, got {self.timestep}")
        if self.nodes_per_layer < 2:
            raise ValueError("nodes_per_layer must be >= 2")
        if self.warmup_days < 0:
            raise ValueError("warmup_days must be >= 0")
        if self.air_velocity < 0:
            raise ValueError("air_velocity must be >= 0")

    @property
    def substeps(self) -> int:
        """Steps per weather hour; the effective step is 3600 / substeps <= timestep."""
        return math.ceil(3600.0 / self.timestep - 1e-9)


@dataclass(frozen=True, eq=False)
class DiscretizedWall:
    temperatures: np.ndarray  # C, outside -> inside
    spacings: np.ndarray  # control-volume widths, m
    conductivity: np.ndarray
    density: np.ndarray
    specific_heat: np.ndarray
    exterior_film: float
    interior_film: float

    def __post_init__(self):
        n = len(self.temperatures)
        if not all(len(getattr(self, f)) == n for f in ("spacings", "conductivity", "density", "specific_heat")):
            raise ValueError("node arrays differ in length")
        if not np.isfinite(self.temperatures).all():
            raise ValueError("non-finite wall temperature")

    @property
    def n_nodes(self) -> int:
        return len(self.temperatures)

    @property
    def capacitance(self) -> np.ndarray:
        """Per-node heat capacity in J/(m2 K)."""
        return self.density * self.specific_heat * self.spacings

    def conductances(self) -> tuple[float, np.ndarray, float]:
        """(exterior, internal node-to-node, interior) conductances in W/(m2 K)."""
        half = self.spacings / (2 * self.conductivity)
        g_ext = 1.0 / (self.exterior_film + half[0])
        g_int = 1.0 / (self.interior_film + half[-1])
        g_mid = 1.0 / (half[:-1] + half[1:])
        return g_ext, g_mid, g_int


def discretize(assembly: WallAssembly, nodes_per_layer: int, initial_temperature: float = 20.0) -> DiscretizedWall:
    if nodes_per_layer < 2:
        raise ValueError("nodes_per_layer must be >= 2")
    dx, k, rho, cp = [], [], [], []
    for layer in assembly.layers:
        m = layer.material
        dx += [layer.thickness / nodes_per_layer] * nodes_per_layer
        k += [m.conductivity] * nodes_per_layer
        rho += [m.density] * nodes_per_layer
        cp += [m.specific_heat] * nodes_per_layer
    n = len(dx)
    return DiscretizedWall(
        temperatures=np.full(n, float(initial_temperature)),
        spacings=np.array(dx),
        conductivity=np.array(k),
        density=np.array(rho),
        specific_heat=np.array(cp),
        exterior_film=assembly.exterior_film,
        interior_film=assembly.interior_film,
    )


def solve_tridiagonal(lower, diag, upper, rhs):
    """Thomas algorithm. `rhs` may be 1-D or 2-D (one column per system)."""
    n = len(diag)
    c = np.empty(n - 1)
    d = np.array(rhs, dtype=float)
    b0 = diag[0]
    if b0 == 0:
        raise ZeroDivisionError("singular tridiagonal system")
    c[0:1] = upper[0:1] / b0 if n > 1 else c[0:1]
    d[0] = d[0] / b0
    for i in range(1, n):
        denom = diag[i] - lower[i - 1] * c[i - 1]
        if denom == 0:
            raise ZeroDivisionError("singular tridiagonal system")
        if i < n - 1:
            c[i] = upper[i] / denom
        d[i] = (d[i] - lower[i - 1] * d[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        d[i] = d[i] - c[i] * d[i + 1]
    return d


def _system(wall: DiscretizedWall, dt: float):
    g_ext, g_mid, g_int = wall.conductances()
    c_dt = wall.capacitance / dt
    diag = c_dt.copy()
    diag[:-1] += g_mid
    diag[1:] += g_mid
    diag[0] += g_ext
    diag[-1] += g_int
    return -g_mid, diag, -g_mid, c_dt, g_ext, g_int


def step_wall(wall: DiscretizedWall, sol_air_temp: float, zone_air_temp: float, dt: float):
    """Advance one implicit step with fixed boundary temperatures.

    Returns the new wall and the heat flux into the zone in W/m2
    (positive heats the zone).
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    lower, diag, upper, c_dt, g_ext, g_int = _system(wall, dt)
    rhs = c_dt * wall.temperatures
    rhs[0] += g_ext * sol_air_temp
    rhs[-1] += g_int * zone_air_temp
    t_new = solve_tridiagonal(lower, diag, upper, rhs)
    assert np.isfinite(t_new).all(), "wall solve produced non-finite temperatures"
    flux = g_int * (t_new[-1] - zone_air_temp)
    return replace(wall, temperatures=t_new), float(flux)


def zone_balance(zone: Zone, surface_fluxes, outdoor_temp: float, gains: float, air_temp: float, dt: float) -> float:
    """New zone air temperature from a lumped air balance.

    `surface_fluxes` are total surface heat flows into the air in W. Fluxes
    and gains are held over the step; infiltration is implicit.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    cap = AIR_DENSITY * AIR_SPECIFIC_HEAT * zone.volume
    h_inf = infiltration_conductance(zone)
    # Written in the offset from outdoors so round-off cannot overshoot it.
    offset = air_temp - outdoor_temp
    offset = (cap / dt * offset + sum(surface_fluxes) + gains) / (cap / dt + h_inf)
    return outdoor_temp + offset


def infiltration_conductance(zone: Zone) -> float:
    """W/K carried by the zone's air change rate."""
    return AIR_DENSITY * AIR_SPECIFIC_HEAT * zone.volume * zone.infiltration / 3600.0


@dataclass(frozen=True, eq=False)
class ZoneConditionSeries:
    """Hourly indoor conditions, one column per zone."""

    zones: tuple[str, ...]
    air_temperature: np.ndarray  # (hours, zones)
    mean_radiant_temperature: np.ndarray
    relative_humidity: np.ndarray
    air_velocity: np.ndarray
    first_hour: int = 0  # weather hour index of row 0
    max_energy_residual: float = 0.0  # relative, over all zones, walls and steps

    def __len__(self):
        return self.air_temperature.shape[0]

    def index(self, zone: str) -> int:
        try:
            return self.zones.index(zone)
        except ValueError:
            raise KeyError(f"zone {zone!r} not in simulation output") from None

    @property
    def hours(self) -> np.ndarray:
        return self.first_hour + np.arange(len(self))

    @property
    def hour_of_week(self) -> np.ndarray:
        return self.hours % HOURS_PER_WEEK

    def column(self, zone: str) -> dict[str, np.ndarray]:
        j = self.index(zone)
        return {
            "air_temperature": self.air_temperature[:, j],
            "mean_radiant_temperature": self.mean_radiant_temperature[:, j],
            "relative_humidity": self.relative_humidity[:, j],
            "air_velocity": self.air_velocity[:, j],
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(ZONE_CSV_HEADER)
            for i, hour in enumerate(self.hours):
                for j, zone in enumerate(self.zones):
                    w.writerow([
                        int(hour), zone,
                        f"{self.air_temperature[i, j]:.6f}",
                        f"{self.mean_radiant_temperature[i, j]:.6f}",
                        f"{self.relative_humidity[i, j]:.6f}",
                        f"{self.air_velocity[i, j]:.6f}",
                    ])


class _AssemblyGroup:
    """All (zone, assembly) wall columns sharing one assembly, marched together."""

    def __init__(self, assembly: WallAssembly, zone_index, areas, config: SimConfig, t0: float, dt: float):
        self.wall = discretize(assembly, config.nodes_per_layer, t0)
        self.zone_index = np.asarray(zone_index, dtype=int)
        self.areas = np.asarray(areas, dtype=float)
        lower, diag, upper, c_dt, g_ext, g_int = _system(self.wall, dt)
        n = self.wall.n_nodes
        # Dense inverse of a small tridiagonal operator, built column by column.
        self.inverse = solve_tridiagonal(lower, diag, upper, np.eye(n))
        self.c_dt = c_dt
        self.g_ext = g_ext
        self.g_int = g_int
        self.to_ext = self.inverse[:, 0] * g_ext
        self.to_air = self.inverse[:, -1] * g_int
        self.temps = np.full((n, len(self.zone_index)), float(t0))
        self.interior_film = assembly.interior_film
        self.sol_air = None


def _relative(residual, scale):
    out = np.zeros_like(scale)
    nz = scale > 0
    out[nz] = np.abs(residual[nz]) / scale[nz]
    out[~nz] = np.abs(residual[~nz])
    return out


def simulate(building: Building, weather: WeatherSeries, config: SimConfig | None = None) -> ZoneConditionSeries:
    """March every zone of `building` through `weather`, hourly output after warmup."""
    config = config or SimConfig()
    hours_total = len(weather)
    warmup_hours = 24 * config.warmup_days
    if warmup_hours >= hours_total:
        raise ValueError(
            f"warmup of {config.warmup_days} days leaves no output from a {weather.days}-day weather series"
        )
    n_sub = config.substeps
    dt = 3600.0 / n_sub
    t0 = float(weather.dry_bulb[0]) if config.initial_temperature is None else float(config.initial_temperature)

    zones = building.zones
    nz = len(zones)
    cap = np.array([AIR_DENSITY * AIR_SPECIFIC_HEAT * z.volume for z in zones])
    h_inf = np.array([infiltration_conductance(z) for z in zones])
    cap_dt = cap / dt
    gains_week = np.array([
        building.schedule.weekly(z.name) * building.schedule.sensible_gain for z in zones
    ]).T  # (168, nz)

    groups = []
    for name, assembly in building.assemblies.items():
        zi, areas = [], []
        for j, z in enumerate(zones):
            a = sum(s.area for s in z.surfaces if s.assembly == name)
            if a > 0:
                zi.append(j)
                areas.append(a)
        if zi:
            # States are deviations from t0: an equilibrium at t0 is exactly zero.
            g = _AssemblyGroup(assembly, zi, areas, config, 0.0, dt)
            g.sol_air = sol_air_series(weather, assembly.solar_absorptance, assembly.exterior_film,
                                       config.longwave_correction, config.incidence_factor) - t0
            groups.append(g)
    area_total = np.zeros(nz)
    for g in groups:
        np.add.at(area_total, g.zone_index, g.areas)

    # Implicit coupling coefficient of each zone's air to its own walls.
    coupling = np.zeros(nz)
    for g in groups:
        np.add.at(coupling, g.zone_index, g.areas * g.g_int * (1.0 - g.to_air[-1]))
    air_lhs = cap_dt + h_inf + coupling

    n_out = hours_total - warmup_hours
    air_out = np.empty((n_out, nz))
    mrt_out = np.empty((n_out, nz))
    t_air = np.zeros(nz)
    max_resid = 0.0
    outdoor = weather.dry_bulb - t0

    for hour in range(hours_total):
        t_out = outdoor[hour]
        gains = gains_week[(weather.start_hour + hour) % HOURS_PER_WEEK]
        for _ in range(n_sub):
            rhs_air = cap_dt * t_air + gains + h_inf * t_out
            partial = []
            for g in groups:
                base = g.inverse @ (g.c_dt[:, None] * g.temps) + g.to_ext[:, None] * g.sol_air[hour]
                partial.append(base)
                np.add.at(rhs_air, g.zone_index, g.areas * g.g_int * base[-1])
            t_air_new = rhs_air / air_lhs

            wall_flow = np.zeros(nz)
            for g, base in zip(groups, partial):
                ta = t_air_new[g.zone_index]
                new = base + g.to_air[:, None] * ta[None, :]
                q_in = g.g_int * (new[-1] - ta)
                q_ext = g.g_ext * (g.sol_air[hour] - new[0])
                stored = g.c_dt @ (new - g.temps)
                scale = np.maximum(np.abs(q_in), np.abs(q_ext))
                scale = np.maximum(scale, np.abs(stored))
                resid = _relative(stored - (q_ext - q_in), scale)
                max_resid = max(max_resid, float(resid.max()))
                np.add.at(wall_flow, g.zone_index, g.areas * q_in)
                g.temps = new
            inf_flow = h_inf * (t_out - t_air_new)
            stored_air = cap_dt * (t_air_new - t_air)
            scale = np.max(np.abs([stored_air, wall_flow, gains, inf_flow]), axis=0)
            resid = _relative(stored_air - (wall_flow + gains + inf_flow), scale)
            max_resid = max(max_resid, float(resid.max()))
            t_air = t_air_new

        if hour >= warmup_hours:
            i = hour - warmup_hours
            air_out[i] = t_air + t0
            surf = np.zeros(nz)
            for g in groups:
                ta = t_air[g.zone_index]
                ts = ta + g.g_int * (g.temps[-1] - ta) * g.interior_film
                np.add.at(surf, g.zone_index, g.areas * ts)
            mrt_out[i] = np.where(area_total > 0, surf / np.where(area_total > 0, area_total, 1.0), t_air) + t0

    if not (np.isfinite(air_out).all() and np.isfinite(mrt_out).all()):
        raise SimulationError("simulation produced non-finite temperatures")
    rh = np.repeat(weather.relative_humidity[warmup_hours:, None], nz, axis=1)
    vel = np.full((n_out, nz), config.air_velocity)
    return ZoneConditionSeries(
        zones=tuple(z.name for z in zones),
        air_temperature=air_out,
        mean_radiant_temperature=mrt_out,
        relative_humidity=rh,
        air_velocity=vel,
        first_hour=weather.start_hour + warmup_hours,
        max_energy_residual=max_resid,
    )
