"""Five-zone house model: zones, exterior surfaces, occupancy and gains."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .materials import WallAssembly, baseline_reunion_wall

HOURS_PER_WEEK = 168
WEEKDAYS = 5  # hour_of_week 0 is Monday 00:00

DEFAULT_SENSIBLE_GAIN = 70.0  # W per occupant
DEFAULT_LATENT_GAIN = 45.0  # W per occupant
DEFAULT_INFILTRATION = 0.5  # ach
DEFAULT_ZONE_HEIGHT = 2.7  # m


@dataclass(frozen=True)
class Surface:
    assembly: str
    area: float  # m2
    azimuth: float  # degrees clockwise from north

    def __post_init__(self):
        if not self.area > 0:
            raise ValueError(f"surface area must be > 0, got {self.area}")
        if not 0.0 <= self.azimuth < 360.0:
            raise ValueError(f"azimuth must lie in [0, 360), got {self.azimuth}")


@dataclass(frozen=True)
class Zone:
    name: str
    floor_area: float
    volume: float
    infiltration: float = DEFAULT_INFILTRATION
    surfaces: tuple[Surface, ...] = ()
    max_occupants: int = 4

    def __post_init__(self):
        object.__setattr__(self, "surfaces", tuple(self.surfaces))
        if not self.floor_area > 0:
            raise ValueError(f"zone {self.name!r}: floor area must be > 0")
        if not self.volume > 0:
            raise ValueError(f"zone {self.name!r}: volume must be > 0")
        if self.infiltration < 0:
            raise ValueError(f"zone {self.name!r}: infiltration must be >= 0")

    @property
    def exterior_area(self) -> float:
        return sum(s.area for s in self.surfaces)


class OccupancySchedule:
    """Weekly occupant counts per zone (7 days x 24 hours) and per-occupant gains.

    Grids are stored read-only; row 0 is Monday.
    """

    def __init__(self, grids: Mapping[str, object], sensible_gain=DEFAULT_SENSIBLE_GAIN,
                 latent_gain=DEFAULT_LATENT_GAIN):
        self._grids = {}
        for zone, grid in grids.items():
            arr = np.array(grid, dtype=int).reshape(7, 24)
            if (arr < 0).any():
                raise ValueError(f"negative occupant count in schedule for {zone!r}")
            arr.setflags(write=False)
            self._grids[zone] = arr
        if sensible_gain < 0 or latent_gain < 0:
            raise ValueError("occupant gains must be >= 0")
        self.sensible_gain = float(sensible_gain)
        self.latent_gain = float(latent_gain)

    @classmethod
    def from_days(cls, weekday: Mapping[str, list], weekend: Mapping[str, list], **gains):
        """Build a schedule from one weekday and one weekend 24-hour profile per zone."""
        grids = {}
        for zone in weekday:
            wd = np.asarray(weekday[zone], dtype=int)
            we = np.asarray(weekend[zone], dtype=int)
            grids[zone] = np.vstack([wd] * WEEKDAYS + [we] * (7 - WEEKDAYS))
        return cls(grids, **gains)

    @property
    def zones(self) -> tuple[str, ...]:
        return tuple(self._grids)

    def grid(self, zone: str) -> np.ndarray:
        try:
            return self._grids[zone]
        except KeyError:
            raise KeyError(f"no schedule for zone {zone!r}") from None

    def weekly(self, zone: str) -> np.ndarray:
        """Occupant counts for hour_of_week 0..167."""
        return self.grid(zone).reshape(HOURS_PER_WEEK)

    def count(self, zone: str, hour_of_week: int) -> int:
        if not 0 <= hour_of_week < HOURS_PER_WEEK:
            raise ValueError(f"hour_of_week must lie in [0, {HOURS_PER_WEEK}), got {hour_of_week}")
        return int(self.weekly(zone)[hour_of_week])

    def person_hours(self, zone: str) -> int:
        return int(self.grid(zone).sum())


@dataclass(frozen=True)
class Building:
    zones: tuple[Zone, ...]
    schedule: OccupancySchedule
    assemblies: Mapping[str, WallAssembly] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "zones", tuple(self.zones))
        object.__setattr__(self, "assemblies", dict(self.assemblies))
        names = [z.name for z in self.zones]
        if len(set(names)) != len(names):
            raise ValueError(f"zone names must be unique: {names}")
        for z in self.zones:
            for s in z.surfaces:
                if s.assembly not in self.assemblies:
                    raise ValueError(f"zone {z.name!r} references unknown assembly {s.assembly!r}")
            if z.name not in self.schedule.zones:
                raise ValueError(f"zone {z.name!r} has no occupancy schedule")

    @property
    def floor_area(self) -> float:
        return sum(z.floor_area for z in self.zones)

    def zone(self, name: str) -> Zone:
        for z in self.zones:
            if z.name == name:
                return z
        raise KeyError(f"unknown zone {name!r}")

    def with_assembly(self, name: str, assembly: WallAssembly) -> Building:
        if name not in self.assemblies:
            raise KeyError(f"unknown assembly {name!r}")
        assemblies = dict(self.assemblies)
        assemblies[name] = assembly
        return Building(self.zones, self.schedule, assemblies)


def occupied_fraction(building: Building, zone_name: str) -> float:
    """Share of the family's weekly person-hours spent in one zone."""
    building.zone(zone_name)
    total = sum(building.schedule.person_hours(z.name) for z in building.zones)
    if total == 0:
        raise ValueError("schedule has no occupied hours")
    return building.schedule.person_hours(zone_name) / total


def internal_gains(building: Building, zone_name: str, hour_of_week: int) -> float:
    """Sensible occupant gain in W for one zone at one hour of the week."""
    building.zone(zone_name)
    return building.schedule.count(zone_name, hour_of_week) * building.schedule.sensible_gain


def latent_gains(building: Building, zone_name: str, hour_of_week: int) -> float:
    building.zone(zone_name)
    return building.schedule.count(zone_name, hour_of_week) * building.schedule.latent_gain


def _profile(*entries):
    # entries: (hours, (main, kitchen, bedroom1, bedroom2, toilet))
    out = np.zeros((5, 24), dtype=int)
    for hours, counts in entries:
        for h in hours:
            out[:, h] += counts
    return out


# Counts are awake occupants. Weekdays: parents home 06-08, 12-14 and 19-22,
# children 06-08 and 18-21; weekends the whole family is home 07-22. Room
# allocation is calibrated so weekly person-hour shares match the comfort
# weighting coefficients.
_WEEKDAY = _profile(
    ([6], (0, 2, 2, 0, 0)),
    ([7], (2, 2, 0, 0, 0)),
    ([12], (0, 2, 0, 0, 0)),
    ([13], (2, 0, 0, 0, 0)),
    ([18], (2, 0, 0, 0, 0)),
    ([19], (2, 2, 0, 0, 0)),
    ([20], (0, 4, 0, 0, 0)),
    ([21], (2, 0, 0, 0, 0)),
)
_WEEKEND = _profile(
    ([7], (0, 0, 2, 2, 0)),
    ([8], (0, 4, 0, 0, 0)),
    ([9], (4, 0, 0, 0, 0)),
    ([10, 11], (2, 0, 2, 0, 0)),
    ([12], (0, 4, 0, 0, 0)),
    ([13], (4, 0, 0, 0, 0)),
    ([14], (0, 0, 3, 1, 0)),
    ([15, 16, 17], (2, 0, 2, 0, 0)),
    ([18], (2, 0, 0, 2, 0)),
    ([19], (0, 4, 0, 0, 0)),
    ([20], (4, 0, 0, 0, 0)),
    ([21], (1, 0, 3, 0, 0)),
)

ZONE_NAMES = ("main_room", "kitchen", "bedroom1", "bedroom2", "toilet")

# (floor area m2, [(exterior wall area m2, azimuth deg), ...])
_ZONE_LAYOUT = {
    "main_room": (60.0, [(27.0, 0.0), (16.2, 90.0)]),
    "kitchen": (30.0, [(16.2, 90.0), (13.5, 180.0)]),
    "bedroom1": (25.0, [(13.5, 180.0), (13.5, 270.0)]),
    "bedroom2": (25.0, [(13.5, 270.0), (13.5, 0.0)]),
    "toilet": (22.0, [(14.85, 0.0)]),
}


def default_reunion_house(assembly: WallAssembly | None = None,
                          infiltration: float = DEFAULT_INFILTRATION,
                          height: float = DEFAULT_ZONE_HEIGHT) -> Building:
    """Single-storey 162 m2 house with five free-running zones."""
    assembly = assembly or baseline_reunion_wall()
    zones = []
    for name in ZONE_NAMES:
        area, walls = _ZONE_LAYOUT[name]
        zones.append(Zone(
            name=name,
            floor_area=area,
            volume=area * height,
            infiltration=infiltration,
            surfaces=tuple(Surface("exterior_wall", a, az) for a, az in walls),
        ))
    schedule = OccupancySchedule.from_days(
        weekday={n: _WEEKDAY[i] for i, n in enumerate(ZONE_NAMES)},
        weekend={n: _WEEKEND[i] for i, n in enumerate(ZONE_NAMES)},
    )
    return Building(tuple(zones), schedule, {"exterior_wall": assembly})
