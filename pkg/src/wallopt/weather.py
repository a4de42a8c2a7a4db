"""Hourly weather series: CSV ingestion, a synthetic tropical generator and
sol-air boundary temperatures."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CSV_HEADER = ("hour", "dry_bulb_c", "rh_pct", "ghi_wm2", "wind_ms")

REUNION_LATITUDE = -21.0

# Incident irradiance on a vertical wall as a fraction of global horizontal.
VERTICAL_INCIDENCE_FACTOR = 0.5
# Long-wave sky correction (K) for horizontal surfaces; vertical surfaces use 0.
HORIZONTAL_LONGWAVE_CORRECTION = 3.9


class WeatherFormatError(ValueError):
    pass


@dataclass(frozen=True)
class WeatherRecord:
    timestamp: int
    dry_bulb: float
    relative_humidity: float
    global_horizontal_irradiance: float
    wind_speed: float


@dataclass(frozen=True, eq=False)
class WeatherSeries:
    """Hourly series stored column-wise. Arrays are read-only."""

    dry_bulb: np.ndarray
    relative_humidity: np.ndarray
    global_horizontal_irradiance: np.ndarray
    wind_speed: np.ndarray
    latitude: float = REUNION_LATITUDE
    start_hour: int = 0

    def __post_init__(self):
        cols = {}
        for name in ("dry_bulb", "relative_humidity", "global_horizontal_irradiance", "wind_speed"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
            cols[name] = arr
        n = len(self.dry_bulb)
        if n == 0:
            raise WeatherFormatError("weather series is empty")
        if any(len(a) != n for a in cols.values()):
            raise WeatherFormatError("weather columns differ in length")
        if n % 24:
            raise WeatherFormatError(f"series length {n} is not a whole number of days")
        if not all(np.isfinite(a).all() for a in cols.values()):
            raise WeatherFormatError("weather series contains non-finite values")
        rh = self.relative_humidity
        if (rh < 0).any() or (rh > 100).any():
            raise WeatherFormatError("relative humidity outside [0, 100] %")
        if (self.global_horizontal_irradiance < 0).any():
            raise WeatherFormatError("negative irradiance")
        if (self.wind_speed < 0).any():
            raise WeatherFormatError("negative wind speed")

    def __len__(self):
        return len(self.dry_bulb)

    def __getitem__(self, i: int) -> WeatherRecord:
        return WeatherRecord(
            timestamp=self.start_hour + i,
            dry_bulb=float(self.dry_bulb[i]),
            relative_humidity=float(self.relative_humidity[i]),
            global_horizontal_irradiance=float(self.global_horizontal_irradiance[i]),
            wind_speed=float(self.wind_speed[i]),
        )

    def __eq__(self, other):
        if not isinstance(other, WeatherSeries):
            return NotImplemented
        return (
            self.latitude == other.latitude
            and self.start_hour == other.start_hour
            and np.array_equal(self.dry_bulb, other.dry_bulb)
            and np.array_equal(self.relative_humidity, other.relative_humidity)
            and np.array_equal(self.global_horizontal_irradiance, other.global_horizontal_irradiance)
            and np.array_equal(self.wind_speed, other.wind_speed)
        )

    @property
    def days(self) -> int:
        return len(self) // 24

    def daily_max(self) -> np.ndarray:
        return self.dry_bulb.reshape(-1, 24).max(axis=1)


def parse_weather_csv(path) -> WeatherSeries:
    """Read an hourly weather CSV with header ``hour,dry_bulb_c,rh_pct,ghi_wm2,wind_ms``.

    Raises
    ------
    FileNotFoundError
        If `path` does not exist.
    WeatherFormatError
        On a bad header, malformed or out-of-range row (line number given),
        or non-consecutive hours.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"weather file not found: {path}")
    hours, cols = [], [[], [], [], []]
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise WeatherFormatError(f"{path}:1: expected header {','.join(CSV_HEADER)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(CSV_HEADER):
                raise WeatherFormatError(f"{path}:{line}: expected {len(CSV_HEADER)} fields, got {len(row)}")
            try:
                hour = int(row[0])
                values = [float(c) for c in row[1:]]
            except ValueError:
                raise WeatherFormatError(f"{path}:{line}: malformed row {row!r}") from None
            if not all(math.isfinite(v) for v in values):
                raise WeatherFormatError(f"{path}:{line}: non-finite value")
            db, rh, ghi, wind = values
            if not 0.0 <= rh <= 100.0:
                raise WeatherFormatError(f"{path}:{line}: relative humidity {rh} outside [0, 100]")
            if ghi < 0:
                raise WeatherFormatError(f"{path}:{line}: negative irradiance {ghi}")
            if wind < 0:
                raise WeatherFormatError(f"{path}:{line}: negative wind speed {wind}")
            if hours and hour != hours[-1] + 1:
                raise WeatherFormatError(
                    f"{path}:{line}: non-hourly spacing (hour {hour} follows {hours[-1]})"
                )
            hours.append(hour)
            for col, v in zip(cols, values):
                col.append(v)
    if not hours:
        raise WeatherFormatError(f"{path}: no data rows")
    if len(hours) % 24:
        raise WeatherFormatError(f"{path}: {len(hours)} rows is not a whole number of days")
    return WeatherSeries(*cols, start_hour=hours[0])


def write_weather_csv(series: WeatherSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for i in range(len(series)):
            writer.writerow([
                series.start_hour + i,
                repr(float(series.dry_bulb[i])),
                repr(float(series.relative_humidity[i])),
                repr(float(series.global_horizontal_irradiance[i])),
                repr(float(series.wind_speed[i])),
            ])


def synthetic_tropical(days: int, seed: int = 0) -> WeatherSeries:
    """Deterministic Reunion-like hourly weather starting 1 January 00:00.

    Dry-bulb is an annual cosine (warmest late January, southern hemisphere)
    plus a diurnal cosine peaking at 14:00 whose amplitude is perturbed per
    day by seeded noise; the diurnal shape has zero daily mean so the annual
    mean sits at 26.5 C. Relative humidity moves opposite to temperature
    inside 70-90 %, irradiance is a half-sine between 06:00 and 18:00 scaled
    by a seeded daily clearness factor.
    """
    if days < 1:
        raise ValueError(f"days must be >= 1, got {days}")
    rng = np.random.default_rng(seed)
    day = np.arange(days)
    hour = np.arange(24)

    season = np.cos(2 * np.pi * (day - 25) / 365.0)
    daily_mean = 26.5 + 1.2 * season
    amplitude = 5.0 + 0.8 * season + rng.uniform(-0.4, 0.4, days)
    diurnal = np.cos(2 * np.pi * (hour - 14) / 24.0)
    dry_bulb = daily_mean[:, None] + amplitude[:, None] * diurnal[None, :]

    rh = 80.0 - 7.0 * diurnal[None, :] + rng.uniform(-2.0, 2.0, (days, 24))
    rh = np.clip(rh, 70.0, 90.0)

    clearness = rng.uniform(0.6, 1.0, days)
    peak = 875.0 + 125.0 * season
    solar_hour = hour + 0.5
    shape = np.where((solar_hour > 6) & (solar_hour < 18), np.sin(np.pi * (solar_hour - 6) / 12.0), 0.0)
    ghi = (peak * clearness)[:, None] * shape[None, :]

    wind = 3.0 + 1.5 * np.maximum(diurnal, 0.0)[None, :] + rng.uniform(-1.0, 1.0, (days, 24))
    wind = np.maximum(wind, 0.0)

    return WeatherSeries(
        dry_bulb=dry_bulb.ravel(),
        relative_humidity=rh.ravel(),
        global_horizontal_irradiance=ghi.ravel(),
        wind_speed=wind.ravel(),
        latitude=REUNION_LATITUDE,
    )


def incident_irradiance(ghi, incidence_factor: float = VERTICAL_INCIDENCE_FACTOR):
    return incidence_factor * ghi


def sol_air_temperature(record: WeatherRecord, surface: tuple[float, float], exterior_film: float,
                        longwave_correction: float = 0.0,
                        incidence_factor: float = VERTICAL_INCIDENCE_FACTOR) -> float:
    """Sol-air temperature of an exterior surface.

    `surface` is ``(azimuth, solar_absorptance)``. Incident irradiance is a
    fixed fraction of global horizontal, so the azimuth does not enter.
    """
    _azimuth, absorptance = surface
    incident = incident_irradiance(record.global_horizontal_irradiance, incidence_factor)
    return record.dry_bulb + absorptance * incident * exterior_film - longwave_correction


def sol_air_series(series: WeatherSeries, absorptance: float, exterior_film: float,
                   longwave_correction: float = 0.0,
                   incidence_factor: float = VERTICAL_INCIDENCE_FACTOR) -> np.ndarray:
    incident = incident_irradiance(series.global_horizontal_irradiance, incidence_factor)
    return series.dry_bulb + absorptance * incident * exterior_film - longwave_correction
