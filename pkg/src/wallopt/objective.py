"""Occupancy-weighted PMV objective."""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import numpy as np

from .building import Building, OccupancySchedule
from .comfort import ComfortParams, pmv_array, ppd
from .thermal_sim import ZoneConditionSeries

SIGNED = "signed"
ABSOLUTE = "absolute"
MODES = (SIGNED, ABSOLUTE)

REPORT_CSV_HEADER = ("zone", "weight", "mean_pmv", "mean_ppd", "occupied_hours")
OBJECTIVE_KEY = "PMV_total"


class ZoneWeights:
    """Ordered (zone, coefficient) pairs summing to one."""

    def __init__(self, pairs: Iterable[tuple[str, float]]):
        pairs = tuple((str(z), float(c)) for z, c in pairs)
        names = [z for z, _ in pairs]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate zone in weights: {names}")
        if any(c < 0 for _, c in pairs):
            raise ValueError("weights must be >= 0")
        if abs(math.fsum(c for _, c in pairs) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {math.fsum(c for _, c in pairs)}")
        self.pairs = pairs

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.pairs)

    def __getitem__(self, zone: str) -> float:
        return dict(self.pairs)[zone]

    def __contains__(self, zone):
        return zone in dict(self.pairs)

    @property
    def zones(self) -> tuple[str, ...]:
        return tuple(z for z, _ in self.pairs)


def paper_weights() -> ZoneWeights:
    """Yearly time-share coefficients of the four weighted rooms."""
    return ZoneWeights([
        ("main_room", 0.4169),
        ("kitchen", 0.3533),
        ("bedroom1", 0.1896),
        ("bedroom2", 0.0402),
    ])


def _occupied_mask(series: ZoneConditionSeries, schedule: OccupancySchedule, zone: str) -> np.ndarray:
    return schedule.weekly(zone)[series.hour_of_week] > 0


def hourly_pmv(series: ZoneConditionSeries, zone: str, params: ComfortParams, mask=None) -> np.ndarray:
    c = series.column(zone)
    sel = slice(None) if mask is None else mask
    return pmv_array(
        c["air_temperature"][sel],
        c["mean_radiant_temperature"][sel],
        c["relative_humidity"][sel],
        c["air_velocity"][sel],
        params,
    )


def zone_pmv_stats(series: ZoneConditionSeries, schedule: OccupancySchedule, zone: str,
                   params: ComfortParams, occupied_only: bool = True) -> tuple[float, float, int]:
    """(mean PMV, mean PPD, sample count) for one zone."""
    series.index(zone)
    if occupied_only:
        mask = _occupied_mask(series, schedule, zone)
        if not mask.any():
            raise ValueError(f"zone {zone!r} is never occupied in the simulated period")
    else:
        mask = None
    values = hourly_pmv(series, zone, params, mask)
    return float(values.mean()), float(np.mean(ppd(values))), int(values.size)


def zone_mean_pmv(series: ZoneConditionSeries, schedule: OccupancySchedule, zone: str,
                  params: ComfortParams, occupied_only: bool = True) -> float:
    return zone_pmv_stats(series, schedule, zone, params, occupied_only)[0]


def total_pmv(zone_means: Mapping[str, float], weights: ZoneWeights, mode: str = SIGNED) -> float:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    terms = []
    for zone, c in weights:
        if zone not in zone_means:
            if c == 0:
                continue
            raise KeyError(f"no mean PMV for weighted zone {zone!r}")
        m = zone_means[zone]
        terms.append(c * (abs(m) if mode == ABSOLUTE else m))
    return math.fsum(terms)


@dataclass(frozen=True)
class ObjectiveReport:
    weights: ZoneWeights
    zone_pmv: dict[str, float]
    zone_ppd: dict[str, float]
    occupied_hours: dict[str, int]
    total: float
    mode: str = SIGNED

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_CSV_HEADER)
            for zone in self.zone_pmv:
                weight = self.weights[zone] if zone in self.weights else 0.0
                w.writerow([zone, repr(weight), repr(self.zone_pmv[zone]), repr(self.zone_ppd[zone]),
                            self.occupied_hours[zone]])
            w.writerow(["TOTAL", "1.0", repr(self.total), "", sum(self.occupied_hours.values())])

    def write_objective(self, path, key: str = OBJECTIVE_KEY) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{key} = {self.total!r}\n")


def evaluate(series: ZoneConditionSeries, building: Building, params: ComfortParams | None = None,
             weights: ZoneWeights | None = None, mode: str = SIGNED,
             occupied_only: bool = True) -> ObjectiveReport:
    """Score a simulation: per-zone means for every occupied zone, weighted total."""
    params = params or ComfortParams()
    weights = weights or paper_weights()
    pmv_means, ppd_means, hours = {}, {}, {}
    for zone in series.zones:
        if occupied_only and not _occupied_mask(series, building.schedule, zone).any():
            if zone in weights and weights[zone] > 0:
                raise ValueError(f"weighted zone {zone!r} is never occupied")
            continue
        pmv_means[zone], ppd_means[zone], hours[zone] = zone_pmv_stats(
            series, building.schedule, zone, params, occupied_only)
    total = total_pmv(pmv_means, weights, mode)
    return ObjectiveReport(weights, pmv_means, ppd_means, hours, total, mode)
