"""Fanger PMV/PPD and the seven-point thermal sensation scale.

The heat-balance equations follow the ISO 7730 / ASHRAE formulation. The
vectorised core accepts numpy arrays so a whole simulated year can be scored
in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MET = 58.15  # W/m2 per met
CLO = 0.155  # m2K/W per clo

SENSATIONS = ("cold", "cool", "slightly cool", "neutral", "slightly warm", "warm", "hot")

TCL_TOLERANCE = 1e-5  # C
TCL_MAX_ITER = 300


class ComfortConvergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class ComfortParams:
    metabolic_rate: float = 1.2 * MET  # W/m2
    external_work: float = 0.0  # W/m2
    clothing_insulation: float = 0.5  # clo

    def __post_init__(self):
        if not self.metabolic_rate > 0:
            raise ValueError("metabolic_rate must be > 0")
        if self.external_work < 0:
            raise ValueError("external_work must be >= 0")
        if self.clothing_insulation < 0:
            raise ValueError("clothing_insulation must be >= 0")

    @classmethod
    def from_met(cls, met: float = 1.2, clo: float = 0.5, work_met: float = 0.0) -> ComfortParams:
        return cls(met * MET, work_met * MET, clo)


@dataclass(frozen=True)
class IndoorCondition:
    air_temperature: float
    mean_radiant_temperature: float
    relative_humidity: float
    air_velocity: float

    def __post_init__(self):
        if not 0.0 <= self.relative_humidity <= 100.0:
            raise ValueError(f"relative humidity must lie in [0, 100], got {self.relative_humidity}")
        if self.air_velocity < 0:
            raise ValueError("air velocity must be >= 0")


@dataclass(frozen=True)
class PMVResult:
    pmv: float
    ppd: float
    sensation: str


def vapour_pressure(ta, rh):
    """Partial water vapour pressure in Pa from air temperature (C) and RH (%)."""
    return rh * 10.0 * np.exp(16.6536 - 4030.183 / (ta + 235.0))


def clothing_area_factor(icl):
    return np.where(icl <= 0.078, 1.0 + 1.29 * icl, 1.05 + 0.645 * icl)


def clothing_temperature(ta, tr, vel, params: ComfortParams, initial=None):
    """Solve the clothing surface heat balance for tcl (C) by damped fixed point.

    The convective term is taken implicitly at each sweep and radiation
    explicitly; the update is averaged with the previous iterate.
    """
    ta, tr, vel = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (ta, tr, vel)))
    icl = CLO * params.clothing_insulation
    fcl = clothing_area_factor(icl)
    mw = params.metabolic_rate - params.external_work
    hcf = 12.1 * np.sqrt(vel)
    tra4 = (tr + 273.0) ** 4
    skin = 35.7 - 0.028 * mw

    if initial is None:
        tcl = ta + (35.5 - ta) / (3.5 * icl + 0.1)
    else:
        tcl = np.broadcast_to(np.asarray(initial, dtype=float), ta.shape).copy()
    for _ in range(TCL_MAX_ITER):
        hc = np.maximum(2.38 * np.abs(tcl - ta) ** 0.25, hcf)
        rad = 3.96e-8 * fcl * ((tcl + 273.0) ** 4 - tra4)
        target = (skin - icl * rad + icl * fcl * hc * ta) / (1.0 + icl * fcl * hc)
        if np.all(np.abs(target - tcl) < TCL_TOLERANCE):
            tcl = target
            break
        tcl = 0.5 * (tcl + target)
    else:
        bad = np.argwhere(~(np.abs(target - tcl) < TCL_TOLERANCE))[0]
        idx = tuple(bad)
        raise ComfortConvergenceError(
            "clothing temperature did not converge for "
            f"ta={float(ta[idx])}, tr={float(tr[idx])}, vel={float(vel[idx])}, {params}"
        )
    hc = np.maximum(2.38 * np.abs(tcl - ta) ** 0.25, hcf)
    return tcl, hc


def thermal_load(ta, tr, rh, vel, params: ComfortParams):
    """Metabolic heat minus all loss terms (W/m2), the quantity PMV scales."""
    ta = np.asarray(ta, dtype=float)
    tr = np.asarray(tr, dtype=float)
    rh = np.asarray(rh, dtype=float)
    m = params.metabolic_rate
    mw = m - params.external_work
    pa = vapour_pressure(ta, rh)
    icl = CLO * params.clothing_insulation
    fcl = clothing_area_factor(icl)
    tcl, hc = clothing_temperature(ta, tr, vel, params)

    skin_diffusion = 3.05e-3 * (5733.0 - 6.99 * mw - pa)
    sweating = np.where(mw > MET, 0.42 * (mw - MET), 0.0)
    resp_latent = 1.7e-5 * m * (5867.0 - pa)
    resp_dry = 0.0014 * m * (34.0 - ta)
    radiation = 3.96e-8 * fcl * ((tcl + 273.0) ** 4 - (tr + 273.0) ** 4)
    convection = fcl * hc * (tcl - ta)
    return mw - skin_diffusion - sweating - resp_latent - resp_dry - radiation - convection


def pmv_array(ta, tr, rh, vel, params: ComfortParams) -> np.ndarray:
    load = thermal_load(ta, tr, rh, vel, params)
    return (0.303 * math.exp(-0.036 * params.metabolic_rate) + 0.028) * load


def ppd(pmv_value):
    """Predicted percentage dissatisfied (%)."""
    p = np.asarray(pmv_value, dtype=float)
    out = 100.0 - 95.0 * np.exp(-0.03353 * p**4 - 0.2179 * p**2)
    return float(out) if out.ndim == 0 else out


def sensation(pmv_value: float) -> str:
    """Seven-point label: round half away from zero, clamp to [-3, 3]."""
    if not math.isfinite(pmv_value):
        raise ValueError(f"PMV must be finite, got {pmv_value}")
    vote = math.copysign(math.floor(abs(pmv_value) + 0.5), pmv_value)
    vote = int(max(-3, min(3, vote)))
    return SENSATIONS[vote + 3]


def pmv(condition: IndoorCondition, params: ComfortParams | None = None) -> PMVResult:
    params = params or ComfortParams()
    value = float(pmv_array(
        condition.air_temperature,
        condition.mean_radiant_temperature,
        condition.relative_humidity,
        condition.air_velocity,
        params,
    ))
    return PMVResult(pmv=value, ppd=ppd(value), sensation=sensation(value))
