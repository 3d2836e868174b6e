"""One-day surrogate maize model.

Deliberately small: thermal time drives staging, a single-bucket soil water
balance gives the water stress, one mineral-N pool gives the nitrogen stress,
and radiation-use efficiency turns intercepted light into biomass.  It is a
stand-in for a full crop simulator, not a calibrated one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import DataError
from .state import CropState


@dataclass(frozen=True)
class SoilParams:
    water_capacity: float = 200.0  # mm, root-zone bucket
    initial_water: float = 200.0  # mm
    optimal_water_fraction: float = 0.5  # swfac = min(1, W / (fraction * capacity))
    et_coef: float = 0.22  # mm ET per MJ/m2 of radiation
    initial_nitrogen: float = 60.0  # kg/ha mineral N at planting
    leach_coef: float = 0.02  # max daily fraction of soil N leached
    rain_half: float = 25.0  # mm of rain giving half the max leaching
    denit_coef: float = 0.02  # daily fraction denitrified when near capacity
    denit_wetness: float = 0.9  # fraction of capacity that triggers denitrification
    sw_wilt: float = 0.12  # cm3/cm3
    sw_full: float = 0.36  # cm3/cm3
    water_table_depth: float = 200.0  # cm

    @property
    def optimal_water(self) -> float:
        return self.optimal_water_fraction * self.water_capacity


@dataclass(frozen=True)
class CropParams:
    base_temp: float = 10.0
    # trapezoidal growth response to mean temperature
    temp_min: float = 8.0
    temp_opt_low: float = 18.0
    temp_opt_high: float = 26.0
    temp_max: float = 40.0
    rue: float = 10.0  # kg/ha biomass per MJ/m2 intercepted
    k_ext: float = 0.65
    harvest_index: float = 0.5
    emergence_biomass: float = 20.0  # kg/ha
    sla: float = 0.0025  # LAI per kg/ha biomass before silking
    lai_max: float = 6.0
    # cumulative GDD at which istage 2..9 begin; the last entry is maturity
    stage_gdd: tuple = (44.0, 105.0, 330.0, 680.0, 765.0, 1000.0, 1220.0, 1350.0)
    # daily N demand (kg/ha/d) for istage 1..9
    n_demand: tuple = (0.0, 0.6, 1.8, 3.0, 2.2, 1.0, 0.3, 0.0, 0.0)
    n_half: float = 10.0  # soil N (kg/ha) at which uptake is unrestricted
    senescence_floor: float = 0.3  # LAI fraction left at maturity
    phyllochron: float = 47.0  # GDD per leaf
    max_leaves: float = 20.0
    root_rate: float = 0.15  # cm per GDD
    root_max: float = 150.0
    grain_n_share: float = 0.6  # share of plant N that ends up in grain
    plant_population: float = 8.0

    @property
    def maturity_gdd(self) -> float:
        return self.stage_gdd[-1]

    @property
    def silking_gdd(self) -> float:
        return self.stage_gdd[3]


def thermal_time(tmax: float, tmin: float, base: float = 10.0) -> float:
    return max(0.0, 0.5 * (tmax + tmin) - base)


def temperature_factor(tmean: float, p: CropParams) -> float:
    """Trapezoid: 0 below temp_min, 1 on [opt_low, opt_high], 0 above temp_max."""
    if tmean <= p.temp_min or tmean >= p.temp_max:
        return 0.0
    if tmean < p.temp_opt_low:
        return (tmean - p.temp_min) / (p.temp_opt_low - p.temp_min)
    if tmean <= p.temp_opt_high:
        return 1.0
    return (p.temp_max - tmean) / (p.temp_max - p.temp_opt_high)


def stage_for(gdd: float, p: CropParams) -> int:
    stage = 1
    for threshold in p.stage_gdd:
        if gdd >= threshold:
            stage += 1
    return stage


def daily_growth(srad: float, lai: float, swfac: float, nstres: float, tmean: float, p: CropParams) -> float:
    intercepted = 1.0 - math.exp(-p.k_ext * lai)
    return p.rue * srad * intercepted * min(swfac, nstres) * temperature_factor(tmean, p)


def advance_crop(state: CropState, applied_n: float, soil: SoilParams, crop: CropParams) -> CropState:
    """Run one day using the weather already loaded in ``state`` (srad, tmax, tmin, rain).

    Returns a new state; ``state`` is not modified.
    """
    s = state.copy()
    for name in ("srad", "tmax", "tmin", "rain"):
        if not math.isfinite(getattr(s, name)):
            raise DataError(f"non-finite weather value {name}={getattr(s, name)}")
    if not (math.isfinite(applied_n) and applied_n >= 0):
        raise DataError(f"applied nitrogen must be a finite non-negative amount, got {applied_n}")

    s.soil_nitrogen += applied_n
    s.cumsumfert += applied_n

    # phenology
    s.dtt = thermal_time(s.tmax, s.tmin, crop.base_temp)
    s.gdd += s.dtt
    s.istage = float(stage_for(s.gdd, crop))
    emerged = s.gdd >= crop.stage_gdd[0]

    # water bucket
    cap = soil.water_capacity
    wet = s.soil_water + s.rain
    s.runoff = max(0.0, wet - cap)
    wet -= s.runoff
    et = soil.et_coef * s.srad * min(1.0, wet / soil.optimal_water)
    cover = 1.0 - math.exp(-crop.k_ext * s.xlai)
    s.es = et * (1.0 - cover)
    s.soil_water = min(cap, max(0.0, wet - et))
    s.swfac = min(1.0, s.soil_water / soil.optimal_water)
    s.sw = soil.sw_wilt + (soil.sw_full - soil.sw_wilt) * s.soil_water / cap

    # nitrogen pool: leaching, then denitrification, then uptake
    n = s.soil_nitrogen
    leach = soil.leach_coef * (s.rain / (s.rain + soil.rain_half)) * n if s.rain > 0 else 0.0
    n -= leach
    denit = soil.denit_coef * n if s.soil_water >= soil.denit_wetness * cap else 0.0
    n -= denit
    demand = crop.n_demand[int(s.istage) - 1] if emerged else 0.0
    uptake = min(n, demand * min(1.0, n / crop.n_half)) if demand > 0 else 0.0
    n -= uptake
    s.soil_nitrogen = max(0.0, n)
    s.tleachd, s.tnoxd, s.trnu = leach, denit, uptake
    s.cleach += leach
    s.cnox += denit
    s.wtnup += uptake
    s.nstres = min(1.0, uptake / demand) if demand > 0 else 1.0

    # growth and canopy
    if emerged:
        if s.biomass == 0.0:
            s.biomass = crop.emergence_biomass
            s.xlai = crop.sla * s.biomass
        tmean = 0.5 * (s.tmax + s.tmin)
        s.biomass += daily_growth(s.srad, s.xlai, s.swfac, s.nstres, tmean, crop)
        s.xlai = _leaf_area(s, crop)
        since = s.gdd - crop.stage_gdd[0]
        s.vstage = min(crop.max_leaves, since / crop.phyllochron)
        s.rtdep = min(crop.root_max, crop.root_rate * since)
    s.topwt = s.biomass
    s.dap += 1.0
    return s


def _leaf_area(s: CropState, crop: CropParams) -> float:
    green = min(crop.lai_max, crop.sla * s.biomass)
    if s.gdd <= crop.silking_gdd:
        return green
    # linear senescence from silking to maturity, applied to the silking canopy
    silk_lai = min(crop.lai_max, max(s.xlai, 0.0))
    frac = (s.gdd - crop.silking_gdd) / (crop.maturity_gdd - crop.silking_gdd)
    target = max(crop.senescence_floor, 1.0 - (1.0 - crop.senescence_floor) * min(1.0, frac))
    return min(silk_lai, crop.lai_max * target, green)


def harvest(s: CropState, crop: CropParams) -> CropState:
    s = s.copy()
    s.grnwt = crop.harvest_index * s.biomass
    s.pcngrn = min(0.03, crop.grain_n_share * s.wtnup / s.grnwt) if s.grnwt > 0 else 0.0
    return s
