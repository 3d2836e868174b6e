from __future__ import annotations

import copy
from dataclasses import dataclass, fields

import numpy as np

# Observable variable order.  The first ten are the reduced observation set.
VARIABLES = (
    "cumsumfert",  # cumulative N fertilizer, kg/ha
    "dap",  # days after planting
    "istage",  # growth stage 1..9
    "pltpop",  # plants/m2
    "rain",  # mm/d
    "sw",  # volumetric soil water, cm3/cm3
    "tmax",  # degC
    "tmin",  # degC
    "vstage",  # leaf count
    "xlai",  # leaf area index
    "cleach",  # cumulative nitrate leaching, kg/ha
    "cnox",  # cumulative denitrification, kg/ha
    "dtt",  # growing degree days today, degC d
    "es",  # soil evaporation, mm/d
    "grnwt",  # grain dry matter, kg/ha
    "nstres",  # nitrogen stress index
    "pcngrn",  # N mass fraction in grain
    "rtdep",  # root depth, cm
    "runoff",  # mm/d
    "srad",  # MJ/m2/d
    "swfac",  # water stress index
    "tleachd",  # nitrate leaching today, kg/ha
    "tnoxd",  # denitrification today, kg/ha
    "topwt",  # above-ground biomass, kg/ha
    "totir",  # irrigation total, mm (rain-fed: always 0)
    "trnu",  # N uptake today, kg/ha
    "wtdep",  # water table depth, cm
    "wtnup",  # cumulative N uptake, kg/ha
)
N_VARIABLES = len(VARIABLES)
REDUCED = VARIABLES[:10]


@dataclass
class CropState:
    cumsumfert: float = 0.0
    dap: float = 0.0
    istage: float = 1.0
    pltpop: float = 8.0
    rain: float = 0.0
    sw: float = 0.0
    tmax: float = 0.0
    tmin: float = 0.0
    vstage: float = 0.0
    xlai: float = 0.0
    cleach: float = 0.0
    cnox: float = 0.0
    dtt: float = 0.0
    es: float = 0.0
    grnwt: float = 0.0
    nstres: float = 1.0
    pcngrn: float = 0.0
    rtdep: float = 0.0
    runoff: float = 0.0
    srad: float = 0.0
    swfac: float = 1.0
    tleachd: float = 0.0
    tnoxd: float = 0.0
    topwt: float = 0.0
    totir: float = 0.0
    trnu: float = 0.0
    wtdep: float = 0.0
    wtnup: float = 0.0
    # hidden pools, never observed
    soil_water: float = 0.0  # mm in the root-zone bucket
    soil_nitrogen: float = 0.0  # kg/ha mineral N
    biomass: float = 0.0  # kg/ha
    gdd: float = 0.0  # accumulated degC d

    def vector(self, names=VARIABLES) -> np.ndarray:
        return np.array([getattr(self, n) for n in names], dtype=float)

    def copy(self) -> "CropState":
        return copy.copy(self)


assert tuple(f.name for f in fields(CropState))[:N_VARIABLES] == VARIABLES
