"""Gym-style nitrogen-management environment around the surrogate crop model."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DataError, DomainError, StateError
from ..weather import WeatherSeries, synthesize_weather
from .dynamics import CropParams, SoilParams, advance_crop, harvest
from .state import N_VARIABLES, REDUCED, VARIABLES, CropState

N_ACTIONS = 21
N_STEP = 10.0  # kg/ha per action index


class ObservationMode(str, enum.Enum):
    MDP28 = "MDP28"
    MDP10 = "MDP10"
    POMDP28 = "POMDP28"
    POMDP10 = "POMDP10"

    @property
    def names(self) -> tuple[str, ...]:
        return REDUCED if self.value.endswith("10") else VARIABLES

    @property
    def size(self) -> int:
        return len(self.names)

    @property
    def recurrent(self) -> bool:
        return self.value.startswith("POMDP")

    @classmethod
    def parse(cls, text: str) -> "ObservationMode":
        key = str(text).upper().replace("-", "").replace("_", "")
        try:
            return cls(key)
        except ValueError:
            raise ConfigError(f"unknown observation mode {text!r}") from None


# Reward coefficients by season: w1 per kg grain, w2 per kg N, w3 per kg leached N.
YEAR_WEIGHTS = {
    1965: (0.03819, 0.26, 1.04),
    1980: (0.07953, 0.49, 1.96),
    1999: (0.07087, 0.39, 1.95),
    2020: (0.1827, 0.87, 3.48),
}
LEACH_MULTIPLIER = 5.0


@dataclass(frozen=True)
class RewardWeights:
    w1: float = 0.07087
    w2: float = 0.39
    w3: float | None = None  # defaults to LEACH_MULTIPLIER * w2

    def __post_init__(self):
        if self.w3 is None:
            object.__setattr__(self, "w3", LEACH_MULTIPLIER * self.w2)
        if min(self.w1, self.w2, self.w3) < 0:
            raise ConfigError("reward weights must be non-negative")

    @classmethod
    def for_year(cls, year: int) -> "RewardWeights":
        try:
            return cls(*YEAR_WEIGHTS[int(year)])
        except KeyError:
            raise ConfigError(f"no reward weights for year {year}; have {sorted(YEAR_WEIGHTS)}") from None

    def with_leach_multiplier(self, m: float) -> "RewardWeights":
        if m < 0:
            raise ConfigError(f"leaching multiplier must be >= 0, got {m}")
        return RewardWeights(self.w1, self.w2, m * self.w2)


def decode_action(index: int) -> float:
    """Action k applies 10k kg/ha; index 0 skips fertilization."""
    if isinstance(index, (bool, float)) or not 0 <= int(index) < N_ACTIONS or int(index) != index:
        raise IndexError(f"action index {index!r} outside 0..{N_ACTIONS - 1}")
    return N_STEP * int(index)


def compute_reward(applied_n: float, leached: float, yield_at_harvest: float | None, weights: RewardWeights) -> float:
    """Daily reward: w1*Y - w2*N - w3*L on harvest day, -w2*N - w3*L otherwise."""
    if applied_n < 0 or leached < 0 or (yield_at_harvest is not None and yield_at_harvest < 0):
        raise DomainError("reward inputs must be non-negative")
    r = -weights.w2 * applied_n - weights.w3 * leached
    if yield_at_harvest is not None:
        r += weights.w1 * yield_at_harvest
    return r


# divisors chosen so typical in-season magnitudes land near [0, 1]
DEFAULT_SCALES = {
    "cumsumfert": 200.0, "dap": 180.0, "istage": 9.0, "pltpop": 10.0, "rain": 50.0,
    "sw": 0.4, "tmax": 40.0, "tmin": 40.0, "vstage": 20.0, "xlai": 6.0,
    "cleach": 20.0, "cnox": 20.0, "dtt": 30.0, "es": 10.0, "grnwt": 10000.0,
    "nstres": 1.0, "pcngrn": 0.02, "rtdep": 150.0, "runoff": 50.0, "srad": 30.0,
    "swfac": 1.0, "tleachd": 5.0, "tnoxd": 5.0, "topwt": 20000.0, "totir": 1.0,
    "trnu": 5.0, "wtdep": 200.0, "wtnup": 250.0,
}


def observe(state: CropState, mode: ObservationMode, scales: dict | None = None) -> np.ndarray:
    names = ObservationMode.parse(mode).names if not isinstance(mode, ObservationMode) else mode.names
    raw = state.vector(names)
    if scales is None:
        return raw
    return raw / np.array([scales[n] for n in names])


@dataclass(frozen=True)
class EnvConfig:
    weather: WeatherSeries = field(default_factory=lambda: synthesize_weather(1999))
    weights: RewardWeights = field(default_factory=RewardWeights)
    planting_offset: int = 0
    episode_length: int = 180
    soil: SoilParams = field(default_factory=SoilParams)
    crop: CropParams = field(default_factory=CropParams)
    scales: dict = field(default_factory=lambda: dict(DEFAULT_SCALES))
    mode: ObservationMode = ObservationMode.POMDP10

    def __post_init__(self):
        if self.episode_length < 1 or self.planting_offset < 0:
            raise ConfigError("episode length must be positive and planting offset non-negative")
        if set(self.scales) != set(VARIABLES) or any(not (v > 0 and math.isfinite(v)) for v in self.scales.values()):
            raise ConfigError("observation scales need one positive finite divisor per variable")
        object.__setattr__(self, "mode", ObservationMode.parse(self.mode) if not isinstance(self.mode, ObservationMode) else self.mode)


@dataclass
class EpisodeSummary:
    yield_kg: float = 0.0
    n_total: float = 0.0
    leach_total: float = 0.0
    reward: float = 0.0
    schedule: list = field(default_factory=list)  # kg/ha applied per day
    rain: list = field(default_factory=list)  # mm on each application day
    days: int = 0
    harvested: bool = False

    def identity_reward(self, w: RewardWeights) -> float:
        return w.w1 * self.yield_kg - w.w2 * self.n_total - w.w3 * self.leach_total

    def rainy_day_mass(self, threshold: float = 1.0) -> float:
        return float(sum(n for n, r in zip(self.schedule, self.rain) if r >= threshold))


class CropEnv:
    """reset() / step(action) loop over one rain-fed season.

    The weather fields in the observation are those of the day the next
    action will be applied on.  Episodes end at ``episode_length`` days or at
    physiological maturity, whichever comes first; the final step pays the
    harvest term of the reward.
    """

    n_actions = N_ACTIONS

    def __init__(self, config: EnvConfig | None = None):
        self.config = config or EnvConfig()
        need = self.config.planting_offset + self.config.episode_length
        if len(self.config.weather) < need:
            raise DataError(
                f"weather '{self.config.weather.label}' has {len(self.config.weather)} days; "
                f"planting offset + season needs {need}"
            )
        self.state: CropState | None = None
        self.summary: EpisodeSummary | None = None
        self.done = True

    @property
    def mode(self) -> ObservationMode:
        return self.config.mode

    @property
    def obs_size(self) -> int:
        return self.config.mode.size

    def _load_weather(self, s: CropState, t: int) -> None:
        rec = self.config.weather[self.config.planting_offset + t]
        s.srad, s.tmax, s.tmin, s.rain = rec.srad, rec.tmax, rec.tmin, rec.rain

    def reset(self, seed: int | None = None) -> np.ndarray:
        # the surrogate is deterministic; ``seed`` is accepted for API symmetry
        cfg = self.config
        s = CropState(
            pltpop=cfg.crop.plant_population,
            wtdep=cfg.soil.water_table_depth,
            soil_water=cfg.soil.initial_water,
            soil_nitrogen=cfg.soil.initial_nitrogen,
        )
        s.swfac = min(1.0, s.soil_water / cfg.soil.optimal_water)
        s.sw = cfg.soil.sw_wilt + (cfg.soil.sw_full - cfg.soil.sw_wilt) * s.soil_water / cfg.soil.water_capacity
        self._load_weather(s, 0)
        self.state = s
        self.summary = EpisodeSummary()
        self.done = False
        return self.observation()

    def observation(self) -> np.ndarray:
        return observe(self.state, self.config.mode, self.config.scales)

    def step(self, action: int):
        return self.apply(decode_action(action))

    def apply(self, nitrogen: float):
        """Advance one day applying ``nitrogen`` kg/ha (any non-negative amount)."""
        if self.done:
            raise StateError("episode is over; call reset()")
        cfg = self.config
        before = self.state
        s = advance_crop(before, nitrogen, cfg.soil, cfg.crop)
        t = int(s.dap)
        done = t >= cfg.episode_length or s.gdd >= cfg.crop.maturity_gdd
        if done:
            s = harvest(s, cfg.crop)
        reward = compute_reward(nitrogen, s.tleachd, s.grnwt if done else None, cfg.weights)
        summ = self.summary
        summ.schedule.append(float(nitrogen))
        summ.rain.append(before.rain)
        summ.n_total = s.cumsumfert
        summ.leach_total = s.cleach
        summ.reward += reward
        summ.days = t
        if done:
            summ.yield_kg = s.grnwt
            summ.harvested = True
        else:
            self._load_weather(s, t)
        self.state = s
        self.done = done
        return self.observation(), reward, done, summ


def expert_schedule(variant: int, length: int = 180) -> np.ndarray:
    """Fixed daily plans: 1 -> 56 kg/ha at planting; 2 -> 112 at planting + 112 on day 40."""
    plan = np.zeros(length)
    if variant == 1:
        plan[0] = 56.0
    elif variant == 2:
        plan[0] = 112.0
        plan[40] = 112.0
    else:
        raise ConfigError(f"unknown expert variant {variant!r}; expected 1 or 2")
    return plan


def run_schedule(env: CropEnv, plan) -> EpisodeSummary:
    """Roll out a fixed kg/ha plan until the episode ends."""
    env.reset()
    for amount in plan:
        *_, done, summary = env.apply(float(amount))
        if done:
            return summary
    while not env.done:
        *_, summary = env.apply(0.0)
    return summary
