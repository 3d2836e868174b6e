"""Surrogate maize environment: state variables, daily dynamics, rewards."""

from .dynamics import CropParams, SoilParams, advance_crop, daily_growth, temperature_factor, thermal_time
from .env import (
    DEFAULT_SCALES,
    N_ACTIONS,
    YEAR_WEIGHTS,
    CropEnv,
    EnvConfig,
    EpisodeSummary,
    ObservationMode,
    RewardWeights,
    compute_reward,
    decode_action,
    expert_schedule,
    observe,
    run_schedule,
)
from .state import N_VARIABLES, REDUCED, VARIABLES, CropState
