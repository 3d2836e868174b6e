"""Config-driven experiment orchestration and the command line front end."""

from .config import ExperimentConfig, manifest_text
from .runner import (
    EvalStats,
    RewardCheck,
    build_env,
    build_weather,
    compare_models,
    evaluate_policy,
    run_eval,
    run_synth_weather,
    run_training,
    sweep_w3,
    train_model,
    verify_rewards,
)
