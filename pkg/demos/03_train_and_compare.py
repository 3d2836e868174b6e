#!/usr/bin/env python3
"""Train an MDP10 and a POMDP10 agent on the surrogate, then evaluate them
on hotter weather without retraining.

A short run by default (about 10 minutes on one core); pass --episodes 600
for the desk-scale setting used by the comparison criterion.
"""
import argparse
from pathlib import Path

from agropomdp.experiment import ExperimentConfig, build_env, evaluate_policy, run_training
from agropomdp.weather import shift_temperature, synthesize_weather

parser = argparse.ArgumentParser()
parser.add_argument("--episodes", type=int, default=150)
parser.add_argument("--out", default="demo_output/train")
args = parser.parse_args()

hot = shift_temperature(synthesize_weather(1999), 5.0)
for model in ("MDP10", "POMDP10"):
    cfg = ExperimentConfig.from_pairs({"run.model": model, "agent.episodes": str(args.episodes)})
    out = Path(args.out) / model
    res = run_training(cfg, out)
    s = res.summary
    print(f"{model}: reward {s.reward:7.1f}, yield {s.yield_kg:6.0f}, N {s.n_total:4.0f}, leached {s.leach_total:5.2f}")
    days = [d for d, n in enumerate(s.schedule) if n > 0]
    print(f"  applications on days {days}")
    # the trained policy is kept fixed while the climate shifts
    stats = evaluate_policy(str(out / "model.bin"), build_env(cfg, model, hot))
    print(f"  same policy at +5 C: yield {stats.mean_yield:6.0f}, reward {stats.mean_reward:7.1f}")
    print(f"  artifacts: {sorted(p.name for p in out.iterdir())}")
