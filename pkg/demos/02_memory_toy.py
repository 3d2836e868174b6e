#!/usr/bin/env python3
"""Why a window of observations helps: the delayed-cue task.

A cue is visible only at the first step and the reward depends on it at the
last step.  A feedforward Q-network sees one observation at a time and can
only guess; the GRU agent reads a five-step window and remembers.
"""
import time

import numpy as np

from agropomdp.rl import AgentConfig, DelayedCueEnv, QAgent, run_episode, train_agent

cfg = AgentConfig(
    gamma=0.9, lr=1e-3, batch_size=32, window=5, warmup=200, episodes=1500,
    steps_per_episode=5, buffer_capacity=5000, tau=0.01, hidden=(32, 32), gru_hidden=16,
)

for recurrent in (True, False):
    t0 = time.perf_counter()
    env = DelayedCueEnv(seed=0)
    agent = QAgent.build(env.obs_size, env.n_actions, recurrent, cfg, seed=0)
    curve = train_agent(agent, env)
    test = DelayedCueEnv(seed=1000)
    score = np.mean([run_episode(agent, test, "eval").total_reward for _ in range(200)])
    late = np.mean([row[1] for row in curve[-200:]])
    kind = "recurrent (GRU)" if recurrent else "feedforward"
    print(f"{kind:>16}: greedy return {score:.3f} (training tail {late:.3f}) in {time.perf_counter() - t0:.0f}s")
