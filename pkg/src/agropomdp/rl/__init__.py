"""Value-based reinforcement learning: tabular oracle, DQN and its recurrent variant."""

from .agent import (
    AgentConfig,
    EpisodeTrace,
    QAgent,
    WindowBuilder,
    bellman_target,
    evaluate,
    greedy_action,
    run_episode,
    select_action,
    soft_update,
    train_agent,
    train_step,
)
from .replay import Batch, Experience, ReplayBuffer, push_experience, sample_batch
from .tabular import (
    FiniteMDP,
    TabularQ,
    chain_mdp,
    discounted_return,
    q_learning,
    random_deterministic_mdp,
    tabular_q_update,
    value_iteration,
)
from .toys import DelayedCueEnv
