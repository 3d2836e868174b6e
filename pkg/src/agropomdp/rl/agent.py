"""Deep Q-learning with evaluation/target networks, for flat states or observation windows."""

from __future__ import annotations

from collections import deque
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..errors import ConfigError, ShapeError, StateError
from ..nn import AdamState, GruSpec, MlpNetwork, RecurrentQNetwork, adam_step, init_network, mlp_spec
from .replay import Batch, Experience, ReplayBuffer


@dataclass
class AgentConfig:
    gamma: float = 0.99
    lr: float = 1e-5
    batch_size: int = 640
    window: int = 5
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_fraction: float = 0.6  # share of episodes over which epsilon decays linearly
    tau: float = 0.005
    warmup: int = 2000
    episodes: int = 6000
    steps_per_episode: int = 180
    buffer_capacity: int = 100_000
    train_every: int = 1  # environment steps per gradient step
    reward_scale: float = 1.0  # rewards are multiplied by this before entering the TD target
    select_every: int = 0  # >0: greedy check every this many episodes, keep the best weights
    hidden: tuple = (256, 256, 256)
    gru_hidden: int = 64
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma {self.gamma} outside [0, 1]")
        for name in ("eps_start", "eps_end", "eps_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} outside [0, 1]")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError(f"tau {self.tau} outside (0, 1]")
        counts = ("batch_size", "window", "episodes", "steps_per_episode", "buffer_capacity", "train_every", "gru_hidden")
        for name in counts:
            if int(getattr(self, name)) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.select_every < 0:
            raise ConfigError("select_every must be >= 0")
        if self.warmup < 0 or self.lr <= 0 or self.reward_scale <= 0 or any(h <= 0 for h in self.hidden):
            raise ConfigError("warmup must be >= 0; lr, reward_scale and hidden sizes positive")

    def epsilon(self, episode: int) -> float:
        """Linear decay from eps_start to eps_end over the first eps_fraction of episodes."""
        span = self.eps_fraction * self.episodes
        if span <= 0 or episode >= span:
            return self.eps_end
        return self.eps_start + (self.eps_end - self.eps_start) * episode / span

    def as_dict(self) -> dict:
        return asdict(self)


class QAgent:
    """Evaluation and target Q-networks plus optimizer state, replay memory and an RNG.

    Feedforward agents see only the newest observation (window length 1);
    recurrent agents see ``config.window`` observations.
    """

    def __init__(self, net, config: AgentConfig | None = None, seed: int = 0):
        self.config = config or AgentConfig()
        self.eval_net = net
        self.target_net = net.copy()
        c = self.config
        self.adam = AdamState.for_params(net.params, lr=c.lr, beta1=c.beta1, beta2=c.beta2, eps=c.adam_eps)
        self.buffer = ReplayBuffer(c.buffer_capacity)
        self.rng = np.random.default_rng(seed)
        self.train_steps = 0
        self.env_steps = 0
        self.selected = None  # (episode, greedy return) of the kept weights, if selection ran

    @classmethod
    def build(cls, obs_size: int, n_actions: int, recurrent: bool, config: AgentConfig | None = None, seed: int = 0) -> "QAgent":
        """Fresh agent; network init and the agent RNG derive from ``seed``."""
        config = config or AgentConfig()
        net_seed, agent_seed = np.random.SeedSequence(seed).generate_state(2)
        if recurrent:
            spec = GruSpec(obs_size, config.gru_hidden, config.hidden, n_actions)
        else:
            spec = mlp_spec(obs_size, n_actions, config.hidden)
        return cls(init_network(spec, int(net_seed)), config, int(agent_seed))

    @property
    def recurrent(self) -> bool:
        return isinstance(self.eval_net, RecurrentQNetwork)

    @property
    def window_length(self) -> int:
        return self.config.window if self.recurrent else 1

    @property
    def n_actions(self) -> int:
        return self.eval_net.output_size

    def net_input(self, windows: np.ndarray) -> np.ndarray:
        """Map (..., L, d) windows to what the network consumes."""
        return windows if self.recurrent else windows[..., -1, :]

    def q_values(self, x) -> np.ndarray:
        return self.eval_net.forward(x)


def greedy_action(q) -> int:
    # np.argmax returns the first maximum, i.e. ties go to the lowest index
    return int(np.argmax(q))


def select_action(agent: QAgent, x, eps: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy: uniform action with probability eps, else argmax Q (lowest index on ties)."""
    if not 0.0 <= eps <= 1.0:
        raise ConfigError(f"epsilon {eps} outside [0, 1]")
    x = np.asarray(x, dtype=float)
    want = 2 if agent.recurrent else 1
    if x.ndim != want:
        raise ShapeError(f"{'window' if agent.recurrent else 'state'} input must have {want} dims, got {x.shape}")
    if eps > 0.0 and rng.random() < eps:
        return int(rng.integers(agent.n_actions))
    return greedy_action(agent.q_values(x))


def bellman_target(r, terminal, q_next, gamma: float):
    """r if terminal else r + gamma * max(q_next); vectorised over a leading batch axis."""
    q_next = np.asarray(q_next, dtype=float)
    if q_next.ndim == 1:
        return float(r) if terminal else float(r) + gamma * float(q_next.max())
    return np.asarray(r, dtype=float) + gamma * (1.0 - np.asarray(terminal, dtype=float)) * q_next.max(axis=1)


def soft_update(target, source, tau: float) -> None:
    """target <- tau * source + (1 - tau) * target, in place."""
    if not 0.0 < tau <= 1.0:
        raise ConfigError(f"tau {tau} outside (0, 1]")
    tp, sp = target.params, source.params
    if type(target) is not type(source) or [p.shape for p in tp] != [p.shape for p in sp]:
        raise ShapeError("soft update between different architectures")
    for t, s in zip(tp, sp):
        if tau == 1.0:
            t[...] = s
        else:
            t *= 1.0 - tau
            t += tau * s


def train_step(agent: QAgent, batch) -> float:
    """One Adam step on the mean squared TD error; returns the loss before the step."""
    if len(agent.buffer) < agent.config.warmup:
        raise StateError(f"replay buffer holds {len(agent.buffer)} < warmup {agent.config.warmup}")
    if not isinstance(batch, Batch):
        batch = Batch.from_experiences(batch)
    c = agent.config
    x = agent.net_input(batch.windows)
    x_next = agent.net_input(batch.next_windows)
    q_next = agent.target_net.forward(x_next)
    targets = bellman_target(c.reward_scale * batch.rewards, batch.terminals, q_next, c.gamma)
    q = agent.eval_net.forward(x, record=True)
    rows = np.arange(len(batch))
    td = targets - q[rows, batch.actions]
    loss = float(np.mean(td * td))
    g = np.zeros_like(q)
    g[rows, batch.actions] = -2.0 * td / len(batch)
    grads = agent.eval_net.backward(x, g)
    adam_step(agent.eval_net.params, grads, agent.adam)
    agent.train_steps += 1
    return loss


class WindowBuilder:
    """Rolling window of the latest observations; the first one pads the start."""

    def __init__(self, length: int):
        self.length = length
        self._buf = deque(maxlen=length)

    def reset(self, obs) -> np.ndarray:
        self._buf.clear()
        for _ in range(self.length):
            self._buf.append(np.asarray(obs, dtype=float))
        return self.window()

    def push(self, obs) -> np.ndarray:
        self._buf.append(np.asarray(obs, dtype=float))
        return self.window()

    def window(self) -> np.ndarray:
        return np.stack(self._buf)


@dataclass
class EpisodeTrace:
    rewards: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    losses: list = field(default_factory=list)
    summary: object = None

    @property
    def total_reward(self) -> float:
        return float(sum(self.rewards))

    @property
    def mean_loss(self) -> float:
        return float(np.mean(self.losses)) if self.losses else float("nan")


def run_episode(agent: QAgent, env, mode: str = "eval", rng: np.random.Generator | None = None, eps: float = 0.0, reset: bool = True) -> EpisodeTrace:
    """Interact for up to ``steps_per_episode`` steps.

    ``train`` mode pushes every transition, trains every ``train_every`` steps
    once the buffer is warm, and soft-updates the target after each gradient
    step.  ``eval`` mode is greedy and leaves the networks untouched.
    """
    if mode not in ("train", "eval"):
        raise ConfigError(f"mode must be 'train' or 'eval', got {mode!r}")
    training = mode == "train"
    rng = agent.rng if rng is None else rng
    eps = eps if training else 0.0
    c = agent.config
    windows = WindowBuilder(agent.window_length)
    obs = env.reset() if reset else env.observation()
    w = windows.reset(obs)
    trace = EpisodeTrace()
    info = None
    for _ in range(c.steps_per_episode):
        a = select_action(agent, agent.net_input(w), eps, rng)
        obs, r, done, info = env.step(a)
        w_next = windows.push(obs)
        trace.rewards.append(float(r))
        trace.actions.append(a)
        if training:
            agent.buffer.push(Experience(w, a, float(r), w_next, bool(done)))
            agent.env_steps += 1
            if len(agent.buffer) >= max(c.warmup, 1) and agent.env_steps % c.train_every == 0:
                batch = agent.buffer.sample_batch(c.batch_size, rng)
                trace.losses.append(train_step(agent, batch))
                soft_update(agent.target_net, agent.eval_net, c.tau)
        w = w_next
        if done:
            break
    trace.summary = info
    return trace


def train_agent(agent: QAgent, env, episodes: int | None = None, on_episode=None) -> list[tuple]:
    """Run training episodes; returns (episode, reward, epsilon, mean loss) rows."""
    n = agent.config.episodes if episodes is None else episodes
    every = agent.config.select_every
    rows, best, kept = [], None, None
    for ep in range(n):
        eps = agent.config.epsilon(ep)
        trace = run_episode(agent, env, "train", eps=eps)
        row = (ep, trace.total_reward, eps, trace.mean_loss)
        rows.append(row)
        if on_episode is not None:
            on_episode(row, trace)
        if every and agent.train_steps and ((ep + 1) % every == 0 or ep == n - 1):
            score = run_episode(agent, env, "eval").total_reward
            if best is None or score > best[1]:
                best, kept = (ep, score), [p.copy() for p in agent.eval_net.params]
    if kept is not None:
        for net in (agent.eval_net, agent.target_net):
            for p, k in zip(net.params, kept):
                p[...] = k
        agent.selected = best
    return rows


def evaluate(agent: QAgent, env, episodes: int = 1) -> list[EpisodeTrace]:
    return [run_episode(agent, env, "eval") for _ in range(episodes)]


def config_fields() -> dict:
    return {f.name: f for f in fields(AgentConfig)}
