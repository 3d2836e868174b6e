"""Tabular Q-learning and the value-iteration oracle it is checked against."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError


def discounted_return(rewards, gamma: float) -> float:
    """sum_t gamma^t r_t."""
    if not 0.0 <= gamma <= 1.0:
        raise ConfigError(f"discount {gamma} outside [0, 1]")
    total, scale = 0.0, 1.0
    for r in rewards:
        total += scale * r
        scale *= gamma
    return total


class TabularQ:
    def __init__(self, n_states: int, n_actions: int, init: float = 0.0):
        if n_states <= 0 or n_actions <= 0:
            raise ConfigError("table dimensions must be positive")
        self.q = np.full((n_states, n_actions), float(init))

    @property
    def shape(self):
        return self.q.shape

    def greedy(self, s: int) -> int:
        return int(np.argmax(self.q[s]))


def _check_index(table: TabularQ, s, a, s_next) -> None:
    S, A = table.q.shape
    for name, v, hi in (("state", s, S), ("action", a, A), ("next state", s_next, S)):
        if not 0 <= v < hi:
            raise IndexError(f"{name} index {v} outside 0..{hi - 1}")


def tabular_q_update(table: TabularQ, s: int, a: int, r: float, s_next: int, terminal: bool, alpha: float, gamma: float) -> TabularQ:
    """Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)); the max is 0 when terminal."""
    _check_index(table, s, a, s_next)
    if not 0.0 < alpha <= 1.0:
        raise ConfigError(f"learning rate {alpha} outside (0, 1]")
    if not 0.0 <= gamma <= 1.0:
        raise ConfigError(f"discount {gamma} outside [0, 1]")
    boot = 0.0 if terminal else float(table.q[s_next].max())
    table.q[s, a] += alpha * (r + gamma * boot - table.q[s, a])
    return table


@dataclass
class FiniteMDP:
    """``P[s, a, s']`` transition probabilities, ``R[s, a, s']`` rewards."""

    P: np.ndarray
    R: np.ndarray
    gamma: float = 0.9

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=float)
        self.R = np.asarray(self.R, dtype=float)
        if self.P.ndim != 3 or self.P.shape != self.R.shape or self.P.shape[0] != self.P.shape[2]:
            raise ConfigError("P and R must both have shape (S, A, S)")
        if not np.allclose(self.P.sum(axis=2), 1.0):
            raise ConfigError("transition rows must sum to 1")

    @property
    def n_states(self) -> int:
        return self.P.shape[0]

    @property
    def n_actions(self) -> int:
        return self.P.shape[1]

    def sample(self, s: int, a: int, rng: np.random.Generator):
        cdf = np.cumsum(self.P[s, a])
        s2 = min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), self.n_states - 1)
        return float(self.R[s, a, s2]), s2


def chain_mdp(n_states: int = 4, gamma: float = 0.9) -> FiniteMDP:
    """Deterministic chain: action 0 steps left, 1 steps right.

    Stepping right into (or staying at) the last state pays 1; stepping left
    at the first state pays 0.2.  Everything else pays 0.
    """
    P = np.zeros((n_states, 2, n_states))
    R = np.zeros_like(P)
    for s in range(n_states):
        left, right = max(s - 1, 0), min(s + 1, n_states - 1)
        P[s, 0, left] = P[s, 1, right] = 1.0
        if right == n_states - 1:
            R[s, 1, right] = 1.0
        if s == 0:
            R[s, 0, left] = 0.2
    return FiniteMDP(P, R, gamma)


def random_deterministic_mdp(n_states: int, n_actions: int, rng: np.random.Generator, gamma: float = 0.9) -> FiniteMDP:
    P = np.zeros((n_states, n_actions, n_states))
    nxt = rng.integers(0, n_states, size=(n_states, n_actions))
    P[np.arange(n_states)[:, None], np.arange(n_actions)[None, :], nxt] = 1.0
    R = rng.uniform(-1.0, 1.0, size=(n_states, n_actions))[:, :, None] * P
    return FiniteMDP(P, R, gamma)


def value_iteration(mdp: FiniteMDP, tol: float = 1e-12, max_iter: int = 100_000) -> np.ndarray:
    """Optimal action values Q* by repeated Bellman optimality backups."""
    expected_r = (mdp.P * mdp.R).sum(axis=2)
    q = np.zeros((mdp.n_states, mdp.n_actions))
    for _ in range(max_iter):
        new = expected_r + mdp.gamma * mdp.P @ q.max(axis=1)
        if np.max(np.abs(new - q)) < tol:
            return new
        q = new
    return q


def q_learning(mdp: FiniteMDP, n_updates: int, rng: np.random.Generator, decay: float = 0.5) -> TabularQ:
    """Q-learning from uniformly sampled (s, a) pairs with alpha = n(s,a)^-decay."""
    table = TabularQ(mdp.n_states, mdp.n_actions)
    counts = np.zeros(table.shape, dtype=int)
    pairs = rng.integers(0, mdp.n_states * mdp.n_actions, size=n_updates)
    for k in pairs:
        s, a = divmod(int(k), mdp.n_actions)
        r, s2 = mdp.sample(s, a, rng)
        counts[s, a] += 1
        tabular_q_update(table, s, a, r, s2, False, counts[s, a] ** -decay, mdp.gamma)
    return table
