from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError, StateError


@dataclass(frozen=True)
class Experience:
    window_t: np.ndarray  # (L, d), oldest first
    action: int
    reward: float
    window_next: np.ndarray  # window_t shifted by one with the new observation appended
    terminal: bool


@dataclass
class Batch:
    windows: np.ndarray  # (B, L, d)
    actions: np.ndarray  # (B,)
    rewards: np.ndarray  # (B,)
    next_windows: np.ndarray  # (B, L, d)
    terminals: np.ndarray  # (B,) float 0/1

    def __len__(self) -> int:
        return len(self.actions)

    @classmethod
    def from_experiences(cls, exps) -> "Batch":
        return cls(
            np.stack([e.window_t for e in exps]),
            np.array([e.action for e in exps], dtype=int),
            np.array([e.reward for e in exps], dtype=float),
            np.stack([e.window_next for e in exps]),
            np.array([e.terminal for e in exps], dtype=float),
        )


class ReplayBuffer:
    """FIFO experience memory with uniform sampling (with replacement).

    Windows are stored once; the next window is rebuilt from the stored window
    and the newest observation, which the shift invariant makes lossless.
    """

    def __init__(self, capacity: int = 100_000):
        if capacity <= 0:
            raise StateError("capacity must be positive")
        self.capacity = int(capacity)
        self._size = 0
        self._head = 0  # next write slot
        self._win = None

    def __len__(self) -> int:
        return self._size

    def _allocate(self, shape) -> None:
        L, d = shape
        self._win = np.empty((self.capacity, L, d))
        self._new = np.empty((self.capacity, d))
        self._act = np.empty(self.capacity, dtype=int)
        self._rew = np.empty(self.capacity)
        self._term = np.empty(self.capacity)

    def push(self, e: Experience) -> None:
        w, w2 = np.asarray(e.window_t, dtype=float), np.asarray(e.window_next, dtype=float)
        if w.ndim != 2 or w.shape != w2.shape or w.shape[0] == 0:
            raise ShapeError(f"windows must share a (L, d) shape, got {w.shape} and {w2.shape}")
        if self._win is not None and w.shape != self._win.shape[1:]:
            raise ShapeError(f"window shape {w.shape} differs from stored {self._win.shape[1:]}")
        if not np.array_equal(w[1:], w2[:-1]):
            raise ShapeError("window_next is not window_t shifted by one observation")
        if self._win is None:
            self._allocate(w.shape)
        i = self._head
        self._win[i] = w
        self._new[i] = w2[-1]
        self._act[i] = e.action
        self._rew[i] = e.reward
        self._term[i] = float(e.terminal)
        self._head = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def _slot(self, k: int) -> int:
        """Physical slot of the k-th oldest stored experience."""
        start = self._head - self._size
        return (start + k) % self.capacity

    def _get(self, i: int) -> Experience:
        w = self._win[i].copy()
        nxt = np.concatenate([w[1:], self._new[i][None]], axis=0)
        return Experience(w, int(self._act[i]), float(self._rew[i]), nxt, bool(self._term[i]))

    def contents(self) -> list[Experience]:
        """Stored experiences, oldest first."""
        return [self._get(self._slot(k)) for k in range(self._size)]

    def sample_indices(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self._size == 0:
            raise StateError("cannot sample from an empty replay buffer")
        return rng.integers(0, self._size, size=n)

    def sample(self, n: int, rng: np.random.Generator) -> list[Experience]:
        return [self._get(int(i)) for i in self.sample_indices(n, rng)]

    def sample_batch(self, n: int, rng: np.random.Generator) -> Batch:
        idx = self.sample_indices(n, rng)
        w = self._win[idx]
        nxt = np.concatenate([w[:, 1:], self._new[idx][:, None]], axis=1)
        return Batch(w, self._act[idx].copy(), self._rew[idx].copy(), nxt, self._term[idx].copy())


def push_experience(buffer: ReplayBuffer, e: Experience) -> None:
    buffer.push(e)


def sample_batch(buffer: ReplayBuffer, batch_size: int, rng: np.random.Generator) -> list[Experience]:
    return buffer.sample(batch_size, rng)
