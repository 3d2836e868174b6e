"""Small environments for checking the learners."""

from __future__ import annotations

import numpy as np

from ..errors import StateError


class DelayedCueEnv:
    """Two actions, ``length`` steps.  A +-1 cue is visible only at step 0;
    the last step pays 1 if the action matches the cue (1 for +1, 0 for -1).

    Observation: (cue or 0, t / (length - 1)).  A memoryless policy cannot
    beat 0.5 expected return; one that remembers the cue earns 1.
    """

    n_actions = 2
    obs_size = 2
    optimal_return = 1.0

    def __init__(self, length: int = 5, seed: int = 0):
        self.length = length
        self.rng = np.random.default_rng(seed)
        self.t = 0
        self.cue = 0
        self.done = True

    def observation(self) -> np.ndarray:
        shown = float(self.cue) if self.t == 0 else 0.0
        return np.array([shown, self.t / (self.length - 1)])

    def reset(self) -> np.ndarray:
        self.cue = 1 if self.rng.random() < 0.5 else -1
        self.t = 0
        self.done = False
        return self.observation()

    def step(self, action: int):
        if self.done:
            raise StateError("episode is over; call reset()")
        last = self.t == self.length - 1
        reward = float(action == (1 if self.cue > 0 else 0)) if last else 0.0
        self.t += 1
        self.done = last
        return self.observation(), reward, last, {"cue": self.cue}
