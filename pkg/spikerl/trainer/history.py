# The MIT License (MIT)
# Copyright © 2025 SpikeRL

"""
Privileged input of the critic and the guide: the current observation followed
by the last ``length`` actions, oldest first, zero-padded at episode start.
"""

import numpy as np

from spikerl.core.const import ACT_DIM, ACTION_HISTORY_LENGTH
from spikerl.core.errors import ContractViolation


class ActionHistory:
    def __init__(self, length: int = ACTION_HISTORY_LENGTH, act_dim: int = ACT_DIM):
        self.length = length
        self.act_dim = act_dim
        self.reset()

    def reset(self):
        self.buffer = np.zeros((self.length, self.act_dim))

    def push(self, action: np.ndarray):
        action = np.asarray(action, dtype=np.float64)
        if action.shape != (self.act_dim,):
            raise ContractViolation(f"Action of shape {action.shape}, expected ({self.act_dim},)")
        if self.length == 0:
            return
        self.buffer = np.roll(self.buffer, -1, axis=0)
        self.buffer[-1] = action

    def vector(self) -> np.ndarray:
        return self.buffer.ravel().copy()

    @property
    def dim(self) -> int:
        return self.length * self.act_dim


def privileged_input(observation: np.ndarray, history: np.ndarray) -> np.ndarray:
    """Concatenate observation and flattened history along the last axis."""
    return np.concatenate([np.asarray(observation, dtype=np.float64), np.asarray(history, dtype=np.float64)], axis=-1)
