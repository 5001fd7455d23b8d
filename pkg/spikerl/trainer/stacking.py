# The MIT License (MIT)
# Copyright © 2025 SpikeRL

"""
Stateless use of the spiking actor, for runs that take the temporal dimension
out of training.

The actor sees the last ``frames`` observations concatenated, runs ``passes``
forward steps on that stack from a zeroed state and acts on the output of the
final step. Replayed transitions are expanded into ``passes``-step windows
whose loss and value masks cover only that final step, so the sequence
updates of :mod:`spikerl.trainer.td3` apply unchanged.
"""

import dataclasses
from typing import List, Sequence

import numpy as np

from spikerl.core.const import FORWARD_PASSES, OBS_DIM
from spikerl.core.errors import ContractViolation
from spikerl.networks.snn import SPIKING, SnnPolicy, snn_forward_sequence
from spikerl.replay.buffer import SequenceBatch, Transition, TransitionBatch
from spikerl.trainer.history import ActionHistory


def stack_observations(observations: np.ndarray, frames: int) -> np.ndarray:
    """
    Row ``i`` of the result holds observations ``i − frames + 1 … i``, oldest
    first, zero-padded before the first observation.
    """
    if frames < 1:
        raise ContractViolation(f"Need at least one stacked frame, got {frames}")
    observations = np.asarray(observations, dtype=np.float64)
    n, dim = observations.shape
    padded = np.concatenate([np.zeros((frames - 1, dim)), observations])
    return np.concatenate([padded[i : i + n] for i in range(frames)], axis=1)


def stack_episode(transitions: Sequence[Transition], frames: int) -> List[Transition]:
    """Copy of an episode whose observations are replaced by their stacks."""
    if not transitions:
        raise ContractViolation("Cannot stack an empty episode")
    observations = np.array([t.s for t in transitions] + [transitions[-1].s_next])
    stacked = stack_observations(observations, frames)
    return [dataclasses.replace(t, s=stacked[i], s_next=stacked[i + 1]) for i, t in enumerate(transitions)]


class StatelessPolicy:
    """
    Rollout view of a spiking actor whose input is a stack of ``frames``
    observations. The hidden state is zeroed before every action.
    """

    def __init__(self, policy: SnnPolicy, frames: int, passes: int = FORWARD_PASSES):
        if passes < 1:
            raise ContractViolation(f"Need at least one forward pass per action, got {passes}")
        if policy.obs_dim != frames * OBS_DIM:
            raise ContractViolation(
                f"Actor input of {policy.obs_dim} does not hold {frames} stacked observations of {OBS_DIM}"
            )
        self.policy = policy
        self.frames = frames
        self.passes = passes
        self.stack = ActionHistory(frames, OBS_DIM)

    @property
    def state(self):
        return self.policy.state

    def reset_state(self):
        self.stack.reset()
        self.policy.reset_state()

    def act(self, obs: np.ndarray) -> np.ndarray:
        self.stack.push(obs)
        self.policy.reset_state()
        actions, _ = snn_forward_sequence(self.policy, np.tile(self.stack.vector(), (self.passes, 1)), mode=SPIKING)
        return actions[-1]


def repeat_passes(batch: TransitionBatch, passes: int) -> SequenceBatch:
    """Expand a transition batch into ``passes`` identical steps, masked to the last one."""
    if passes < 1:
        raise ContractViolation(f"Need at least one forward pass per action, got {passes}")

    def tile(x: np.ndarray) -> np.ndarray:
        return np.repeat(np.asarray(x)[None], passes, axis=0)

    last = np.zeros((passes, batch.observations.shape[0]))
    last[-1] = 1.0
    return SequenceBatch(
        observations=tile(batch.observations),
        actions=tile(batch.actions),
        rewards=tile(batch.rewards),
        dones=tile(batch.dones),
        next_observations=tile(batch.next_observations),
        histories=tile(batch.histories),
        next_histories=tile(batch.next_histories),
        sources=tile(batch.sources),
        loss_mask=last,
        valid_mask=last.copy(),
    )
