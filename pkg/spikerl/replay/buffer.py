# The MIT License (MIT)
# Copyright © 2025 SpikeRL

"""
Sequence replay: whole episodes are stored once and training sequences are
index windows into them.

An episode of length L gives full windows of ``sequence_length`` steps starting
every ``stride`` steps. When the steps after the last full window number at
least ``warm_up``, one more window aligned with the episode end is added. An
episode shorter than a window but longer than the warm-up gives one padded
window whose validity mask excludes the padding. Anything shorter is dropped.

The first ``warm_up`` steps of every window are masked out of the loss; the
network still runs through them to build up its hidden state.
"""

import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, List, Sequence, Tuple, Union

import bittensor as bt
import numpy as np

from spikerl.core.const import BUFFER_SIZE_ONLINE, SEQUENCE_LENGTH, SEQUENCE_STRIDE, WARM_UP_STEPS
from spikerl.core.errors import BufferNotReady, ContractViolation

GUIDE = "guide"
POLICY = "policy"
SOURCE_CODES = {GUIDE: 0, POLICY: 1}


@dataclass
class Transition:
    s: np.ndarray
    a: np.ndarray
    r: float
    d: bool
    s_next: np.ndarray
    source: str = POLICY
    # flattened action history preceding this step (privileged input)
    history: np.ndarray = field(default_factory=lambda: np.zeros(0))


@dataclass
class EpisodeRecord:
    """Column-wise storage of one episode."""

    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    next_observations: np.ndarray
    sources: np.ndarray
    histories: np.ndarray

    def __len__(self) -> int:
        return self.observations.shape[0]

    @classmethod
    def from_transitions(cls, transitions: Sequence[Transition]) -> "EpisodeRecord":
        if not transitions:
            raise ContractViolation("Cannot store an empty episode")
        if any(t.d for t in transitions[:-1]):
            raise ContractViolation("Only the last transition of an episode may be terminal")
        unknown = {t.source for t in transitions} - set(SOURCE_CODES)
        if unknown:
            raise ContractViolation(f"Unknown transition sources {unknown}")
        return cls(
            observations=np.array([t.s for t in transitions], dtype=np.float64),
            actions=np.array([t.a for t in transitions], dtype=np.float64),
            rewards=np.array([t.r for t in transitions], dtype=np.float64),
            dones=np.array([t.d for t in transitions], dtype=np.float64),
            next_observations=np.array([t.s_next for t in transitions], dtype=np.float64),
            sources=np.array([SOURCE_CODES[t.source] for t in transitions], dtype=np.int8),
            histories=np.array([t.history for t in transitions], dtype=np.float64),
        )

    def transitions(self) -> List[Transition]:
        names = {v: k for k, v in SOURCE_CODES.items()}
        return [
            Transition(
                s=self.observations[i],
                a=self.actions[i],
                r=float(self.rewards[i]),
                d=bool(self.dones[i]),
                s_next=self.next_observations[i],
                source=names[int(self.sources[i])],
                history=self.histories[i],
            )
            for i in range(len(self))
        ]


@dataclass
class SequenceSlice:
    """A window into a stored episode."""

    episode: EpisodeRecord
    start: int
    valid_length: int
    warm_up_mask: np.ndarray
    valid_mask: np.ndarray

    @property
    def length(self) -> int:
        return self.warm_up_mask.shape[0]

    def column(self, name: str) -> np.ndarray:
        """One episode column cut to this window, zero-padded to the full length."""
        data = getattr(self.episode, name)[self.start : self.start + self.valid_length]
        if self.valid_length == self.length:
            return data
        padded = np.zeros((self.length,) + data.shape[1:], dtype=data.dtype)
        padded[: self.valid_length] = data
        return padded


@dataclass
class SequenceBatch:
    """Time-major stacked windows: every array has shape ``(T, B, ...)``."""

    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    next_observations: np.ndarray
    histories: np.ndarray
    next_histories: np.ndarray
    sources: np.ndarray
    loss_mask: np.ndarray
    valid_mask: np.ndarray

    @property
    def length(self) -> int:
        return self.observations.shape[0]

    @property
    def batch_size(self) -> int:
        return self.observations.shape[1]


@dataclass
class TransitionBatch:
    """Flat single-step batch, every array has shape ``(B, ...)``."""

    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    next_observations: np.ndarray
    histories: np.ndarray
    next_histories: np.ndarray
    sources: np.ndarray


def shift_history(histories: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """History after ``actions``: drop the oldest action and append the new one."""
    act_dim = actions.shape[-1]
    if histories.shape[-1] == 0:
        return histories
    return np.concatenate([histories[..., act_dim:], actions], axis=-1)


def stack_batch(slices: Sequence[SequenceSlice]) -> SequenceBatch:
    if not slices:
        raise ContractViolation("Cannot stack an empty list of slices")

    def stack(name):
        return np.stack([s.column(name) for s in slices], axis=1)

    actions = stack("actions")
    histories = stack("histories")
    return SequenceBatch(
        observations=stack("observations"),
        actions=actions,
        rewards=stack("rewards"),
        dones=stack("dones"),
        next_observations=stack("next_observations"),
        histories=histories,
        next_histories=shift_history(histories, actions),
        sources=stack("sources"),
        loss_mask=np.stack([s.warm_up_mask for s in slices], axis=1),
        valid_mask=np.stack([s.valid_mask for s in slices], axis=1),
    )


def slice_starts(
    length: int,
    sequence_length: int = SEQUENCE_LENGTH,
    stride: int = SEQUENCE_STRIDE,
    warm_up: int = WARM_UP_STEPS,
) -> List[Tuple[int, int]]:
    """
    Window layout of an episode.

    Returns:
        ``(start, valid_length)`` pairs.
    """
    if length >= sequence_length:
        span = length - sequence_length
        windows = [(start, sequence_length) for start in range(0, span + 1, stride)]
        tail = span % stride
        if tail and tail >= warm_up:
            windows.append((span, sequence_length))
        return windows
    if length > warm_up:
        return [(0, length)]
    return []


class SequenceReplayBuffer:
    """
    FIFO episode store with capacity counted in transitions.

    One writer pushes episodes while any number of readers sample; each call
    holds the buffer lock, so a sample sees a consistent snapshot.
    """

    def __init__(
        self,
        capacity: int = BUFFER_SIZE_ONLINE,
        sequence_length: int = SEQUENCE_LENGTH,
        warm_up: int = WARM_UP_STEPS,
        stride: int = SEQUENCE_STRIDE,
    ):
        if not 0 <= warm_up < sequence_length:
            raise ContractViolation(f"warm_up {warm_up} must lie in [0, {sequence_length})")
        if stride < 1 or capacity < 1:
            raise ContractViolation("stride and capacity must be positive")
        self.capacity = capacity
        self.sequence_length = sequence_length
        self.warm_up = warm_up
        self.stride = stride
        self.episodes: Deque[Tuple[EpisodeRecord, int]] = deque()
        self.slices: List[SequenceSlice] = []
        self.num_transitions = 0
        self.lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.slices)

    @property
    def num_episodes(self) -> int:
        return len(self.episodes)

    def _make_slice(self, episode: EpisodeRecord, start: int, valid_length: int) -> SequenceSlice:
        valid = np.zeros(self.sequence_length)
        valid[:valid_length] = 1.0
        loss = valid.copy()
        loss[: self.warm_up] = 0.0
        return SequenceSlice(episode, start, valid_length, loss, valid)

    def push_episode(self, episode: Union[EpisodeRecord, Sequence[Transition]]) -> int:
        """
        Store an episode and index its windows.

        Returns:
            Number of windows added.
        """
        if not isinstance(episode, EpisodeRecord):
            episode = EpisodeRecord.from_transitions(episode)
        if len(episode) == 0:
            raise ContractViolation("Cannot store an empty episode")
        if len(episode) > self.capacity:
            bt.logging.warning(
                f"Episode of {len(episode)} transitions exceeds buffer capacity {self.capacity}; dropped"
            )
            return 0
        windows = [
            self._make_slice(episode, start, valid)
            for start, valid in slice_starts(len(episode), self.sequence_length, self.stride, self.warm_up)
        ]
        with self.lock:
            while self.num_transitions + len(episode) > self.capacity:
                self._evict_oldest()
            self.episodes.append((episode, len(windows)))
            self.slices.extend(windows)
            self.num_transitions += len(episode)
        return len(windows)

    def _evict_oldest(self):
        old, count = self.episodes.popleft()
        del self.slices[:count]
        self.num_transitions -= len(old)

    def sample(self, batch_size: int, rng: np.random.Generator) -> List[SequenceSlice]:
        """
        Uniformly sample windows with replacement.

        Raises:
            BufferNotReady: Fewer windows stored than ``batch_size``.
        """
        with self.lock:
            available = len(self.slices)
            if available == 0 or available < batch_size:
                raise BufferNotReady(available, batch_size)
            idx = rng.integers(0, available, size=batch_size)
            return [self.slices[i] for i in idx]

    def sample_batch(self, batch_size: int, rng: np.random.Generator) -> SequenceBatch:
        return stack_batch(self.sample(batch_size, rng))

    def sample_transitions(self, batch_size: int, rng: np.random.Generator) -> TransitionBatch:
        """
        Uniformly sample single transitions with replacement.

        Raises:
            BufferNotReady: Fewer transitions stored than ``batch_size``.
        """
        with self.lock:
            if self.num_transitions == 0 or self.num_transitions < batch_size:
                raise BufferNotReady(self.num_transitions, batch_size)
            episodes = [e for e, _ in self.episodes]
            ends = np.cumsum([len(e) for e in episodes])
            flat = rng.integers(0, self.num_transitions, size=batch_size)
            which = np.searchsorted(ends, flat, side="right")
            offsets = flat - np.concatenate([[0], ends[:-1]])[which]
            picked = [(episodes[w], int(o)) for w, o in zip(which, offsets)]

        def gather(name):
            return np.stack([getattr(e, name)[o] for e, o in picked])

        actions = gather("actions")
        histories = gather("histories")
        return TransitionBatch(
            observations=gather("observations"),
            actions=actions,
            rewards=gather("rewards"),
            dones=gather("dones"),
            next_observations=gather("next_observations"),
            histories=histories,
            next_histories=shift_history(histories, actions),
            sources=gather("sources"),
        )

    def all_episodes(self) -> List[EpisodeRecord]:
        with self.lock:
            return [e for e, _ in self.episodes]
