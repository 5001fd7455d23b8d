# The MIT License (MIT)
# Copyright © 2025 SpikeRL

"""
Binary episode log (``np.savez``) holding a dataset for the offline methods.
Episodes are concatenated column-wise; ``lengths`` splits them again.
"""

import os
from typing import List, Sequence

import bittensor as bt
import numpy as np

from spikerl.core.errors import ContractViolation
from spikerl.replay.buffer import EpisodeRecord, SequenceReplayBuffer

COLUMNS = ("observations", "actions", "rewards", "dones", "next_observations", "sources", "histories")


def save_episodes(path: str, episodes: Sequence[EpisodeRecord]):
    if not episodes:
        raise ContractViolation("No episodes to save")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    arrays = {name: np.concatenate([getattr(e, name) for e in episodes]) for name in COLUMNS}
    np.savez(path, lengths=np.array([len(e) for e in episodes]), **arrays)
    bt.logging.info(f"Saved {len(episodes)} episodes ({int(sum(len(e) for e in episodes))} transitions) to {path}")


def load_episodes(path: str) -> List[EpisodeRecord]:
    try:
        data = np.load(path)
    except (OSError, ValueError) as e:
        raise ContractViolation(f"Could not read episode log {path}: {e}") from e
    with data:
        missing = [name for name in ("lengths",) + COLUMNS if name not in data.files]
        if missing:
            raise ContractViolation(f"Episode log {path} lacks arrays {missing}")
        bounds = np.cumsum(data["lengths"])[:-1]
        columns = {name: np.split(data[name], bounds) for name in COLUMNS}
    return [
        EpisodeRecord(**{name: columns[name][i] for name in COLUMNS})
        for i in range(len(columns["observations"]))
    ]


def fill_buffer(buffer: SequenceReplayBuffer, episodes: Sequence[EpisodeRecord]) -> int:
    """Push every episode; returns the number of windows added."""
    return sum(buffer.push_episode(e) for e in episodes)
