# The MIT License (MIT)
# Copyright © 2025 SpikeRL

import csv
import os
from typing import Dict, Iterable, List, Mapping, Sequence

import numpy as np

# Named random streams split from one run seed. Ablations that share a seed
# therefore share network initialisations and environment resets.
SEED_STREAMS = ("init", "env", "noise", "sampler", "eval", "guide")


def seed_streams(seed: int) -> Dict[str, np.random.Generator]:
    """
    Split ``seed`` into one independent generator per entry of ``SEED_STREAMS``.

    Args:
        seed (int): Run seed.

    Returns:
        Dict[str, np.random.Generator]: Generators keyed by stream name.
    """
    children = np.random.SeedSequence(int(seed)).spawn(len(SEED_STREAMS))
    return {name: np.random.default_rng(child) for name, child in zip(SEED_STREAMS, children)}


def spawn_generators(rng: np.random.Generator, count: int) -> List[np.random.Generator]:
    """Derive ``count`` child generators from ``rng`` in a fixed order."""
    seeds = rng.integers(0, 2**63 - 1, size=count)
    return [np.random.default_rng(int(s)) for s in seeds]


def ensure_parent_dir(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def _format_cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_csv(path: str, columns: Sequence[str], rows: Iterable[Mapping], append: bool = False):
    """
    Write dict rows to ``path`` with a header line.

    Floats are written with ``repr`` so identical values always give identical bytes.
    When ``append`` is set and the file exists, rows are added without a new header.
    """
    ensure_parent_dir(path)
    write_header = not (append and os.path.exists(path))
    with open(path, "a" if append else "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), lineterminator="\n")
        if write_header:
            writer.writeheader()
        for row in rows:
            writer.writerow({c: _format_cell(row.get(c, "")) for c in columns})


def read_csv(path: str) -> List[Dict[str, str]]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))
