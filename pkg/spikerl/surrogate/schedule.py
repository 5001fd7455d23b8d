# The MIT License (MIT)
# Copyright © 2025 SpikeRL

"""
Surrogate slope schedules.

* ``fixed``    keeps k constant.
* ``interval`` steps k up at listed epochs.
* ``adaptive`` follows the evaluation score: k is the window mean of
  ``0.5·r + 0.5·r'`` where r is the normalised score and r' its first difference,
  taken against the preceding score even once that score has left the window.

k is clamped to ``[k_min, k_max]`` after every change.
"""

from collections import deque
from dataclasses import dataclass, field
from typing import Deque, List, Optional, Sequence, Tuple

import bittensor as bt
import numpy as np

from spikerl.core.const import (
    SCHEDULING_ORDER,
    SCORE_CEIL,
    SCORE_FLOOR,
    SLOPE_INTERVAL_EPOCHS,
    SLOPE_MAX,
    SLOPE_MIN,
    SLOPE_START,
    SLOPE_WINDOW,
)
from spikerl.core.errors import ContractViolation

FIXED = "fixed"
INTERVAL = "interval"
ADAPTIVE = "adaptive"
SLOPE_MODES = (FIXED, INTERVAL, ADAPTIVE)


def normalize_score(
    raw_reward: float, floor: float = SCORE_FLOOR, ceil: float = SCORE_CEIL
) -> float:
    """
    Map a raw mean episode reward linearly from ``[floor, ceil]`` onto ``[0, 100]``.

    Values outside the range are clipped.
    """
    if ceil <= floor:
        raise ContractViolation(f"Score range [{floor}, {ceil}] is empty")
    score = 100.0 * (float(raw_reward) - floor) / (ceil - floor)
    return float(np.clip(score, 0.0, 100.0))


def doubling_intervals(
    start: float = SLOPE_START,
    every: int = SLOPE_INTERVAL_EPOCHS,
    k_max: float = SLOPE_MAX,
) -> List[Tuple[int, float]]:
    """
    Default interval list: k starts at ``start`` and doubles every ``every`` epochs
    until it reaches ``k_max``.
    """
    if every <= 0:
        raise ContractViolation(f"Interval length must be positive, got {every}")
    steps = [(0, float(min(start, k_max)))]
    k = start
    while k < k_max:
        k = min(2.0 * k, k_max)
        steps.append((steps[-1][0] + every, float(k)))
    return steps


@dataclass
class SlopeSchedule:
    mode: str = ADAPTIVE
    k: float = SLOPE_START
    k_min: float = SLOPE_MIN
    k_max: float = SLOPE_MAX
    window_size: int = SLOPE_WINDOW
    interval_steps: List[Tuple[int, float]] = field(default_factory=doubling_intervals)
    score_floor: float = SCORE_FLOOR
    score_ceil: float = SCORE_CEIL
    # carried for config compatibility; no schedule reads it
    scheduling_order: int = SCHEDULING_ORDER
    reward_window: Deque[float] = field(default_factory=deque)
    # last score pushed out of the window, so a full window still yields window_size changes
    evicted_score: Optional[float] = None

    def __post_init__(self):
        if self.mode not in SLOPE_MODES:
            raise ContractViolation(f"Unknown slope mode {self.mode!r}, expected one of {SLOPE_MODES}")
        if not 0.0 < self.k_min <= self.k_max:
            raise ContractViolation(f"Invalid slope bounds [{self.k_min}, {self.k_max}]")
        self.reward_window = deque(self.reward_window, maxlen=self.window_size)
        self.interval_steps = sorted((int(e), float(k)) for e, k in self.interval_steps)
        if any(b[1] < a[1] for a, b in zip(self.interval_steps, self.interval_steps[1:])):
            raise ContractViolation(f"Interval slopes must be non-decreasing: {self.interval_steps}")
        if self.mode == INTERVAL and self.interval_steps:
            self.k = self.interval_steps[0][1]
        self.k = self.clamp(self.k)

    @classmethod
    def from_config(cls, config) -> "SlopeSchedule":
        slope = config.slope
        mode = slope.mode
        k = float(slope.k)
        steps = doubling_intervals(k, int(slope.interval_epochs), float(slope.k_max))
        return cls(
            mode=mode,
            k=k,
            k_min=float(slope.k_min),
            k_max=float(slope.k_max),
            window_size=int(slope.window),
            interval_steps=steps,
            score_floor=float(slope.score_floor),
            score_ceil=float(slope.score_ceil),
            scheduling_order=int(slope.scheduling_order),
        )

    def clamp(self, k: float) -> float:
        return float(np.clip(k, self.k_min, self.k_max))

    def interval_value(self, epoch: int) -> float:
        k = self.k
        for start, value in self.interval_steps:
            if epoch >= start:
                k = value
        return self.clamp(k)

    def on_epoch(self, epoch: int, raw_reward: Optional[float] = None) -> float:
        """
        Advance the schedule at the end of an epoch.

        Args:
            epoch: Epoch index just completed.
            raw_reward: Mean evaluation reward; only the adaptive mode reads it.

        Returns:
            The slope to use for the next epoch.
        """
        if self.mode == INTERVAL:
            self.k = self.interval_value(epoch)
        elif self.mode == ADAPTIVE and raw_reward is not None:
            score = normalize_score(raw_reward, self.score_floor, self.score_ceil)
            update_adaptive_slope(self, score)
        return self.k

    def window(self) -> np.ndarray:
        return np.asarray(self.reward_window, dtype=np.float64)

    def restore_window(self, scores: Sequence[float], evicted: Optional[float] = None):
        self.reward_window = deque((float(s) for s in scores), maxlen=self.window_size)
        self.evicted_score = None if evicted is None or np.isnan(evicted) else float(evicted)


def update_adaptive_slope(sched: SlopeSchedule, score: float) -> float:
    """
    Push a normalised score and recompute the adaptive slope.

    Args:
        sched: An adaptive schedule.
        score: Normalised reward score, nominally in [0, 100].

    Returns:
        The new clamped slope.
    """
    if sched.mode != ADAPTIVE:
        raise ContractViolation(f"update_adaptive_slope called on a {sched.mode} schedule")
    if len(sched.reward_window) == sched.window_size:
        sched.evicted_score = sched.reward_window[0]
    sched.reward_window.append(float(score))
    scores = sched.window()
    if sched.evicted_score is None:
        diffs = np.diff(scores)
    else:
        diffs = np.diff(np.concatenate([[sched.evicted_score], scores]))
    mean_rate = float(diffs.mean()) if diffs.size else 0.0
    k = 0.5 * float(scores.mean()) + 0.5 * mean_rate
    sched.k = sched.clamp(k)
    bt.logging.trace(f"Adaptive slope: score={score:.2f} raw_k={k:.3f} k={sched.k:.3f}")
    return sched.k
