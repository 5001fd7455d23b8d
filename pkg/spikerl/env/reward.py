# The MIT License (MIT)
# Copyright © 2025 SpikeRL

# Permission is hereby granted, free of charge, to any person obtaining a copy of this software and associated
# documentation files (the "Software"), to deal in the Software without restriction, including without limitation
# the rights to use, copy, modify, merge, publish, distribute, sublicense, and/or sell copies of the Software,
# and to permit persons to whom the Software is furnished to do so, subject to the following conditions:

# The above copyright notice and this permission notice shall be included in all copies or substantial portions of
# the Software.

# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR IMPLIED, INCLUDING BUT NOT LIMITED TO
# THE WARRANTIES OF MERCHANTABILITY, FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL
# THE AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER LIABILITY, WHETHER IN AN ACTION
# OF CONTRACT, TORT OR OTHERWISE, ARISING FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER
# DEALINGS IN THE SOFTWARE.

"""
Hover reward with a staged penalty curriculum.
Penalties on position, velocity, attitude and action grow linearly from their
start to their end values over a fixed number of stages.
"""

from dataclasses import dataclass, field, replace
from typing import Dict

import bittensor as bt
import numpy as np

from spikerl.core.const import CURRICULUM_STEPS, HOVER_TARGET, REWARD_COEFFICIENTS
from spikerl.core.errors import ContractViolation

COEFFICIENT_NAMES = ("C_rs", "C_rp", "C_rv", "C_rq", "C_ra", "C_rab")


@dataclass(frozen=True)
class CurriculumRewardConfig:
    """
    Reward coefficients with (start, end) pairs and the current curriculum stage.

    Stage 0 uses the start values, stage ``num_steps - 1`` the end values.
    """

    start: Dict[str, float] = field(default_factory=lambda: {k: v[0] for k, v in REWARD_COEFFICIENTS.items()})
    end: Dict[str, float] = field(default_factory=lambda: {k: v[1] for k, v in REWARD_COEFFICIENTS.items()})
    num_steps: int = CURRICULUM_STEPS
    stage: int = 0
    p_des: np.ndarray = field(default_factory=lambda: np.array(HOVER_TARGET, dtype=np.float64))
    v_des: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q_des: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        missing = [n for n in COEFFICIENT_NAMES if n not in self.start or n not in self.end]
        if missing:
            raise ContractViolation(f"Missing reward coefficients: {missing}")
        if self.num_steps < 1:
            raise ContractViolation(f"Curriculum needs at least one stage, got {self.num_steps}")
        if not 0 <= self.stage < self.num_steps:
            raise ContractViolation(f"Stage {self.stage} outside [0, {self.num_steps - 1}]")

    @classmethod
    def from_config(cls, config) -> "CurriculumRewardConfig":
        start, end = {}, {}
        for name in COEFFICIENT_NAMES:
            start[name], end[name] = (float(v) for v in getattr(config.reward, name))
        return cls(
            start=start,
            end=end,
            num_steps=int(config.reward.curriculum_steps),
            stage=int(config.reward.stage),
            p_des=np.asarray(config.env.target, dtype=np.float64),
        )

    @property
    def progress(self) -> float:
        if self.num_steps == 1:
            return 1.0
        return self.stage / (self.num_steps - 1)

    @property
    def is_final(self) -> bool:
        return self.stage >= self.num_steps - 1

    def coefficient(self, name: str) -> float:
        start, end = self.start[name], self.end[name]
        if self.stage == 0:
            return start
        if self.is_final:
            return end
        return start + self.progress * (end - start)

    @property
    def coefficients(self) -> Dict[str, float]:
        return {name: self.coefficient(name) for name in COEFFICIENT_NAMES}

    def with_penalties_scaled(self, factor: float) -> "CurriculumRewardConfig":
        """Same curriculum with every penalty (all but the survival bonus) multiplied by ``factor``."""
        start = {k: (v if k in ("C_rs", "C_rab") else v * factor) for k, v in self.start.items()}
        end = {k: (v if k in ("C_rs", "C_rab") else v * factor) for k, v in self.end.items()}
        return replace(self, start=start, end=end)


def reward(state, action: np.ndarray, cfg: CurriculumRewardConfig) -> float:
    """
    Survival bonus minus squared-error penalties.

    Args:
        state: Quadrotor state with ``position``, ``velocity`` and ``angles``.
        action: Motor command in policy units.
        cfg: Curriculum at its current stage.

    Returns:
        ``C_rs − C_rp‖p−p_des‖² − C_rv‖v−v_des‖² − C_rq‖q−q_des‖² − C_ra‖a−C_rab‖²``
    """
    c = cfg.coefficients
    a = np.asarray(action, dtype=np.float64)
    return float(
        c["C_rs"]
        - c["C_rp"] * np.sum((state.position - cfg.p_des) ** 2)
        - c["C_rv"] * np.sum((state.velocity - cfg.v_des) ** 2)
        - c["C_rq"] * np.sum((state.angles - cfg.q_des) ** 2)
        - c["C_ra"] * np.sum((a - c["C_rab"]) ** 2)
    )


def advance_curriculum(cfg: CurriculumRewardConfig) -> CurriculumRewardConfig:
    """
    Move to the next curriculum stage.

    Raises:
        ContractViolation: The curriculum is already at its final stage.
    """
    if cfg.is_final:
        raise ContractViolation(f"Curriculum already at final stage {cfg.stage}")
    advanced = replace(cfg, stage=cfg.stage + 1)
    bt.logging.info(
        f"Curriculum stage {advanced.stage}/{advanced.num_steps - 1}: "
        + ", ".join(f"{k}={v:.4g}" for k, v in advanced.coefficients.items())
    )
    return advanced
