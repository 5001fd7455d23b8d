# The MIT License (MIT)
# Copyright © 2025 SpikeRL

"""
CSV trajectory log: one row per control step with the observation, the raw
simulator state, the applied action, the reward and the termination reason.
"""

from typing import Dict, List

import numpy as np

from spikerl.core.const import ACT_DIM, OBS_DIM
from spikerl.core.errors import ContractViolation
from spikerl.env.quadrotor import QuadrotorState
from spikerl.utils.misc import read_csv, write_csv

STATE_COLUMNS = [
    "x", "y", "z",
    "vx", "vy", "vz",
    "roll", "pitch", "yaw",
    "p", "q", "r",
    "rpm_0", "rpm_1", "rpm_2", "rpm_3",
]
OBS_COLUMNS = [f"obs_{i}" for i in range(OBS_DIM)]
ACTION_COLUMNS = [f"a_{i}" for i in range(ACT_DIM)]
TRAJECTORY_COLUMNS = ["t"] + OBS_COLUMNS + STATE_COLUMNS + ACTION_COLUMNS + ["reward", "done_reason"]


class TrajectoryLog:
    def __init__(self, dt: float):
        self.dt = dt
        self.rows: List[Dict] = []

    def __len__(self) -> int:
        return len(self.rows)

    def record(
        self,
        observation: np.ndarray,
        state: QuadrotorState,
        action: np.ndarray,
        reward: float,
        done_reason: str,
    ):
        """Append the step that acted on ``observation`` and led to ``state``."""
        row = {"t": len(self.rows) * self.dt, "reward": float(reward), "done_reason": done_reason}
        row.update(zip(OBS_COLUMNS, np.asarray(observation, dtype=np.float64)))
        row.update(zip(STATE_COLUMNS, state.vector()))
        row.update(zip(ACTION_COLUMNS, np.asarray(action, dtype=np.float64)))
        self.rows.append(row)

    def write(self, path: str):
        write_csv(path, TRAJECTORY_COLUMNS, self.rows)


def load_observations(path: str) -> np.ndarray:
    """
    Observations of a trajectory log as a ``(T, 18)`` array.

    Raises:
        ContractViolation: The file is empty or lacks observation columns.
    """
    rows = read_csv(path)
    if not rows:
        raise ContractViolation(f"Trajectory log {path} has no rows")
    missing = [c for c in OBS_COLUMNS if c not in rows[0]]
    if missing:
        raise ContractViolation(f"Trajectory log {path} lacks columns {missing[:3]}...")
    return np.array([[float(row[c]) for c in OBS_COLUMNS] for row in rows])
