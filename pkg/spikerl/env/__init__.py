from .reward import COEFFICIENT_NAMES, CurriculumRewardConfig, advance_curriculum, reward
from .quadrotor import (
    CRASH,
    ENCODINGS,
    NONE,
    TIMEOUT,
    CrashLimits,
    DroneParams,
    QuadrotorEnv,
    QuadrotorState,
    StepResult,
    integrate_dynamics,
    observe,
    reset,
    rotation_matrix,
    step,
)
from .trajectory import TRAJECTORY_COLUMNS, TrajectoryLog, load_observations
