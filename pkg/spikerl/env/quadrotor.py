# The MIT License (MIT)
# Copyright © 2025 SpikeRL

"""
Crazyflie-class quadrotor at a 100 Hz control rate.

Motor speeds follow their commands through a first-order lag, each motor's
thrust is a quadratic in its speed, and the rigid body is integrated with
explicit Euler steps: body torques drive the body rates, the collective thrust
is rotated into the world frame for the translational update.

Motor speeds are expressed in command units (0 to ``rpm_max``) to match the
thrust polynomial.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import bittensor as bt
import numpy as np

from spikerl.core.const import (
    ACT_DIM,
    ACTION_HIGH,
    ACTION_LOW,
    CONTROL_DT,
    CRASH_MAX_DISTANCE,
    CRASH_MAX_TILT_DEG,
    EPISODE_LENGTH,
    GRAVITY,
    HOVER_TARGET,
    OBS_DIM,
)
from spikerl.core.errors import ContractViolation, SimulationDivergedError
from spikerl.env.reward import CurriculumRewardConfig, advance_curriculum, reward

CRASH = "crash"
TIMEOUT = "timeout"
NONE = "none"

ROTATION_MATRIX = "rotation_matrix"
EULER_ROWS = "euler_rows"
EULER_PADDED = "euler_padded"
ENCODINGS = (ROTATION_MATRIX, EULER_ROWS, EULER_PADDED)


@dataclass
class DroneParams:
    """Physical constants of the simulated vehicle (SI units, speeds in command units)."""

    mass: float = 0.033
    inertia: Tuple[float, float, float] = (1.66e-5, 1.66e-5, 2.93e-5)
    arm_length: float = 0.046
    c0: float = 5.484560e-4
    c1: float = 1.032633e-6
    c2: float = 2.130295e-11
    rpm_max: float = 65535.0
    tau_motor: float = 0.05
    gravity: float = GRAVITY
    # yaw reaction torque per newton of thrust
    yaw_torque_ratio: float = 0.006

    def __post_init__(self):
        if self.c2 < 0.0:
            raise ContractViolation(f"Thrust coefficient c2 must be >= 0, got {self.c2}")
        if self.tau_motor <= 0.0:
            raise ContractViolation(f"Motor time constant must be positive, got {self.tau_motor}")
        if self.mass <= 0.0 or min(self.inertia) <= 0.0:
            raise ContractViolation("Mass and inertia must be positive")

    @classmethod
    def weightless(cls, **overrides) -> "DroneParams":
        """Debug preset: no gravity and motors that produce no thrust, so nothing can fall."""
        return cls(**{"gravity": 0.0, "c0": 0.0, "c1": 0.0, "c2": 0.0, **overrides})

    @classmethod
    def from_config(cls, config) -> "DroneParams":
        env = config.env
        overrides = {"mass": float(env.mass), "tau_motor": float(env.tau_motor)}
        if env.weightless:
            return cls.weightless(**overrides)
        return cls(**overrides)

    def thrust(self, rpm: np.ndarray) -> np.ndarray:
        return self.c0 + self.c1 * rpm + self.c2 * rpm**2

    @property
    def hover_rpm(self) -> float:
        """Motor speed at which four motors carry the vehicle weight."""
        per_motor = self.mass * self.gravity / 4.0
        if self.c2 > 0.0:
            disc = self.c1**2 + 4.0 * self.c2 * (per_motor - self.c0)
            return float((-self.c1 + np.sqrt(max(disc, 0.0))) / (2.0 * self.c2))
        if self.c1 > 0.0:
            return float(max(per_motor - self.c0, 0.0) / self.c1)
        return 0.0

    def action_to_rpm(self, action: np.ndarray) -> np.ndarray:
        a = np.clip(action, ACTION_LOW, ACTION_HIGH)
        return (a - ACTION_LOW) / (ACTION_HIGH - ACTION_LOW) * self.rpm_max

    def rpm_to_action(self, rpm: np.ndarray) -> np.ndarray:
        return ACTION_LOW + np.asarray(rpm) / self.rpm_max * (ACTION_HIGH - ACTION_LOW)


@dataclass
class QuadrotorState:
    """
    Full simulator state. ``angles`` are (roll, pitch, yaw) in radians,
    ``rates`` the body angular velocity (p, q, r).
    """

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angles: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rates: np.ndarray = field(default_factory=lambda: np.zeros(3))
    motor_rpm: np.ndarray = field(default_factory=lambda: np.zeros(4))
    step: int = 0

    def copy(self) -> "QuadrotorState":
        return QuadrotorState(
            position=self.position.copy(),
            velocity=self.velocity.copy(),
            angles=self.angles.copy(),
            rates=self.rates.copy(),
            motor_rpm=self.motor_rpm.copy(),
            step=self.step,
        )

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.position))
            and np.all(np.isfinite(self.velocity))
            and np.all(np.isfinite(self.angles))
            and np.all(np.isfinite(self.rates))
            and np.all(np.isfinite(self.motor_rpm))
        )

    def vector(self) -> np.ndarray:
        """Flat (position, velocity, angles, rates, motor_rpm) record, 16 entries."""
        return np.concatenate([self.position, self.velocity, self.angles, self.rates, self.motor_rpm])


@dataclass
class CrashLimits:
    max_tilt_deg: float = CRASH_MAX_TILT_DEG
    max_distance: float = CRASH_MAX_DISTANCE
    min_altitude: float = 0.0


@dataclass
class StepResult:
    state: QuadrotorState
    reward: float
    done: bool
    done_reason: str


def rotation_matrix(angles: np.ndarray) -> np.ndarray:
    """Body-to-world rotation for ZYX (yaw, pitch, roll) Euler angles."""
    roll, pitch, yaw = angles
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def _body_torques(thrusts: np.ndarray, params: DroneParams) -> np.ndarray:
    # X layout: motors front-right, back-right, back-left, front-left
    l = params.arm_length / np.sqrt(2.0)
    t0, t1, t2, t3 = thrusts
    return np.array(
        [
            l * (-t0 - t1 + t2 + t3),
            l * (-t0 + t1 + t2 - t3),
            params.yaw_torque_ratio * (-t0 + t1 - t2 + t3),
        ]
    )


def _euler_rates(angles: np.ndarray, rates: np.ndarray) -> np.ndarray:
    roll, pitch, _ = angles
    p, q, r = rates
    sr, cr = np.sin(roll), np.cos(roll)
    cp, tp = np.cos(pitch), np.tan(pitch)
    return np.array(
        [
            p + sr * tp * q + cr * tp * r,
            cr * q - sr * r,
            (sr * q + cr * r) / cp,
        ]
    )


def integrate_dynamics(
    state: QuadrotorState,
    action: np.ndarray,
    params: DroneParams,
    dt: float = CONTROL_DT,
    substeps: int = 1,
) -> QuadrotorState:
    """
    Advance the physics by one control period without reward or termination.

    Args:
        state: Current state.
        action: Four motor commands in ``[-2, 2]``; values outside are clipped.
        params: Vehicle constants.
        dt: Control period in seconds.
        substeps: Explicit Euler sub-steps per control period.

    Returns:
        The next state, with ``step`` incremented.
    """
    action = np.asarray(action, dtype=np.float64)
    if action.shape != (ACT_DIM,) or not np.all(np.isfinite(action)):
        raise ContractViolation(f"Action must be {ACT_DIM} finite values, got {action}")
    if substeps < 1:
        raise ContractViolation(f"substeps must be >= 1, got {substeps}")
    rpm_des = params.action_to_rpm(action)
    inertia = np.asarray(params.inertia, dtype=np.float64)
    gravity = np.array([0.0, 0.0, params.gravity])
    h = dt / substeps

    p, v = state.position.copy(), state.velocity.copy()
    ang, w = state.angles.copy(), state.rates.copy()
    rpm = state.motor_rpm.copy()
    for _ in range(substeps):
        rpm = rpm + (rpm_des - rpm) / params.tau_motor * h
        thrusts = params.thrust(rpm)
        accel = rotation_matrix(ang) @ np.array([0.0, 0.0, thrusts.sum()]) / params.mass - gravity
        torque = _body_torques(thrusts, params)
        w_dot = (torque - np.cross(w, inertia * w)) / inertia
        ang_dot = _euler_rates(ang, w)

        p = p + v * h
        v = v + accel * h
        ang = ang + ang_dot * h
        w = w + w_dot * h
    ang[2] = (ang[2] + np.pi) % (2.0 * np.pi) - np.pi

    return QuadrotorState(position=p, velocity=v, angles=ang, rates=w, motor_rpm=rpm, step=state.step + 1)


def crashed(state: QuadrotorState, target: np.ndarray, limits: CrashLimits) -> bool:
    max_tilt = np.deg2rad(limits.max_tilt_deg)
    return bool(
        state.position[2] < limits.min_altitude
        or abs(state.angles[0]) > max_tilt
        or abs(state.angles[1]) > max_tilt
        or np.linalg.norm(state.position - target) > limits.max_distance
    )


def step(
    state: QuadrotorState,
    action: np.ndarray,
    params: DroneParams,
    cfg: CurriculumRewardConfig,
    dt: float = CONTROL_DT,
    substeps: int = 1,
    episode_length: int = EPISODE_LENGTH,
    limits: Optional[CrashLimits] = None,
) -> StepResult:
    """
    One control step: dynamics, reward on the next state and termination.

    Raises:
        SimulationDivergedError: The next state contains non-finite values.
    """
    limits = limits or CrashLimits()
    nxt = integrate_dynamics(state, action, params, dt, substeps)
    if not nxt.is_finite():
        raise SimulationDivergedError(f"Non-finite quadrotor state at step {nxt.step}")
    r = reward(nxt, action, cfg)
    if crashed(nxt, cfg.p_des, limits):
        return StepResult(nxt, r, True, CRASH)
    if nxt.step >= episode_length:
        return StepResult(nxt, r, True, TIMEOUT)
    return StepResult(nxt, r, False, NONE)


def reset(
    rng: np.random.Generator,
    params: Optional[DroneParams] = None,
    target: np.ndarray = np.array(HOVER_TARGET),
    position_range: float = 0.3,
    velocity_range: float = 0.1,
    angle_range: float = 0.1,
    rate_range: float = 0.05,
) -> QuadrotorState:
    """
    Sample an initial state near ``target`` with motors spinning at hover speed.
    """
    params = params or DroneParams()
    return QuadrotorState(
        position=np.asarray(target, dtype=np.float64) + rng.uniform(-position_range, position_range, 3),
        velocity=rng.uniform(-velocity_range, velocity_range, 3),
        angles=rng.uniform(-angle_range, angle_range, 3),
        rates=rng.uniform(-rate_range, rate_range, 3),
        motor_rpm=np.full(4, params.hover_rpm),
        step=0,
    )


def observe(state: QuadrotorState, target: np.ndarray, encoding: str = ROTATION_MATRIX) -> np.ndarray:
    """
    The 18-dim observation: position relative to the target, velocity, an attitude
    block chosen by ``encoding`` and body rates.
    """
    rel = state.position - target
    if encoding == ROTATION_MATRIX:
        parts = [rel, state.velocity, rotation_matrix(state.angles).ravel(), state.rates]
    elif encoding == EULER_ROWS:
        parts = [rel, state.velocity, state.angles, rotation_matrix(state.angles)[:2].ravel(), state.rates]
    elif encoding == EULER_PADDED:
        parts = [rel, state.velocity, state.angles, state.rates, np.zeros(6)]
    else:
        raise ContractViolation(f"Unknown attitude encoding {encoding!r}, expected one of {ENCODINGS}")
    obs = np.concatenate(parts)
    assert obs.shape == (OBS_DIM,)
    return obs


class QuadrotorEnv:
    """
    Stateful episode wrapper around :func:`step` and :func:`reset`.

    One instance belongs to one worker; parallel collection uses one instance per worker.
    """

    def __init__(
        self,
        params: Optional[DroneParams] = None,
        reward_cfg: Optional[CurriculumRewardConfig] = None,
        rng: Optional[np.random.Generator] = None,
        dt: float = CONTROL_DT,
        substeps: int = 1,
        episode_length: int = EPISODE_LENGTH,
        encoding: str = ROTATION_MATRIX,
        limits: Optional[CrashLimits] = None,
        reset_position: float = 0.3,
    ):
        if encoding not in ENCODINGS:
            raise ContractViolation(f"Unknown attitude encoding {encoding!r}, expected one of {ENCODINGS}")
        self.params = params or DroneParams()
        self.reward_cfg = reward_cfg or CurriculumRewardConfig()
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.dt = dt
        self.substeps = substeps
        self.episode_length = episode_length
        self.encoding = encoding
        self.limits = limits or CrashLimits()
        self.reset_position = reset_position
        self.state: Optional[QuadrotorState] = None
        self.done = True
        # env.step calls over the lifetime of this instance
        self.total_steps = 0

    @classmethod
    def from_config(cls, config, rng: Optional[np.random.Generator] = None) -> "QuadrotorEnv":
        env = config.env
        return cls(
            params=DroneParams.from_config(config),
            reward_cfg=CurriculumRewardConfig.from_config(config),
            rng=rng,
            dt=float(env.dt),
            substeps=int(env.substeps),
            episode_length=int(env.episode_length),
            encoding=env.attitude_encoding,
            limits=CrashLimits(max_tilt_deg=float(env.max_tilt_deg), max_distance=float(env.max_distance)),
            reset_position=float(env.reset_position),
        )

    @property
    def target(self) -> np.ndarray:
        return self.reward_cfg.p_des

    def reset(self) -> np.ndarray:
        self.state = reset(self.rng, self.params, self.target, position_range=self.reset_position)
        self.done = False
        return self.observe()

    def observe(self) -> np.ndarray:
        return observe(self.state, self.target, self.encoding)

    def step(self, action: np.ndarray) -> Tuple[np.ndarray, float, bool, Dict[str, str]]:
        """
        Returns:
            (observation, reward, done, info) where ``info["done_reason"]`` is
            ``"crash"``, ``"timeout"`` or ``"none"``.
        """
        if self.state is None or self.done:
            raise ContractViolation("step() called on a finished episode; call reset() first")
        self.total_steps += 1
        try:
            result = step(
                self.state,
                action,
                self.params,
                self.reward_cfg,
                self.dt,
                self.substeps,
                self.episode_length,
                self.limits,
            )
        except SimulationDivergedError as e:
            bt.logging.warning(f"{e}; ending episode as a crash")
            self.done = True
            self.state = replace(self.state, step=self.state.step + 1)
            return self.observe(), 0.0, True, {"done_reason": CRASH}
        self.state = result.state
        self.done = result.done
        return self.observe(), result.reward, result.done, {"done_reason": result.done_reason}

    def advance_curriculum(self):
        self.reward_cfg = advance_curriculum(self.reward_cfg)

    def set_stage(self, stage: int):
        self.reward_cfg = replace(self.reward_cfg, stage=stage)

    def hover_action(self) -> np.ndarray:
        return np.full(ACT_DIM, float(self.params.rpm_to_action(self.params.hover_rpm)))
