# The MIT License (MIT)
# Copyright © 2025 SpikeRL

"""
Episode collection: jump-started rollouts, plain policy rollouts, guide
rollouts, evaluation and multi-environment collection.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from spikerl.core.const import ACT_DIM, ACTION_HIGH, ACTION_LOW, ACTION_HISTORY_LENGTH, WARM_UP_STEPS
from spikerl.core.errors import ContractViolation
from spikerl.env.quadrotor import CRASH, QuadrotorEnv
from spikerl.env.trajectory import TrajectoryLog
from spikerl.networks.lif import LifLayerState
from spikerl.networks.snn import SnnPolicy
from spikerl.replay.buffer import GUIDE, POLICY, Transition
from spikerl.trainer.stacking import StatelessPolicy
from spikerl.trainer.history import ActionHistory, privileged_input

# Maps a privileged input (observation + action history) to an action
GuideActor = Callable[[np.ndarray], np.ndarray]


@dataclass
class EpisodeResult:
    transitions: List[Transition] = field(default_factory=list)
    total_reward: float = 0.0
    done_reason: str = "none"
    guide_steps: int = 0
    # spiking actor's hidden state when it took over control
    handover_state: Optional[List[LifLayerState]] = None

    @property
    def length(self) -> int:
        return len(self.transitions)


def _explore(action: np.ndarray, rng: Optional[np.random.Generator], noise: float) -> np.ndarray:
    if rng is not None and noise > 0.0:
        action = action + rng.normal(0.0, noise, size=action.shape)
    return np.clip(action, ACTION_LOW, ACTION_HIGH)


def run_episode(
    env: QuadrotorEnv,
    guide: Optional[GuideActor],
    policy: Optional[Union[SnnPolicy, StatelessPolicy]],
    guide_steps: int,
    rng: Optional[np.random.Generator] = None,
    exploration_noise: float = 0.0,
    history_length: int = ACTION_HISTORY_LENGTH,
    trajectory: Optional[TrajectoryLog] = None,
    explore_guide: bool = False,
) -> EpisodeResult:
    """
    Run one episode where ``guide`` controls the first ``guide_steps`` steps and
    ``policy`` the rest.

    The spiking actor sees every observation from step 0, so its hidden state
    is warmed up when it takes over. Exploration noise applies to the spiking
    actor only; guide actions are stored as issued unless ``explore_guide`` is
    set, which only the guide's own training does.
    """
    if guide is None and guide_steps > 0:
        raise ContractViolation("guide_steps > 0 needs a guide")
    if policy is None and guide_steps < env.episode_length:
        raise ContractViolation("A policy is required once the guide hands over")

    obs = env.reset()
    history = ActionHistory(history_length, ACT_DIM)
    if policy is not None:
        policy.reset_state()
    result = EpisodeResult(guide_steps=guide_steps)

    for t in range(env.episode_length):
        hist = history.vector()
        snn_action = policy.act(obs) if policy is not None else None
        if t < guide_steps:
            action = np.asarray(guide(privileged_input(obs, hist)), dtype=np.float64)
            action = _explore(action, rng, exploration_noise if explore_guide else 0.0)
            source = GUIDE
        else:
            if t == guide_steps and policy is not None:
                result.handover_state = [s.copy() for s in policy.state]
            action = _explore(snn_action, rng, exploration_noise)
            source = POLICY
        next_obs, r, done, info = env.step(action)
        if trajectory is not None:
            trajectory.record(obs, env.state, action, r, info["done_reason"])
        terminal = done and info["done_reason"] == CRASH
        result.transitions.append(Transition(obs, action, r, terminal, next_obs, source, hist))
        result.total_reward += r
        history.push(action)
        obs = next_obs
        if done:
            result.done_reason = info["done_reason"]
            break
    return result


def jsrl_rollout(
    env: QuadrotorEnv,
    guide: GuideActor,
    policy: SnnPolicy,
    n: int,
    rng: Optional[np.random.Generator] = None,
    exploration_noise: float = 0.0,
    warm_up: int = WARM_UP_STEPS,
    history_length: int = ACTION_HISTORY_LENGTH,
) -> EpisodeResult:
    """
    Jump-started episode: the guide controls ``max(L − n, warm_up)`` steps,
    where L is the episode length, then the spiking actor takes over.
    """
    guide_steps = max(env.episode_length - int(n), warm_up)
    return run_episode(env, guide, policy, guide_steps, rng, exploration_noise, history_length)


def policy_rollout(
    env: QuadrotorEnv,
    policy: SnnPolicy,
    rng: Optional[np.random.Generator] = None,
    exploration_noise: float = 0.0,
    history_length: int = ACTION_HISTORY_LENGTH,
) -> EpisodeResult:
    return run_episode(env, None, policy, 0, rng, exploration_noise, history_length)


def guide_rollout(
    env: QuadrotorEnv,
    guide: GuideActor,
    rng: Optional[np.random.Generator] = None,
    exploration_noise: float = 0.0,
    history_length: int = ACTION_HISTORY_LENGTH,
) -> EpisodeResult:
    return run_episode(
        env, guide, None, env.episode_length, rng, exploration_noise, history_length, explore_guide=exploration_noise > 0.0
    )


@dataclass
class EvalResult:
    rewards: List[float]
    lengths: List[int]
    reasons: List[str]

    @property
    def mean_reward(self) -> float:
        return float(np.mean(self.rewards))

    @property
    def mean_length(self) -> float:
        return float(np.mean(self.lengths))


def evaluate_policy(
    env: QuadrotorEnv,
    actor,
    episodes: int,
    history_length: int = ACTION_HISTORY_LENGTH,
    trajectory: Optional[TrajectoryLog] = None,
) -> EvalResult:
    """
    Noise-free evaluation of a spiking actor or a dense guide.

    Args:
        env: Environment reserved for evaluation.
        actor: :class:`SnnPolicy` or :class:`StatelessPolicy`, or a callable on privileged inputs.
        episodes: Number of episodes.
        trajectory: Records the first episode when given.
    """
    if episodes < 1:
        raise ContractViolation(f"Need at least one evaluation episode, got {episodes}")
    rewards, lengths, reasons = [], [], []
    for i in range(episodes):
        log = trajectory if i == 0 else None
        if isinstance(actor, (SnnPolicy, StatelessPolicy)):
            ep = run_episode(env, None, actor, 0, history_length=history_length, trajectory=log)
        else:
            ep = run_episode(env, actor, None, env.episode_length, history_length=history_length, trajectory=log)
        rewards.append(ep.total_reward)
        lengths.append(ep.length)
        reasons.append(ep.done_reason)
    return EvalResult(rewards, lengths, reasons)


def collect_episodes(
    envs: Sequence[QuadrotorEnv],
    rngs: Sequence[np.random.Generator],
    count: int,
    rollout: Callable[[QuadrotorEnv, np.random.Generator], EpisodeResult],
    workers: int = 1,
) -> List[EpisodeResult]:
    """
    Collect ``count`` episodes round-robin over ``envs``.

    Episode ``i`` always runs on ``envs[i % len(envs)]`` with that worker's
    generator, and results come back in episode order, so the output does not
    depend on thread scheduling. ``rollout`` must not share mutable actor state
    between workers.
    """
    if len(envs) != len(rngs) or not envs:
        raise ContractViolation("Need one generator per environment")
    slots = [list(range(i, count, len(envs))) for i in range(len(envs))]

    def work(i: int) -> List[EpisodeResult]:
        return [rollout(envs[i], rngs[i]) for _ in slots[i]]

    if workers > 1 and len(envs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_env = list(pool.map(work, range(len(envs))))
    else:
        per_env = [work(i) for i in range(len(envs))]

    ordered: List[Optional[EpisodeResult]] = [None] * count
    for i, results in enumerate(per_env):
        for index, episode in zip(slots[i], results):
            ordered[index] = episode
    return ordered
