# The MIT License (MIT)
# Copyright © 2025 SpikeRL

"""
Privileged guide: a dense actor on observation plus action history, trained
with single-transition TD3 until it can hold the drone through the warm-up
period on every evaluation episode.
"""

from typing import Optional, Sequence

import bittensor as bt
import numpy as np

from spikerl.core.const import ACT_DIM, ACTION_HISTORY_LENGTH, GUIDE_EVAL_EPISODES, OBS_DIM, WARM_UP_STEPS
from spikerl.core.errors import BufferNotReady, GuideTrainingError
from spikerl.env.quadrotor import TIMEOUT, QuadrotorEnv
from spikerl.networks.mlp import RELU, MlpNetwork
from spikerl.networks.params import Adam, soft_update
from spikerl.replay.buffer import SequenceReplayBuffer
from spikerl.trainer.config import Td3Config
from spikerl.trainer.rollout import GuideActor, evaluate_policy, guide_rollout
from spikerl.trainer.td3 import TwinCritics, critic_update_transitions, guide_actor_update
from spikerl.utils.logging import log_event


def guide_criterion_met(
    env: QuadrotorEnv,
    actor: GuideActor,
    episodes: int = GUIDE_EVAL_EPISODES,
    warm_up: int = WARM_UP_STEPS,
    history_length: int = ACTION_HISTORY_LENGTH,
) -> bool:
    """
    True when every noise-free episode survives at least ``warm_up`` steps
    (or runs to its time limit) without crashing.
    """
    result = evaluate_policy(env, actor, episodes, history_length)
    return all(
        length >= warm_up or reason == TIMEOUT for length, reason in zip(result.lengths, result.reasons)
    )


def make_guide(
    rng: np.random.Generator,
    hidden_sizes: Sequence[int] = (64, 64),
    history_length: int = ACTION_HISTORY_LENGTH,
) -> MlpNetwork:
    return MlpNetwork([OBS_DIM + history_length * ACT_DIM, *hidden_sizes, ACT_DIM], RELU, rng=rng)


def train_guide(
    env: QuadrotorEnv,
    eval_env: QuadrotorEnv,
    rng: np.random.Generator,
    td3: Optional[Td3Config] = None,
    hidden_sizes: Sequence[int] = (64, 64),
    critic_hidden_sizes: Sequence[int] = (256, 256),
    max_epochs: int = 200,
    episodes_per_epoch: int = 2,
    updates_per_epoch: int = 50,
    eval_episodes: int = GUIDE_EVAL_EPISODES,
    warm_up: int = WARM_UP_STEPS,
    history_length: int = ACTION_HISTORY_LENGTH,
) -> MlpNetwork:
    """
    Train the guide until :func:`guide_criterion_met` holds.

    Raises:
        GuideTrainingError: The criterion still fails after ``max_epochs``.
    """
    td3 = td3 or Td3Config()
    actor = make_guide(rng, hidden_sizes, history_length)
    target = actor.copy()
    optimizer = Adam(actor, td3.lr)
    critics = TwinCritics(actor.in_dim, ACT_DIM, critic_hidden_sizes, rng=rng, lr=td3.lr)
    buffer = SequenceReplayBuffer(capacity=1_000_000)

    for epoch in range(max_epochs):
        for _ in range(episodes_per_epoch):
            episode = guide_rollout(env, actor, rng, td3.exploration_noise, history_length)
            buffer.push_episode(episode.transitions)

        critic_loss = actor_loss = float("nan")
        for update in range(updates_per_epoch):
            try:
                batch = buffer.sample_transitions(td3.batch_size, rng)
            except BufferNotReady as e:
                bt.logging.debug(f"Guide update skipped: {e}")
                break
            critic_loss = critic_update_transitions(critics, target, batch, td3, rng)["critic_loss"]
            if update % td3.actor_delay == 0:
                actor_loss = guide_actor_update(actor, optimizer, critics.q1, batch)
                soft_update(target, actor, td3.tau)
                critics.soft_update(td3.tau)

        bt.logging.info(
            f"Guide epoch {epoch} | critic loss {critic_loss:.4f} | actor loss {actor_loss:.4f} | "
            f"transitions {buffer.num_transitions}"
        )
        if guide_criterion_met(eval_env, actor, eval_episodes, warm_up, history_length):
            bt.logging.success(f"Guide met its stop criterion after {epoch + 1} epochs")
            log_event("guide_trained", epochs=epoch + 1)
            return actor

    raise GuideTrainingError(
        f"Guide did not survive {warm_up} steps on {eval_episodes} episodes within {max_epochs} epochs"
    )
