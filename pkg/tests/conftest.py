import numpy as np
import pytest

from spikerl.env.quadrotor import DroneParams, QuadrotorEnv
from spikerl.env.reward import CurriculumRewardConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def weightless_env():
    """Environment where nothing moves under its own forces, so episodes only time out."""

    def make(episode_length=100, seed=0, penalties=1.0):
        return QuadrotorEnv(
            params=DroneParams.weightless(),
            reward_cfg=CurriculumRewardConfig().with_penalties_scaled(penalties),
            rng=np.random.default_rng(seed),
            episode_length=episode_length,
        )

    return make
