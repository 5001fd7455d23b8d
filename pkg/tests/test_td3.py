import numpy as np
import pytest
from numpy.testing import assert_allclose

from spikerl.core.errors import ContractViolation
from spikerl.networks.mlp import MlpNetwork
from spikerl.networks.params import Adam
from spikerl.networks.snn import SnnPolicy
from spikerl.replay.buffer import GUIDE, POLICY, SOURCE_CODES, SequenceBatch
from spikerl.trainer.config import JsrlConfig, Td3Config
from spikerl.trainer.td3 import (
    LOSS_BC,
    LOSS_TD3,
    LOSS_TD3BC,
    TwinCritics,
    actor_loss_and_grads,
    actor_update,
    compute_td_targets,
    critic_update,
    fit_critics,
)


def make_batch(rng, steps=6, batch=2, obs_dim=3, act_dim=1, warm_up=3, source=POLICY):
    loss_mask = np.ones((steps, batch))
    loss_mask[:warm_up] = 0.0
    observations = rng.normal(size=(steps, batch, obs_dim))
    return SequenceBatch(
        observations=observations,
        actions=rng.uniform(-1.0, 1.0, size=(steps, batch, act_dim)),
        rewards=rng.normal(size=(steps, batch)),
        dones=np.zeros((steps, batch)),
        next_observations=np.concatenate([observations[1:], rng.normal(size=(1, batch, obs_dim))]),
        histories=np.zeros((steps, batch, 0)),
        next_histories=np.zeros((steps, batch, 0)),
        sources=np.full((steps, batch), SOURCE_CODES[source], dtype=np.int8),
        loss_mask=loss_mask,
        valid_mask=np.ones((steps, batch)),
    )


@pytest.fixture
def actor_setup(rng):
    policy = SnnPolicy([3, 8, 1], rng=rng, gain=3.0)
    critic = MlpNetwork([4, 8, 1], rng=rng)
    return policy, critic, make_batch(rng)


class TestTargets:
    def test_terminal_target_is_reward(self):
        y = compute_td_targets(np.array([1.5]), np.array([1.0]), np.array([10.0]), np.array([20.0]), 0.99)
        assert_allclose(y, [1.5])

    def test_zero_discount_target_is_reward(self):
        y = compute_td_targets(np.array([0.5, -2.0]), np.array([1.0, 0.0]), np.array([7.0, 7.0]), np.array([9.0, 9.0]), 0.0)
        assert_allclose(y, [0.5, -2.0])

    def test_training_config_rejects_zero_discount(self):
        with pytest.raises(ContractViolation, match="compute_td_targets"):
            Td3Config(gamma=0.0)

    def test_critic_update_terminal_targets(self, rng):
        batch = make_batch(rng)
        batch.dones[...] = 1.0
        critics = TwinCritics(3, 1, hidden_sizes=(8,), rng=rng)
        target_policy = SnnPolicy([3, 8, 1], rng=rng)
        stats = critic_update(critics, target_policy, batch, Td3Config(), rng)
        assert stats["q_target_mean"] == pytest.approx(float(np.mean(batch.rewards)))

    def test_clipped_double_q(self):
        y = compute_td_targets(np.array([1.0]), np.array([0.0]), np.array([2.0]), np.array([3.0]), 0.5)
        assert_allclose(y, [2.0])

    def test_single_state_fixed_point(self):
        # r = 1 forever, so Q* = 1 / (1 - γ) = 2
        gamma = 0.5
        critics = TwinCritics(1, 1, hidden_sizes=(8,), rng=np.random.default_rng(0), lr=0.02, optimizer="sgd")
        inputs = np.full((4, 1), 0.5)
        actions = np.zeros((4, 1))
        rewards = np.ones(4)
        dones = np.zeros(4)
        for _ in range(30):
            q1n, q2n = critics.q_values(inputs, actions, target=True)
            targets = compute_td_targets(rewards, dones, q1n, q2n, gamma)
            for _ in range(500):
                fit_critics(critics, inputs, actions, targets)
            critics.soft_update(1.0)
        q1, q2 = critics.q_values(inputs, actions)
        assert_allclose(q1, 2.0, atol=1e-2)
        assert_allclose(q2, 2.0, atol=1e-2)

    def test_masked_critic_step_is_a_no_op(self, rng):
        critics = TwinCritics(3, 1, hidden_sizes=(8,), rng=rng)
        before = [w.copy() for w in critics.q1.weights]
        batch = make_batch(rng)
        batch.valid_mask[...] = 0.0
        stats = critic_update(critics, SnnPolicy([3, 4, 1], rng=rng), batch, Td3Config(), rng)
        assert stats["critic_loss"] == 0.0
        for a, b in zip(before, critics.q1.weights):
            assert_allclose(a, b)

    def test_critic_update_reduces_loss_on_fixed_batch(self, rng):
        critics = TwinCritics(3, 1, hidden_sizes=(16,), rng=rng, lr=1e-2)
        batch = make_batch(rng)
        targets = batch.rewards
        inputs = batch.observations
        first = fit_critics(critics, inputs, batch.actions, targets)
        for _ in range(200):
            last = fit_critics(critics, inputs, batch.actions, targets)
        assert last < first

    def test_unknown_optimizer(self):
        with pytest.raises(ContractViolation):
            TwinCritics(3, 1, optimizer="rmsprop")


class TestActorLoss:
    def test_warm_up_steps_do_not_contribute(self, rng, actor_setup):
        policy, critic, batch = actor_setup
        _, grads = actor_loss_and_grads(policy, critic, batch, LOSS_TD3BC, bc_lambda=0.5)
        batch.actions[:3] = rng.uniform(-2.0, 2.0, size=batch.actions[:3].shape)
        _, again = actor_loss_and_grads(policy, critic, batch, LOSS_TD3BC, bc_lambda=0.5)
        assert_allclose(grads.flat(), again.flat())

    def test_empty_mask(self, actor_setup):
        policy, critic, batch = actor_setup
        batch.loss_mask[...] = 0.0
        stats, grads = actor_loss_and_grads(policy, critic, batch, LOSS_TD3)
        assert stats.masked_steps == 0
        assert np.all(grads.flat() == 0.0)
        before = policy.copy()
        actor_update(policy, Adam(policy), critic, batch, LOSS_TD3)
        for a, b in zip(before.weights, policy.weights):
            assert_allclose(a, b)

    def test_bc_restricted_to_guide_steps(self, actor_setup):
        policy, critic, batch = actor_setup
        stats, grads = actor_loss_and_grads(policy, critic, batch, LOSS_BC, bc_guide_only=True)
        assert stats.bc_loss == 0.0
        assert np.all(grads.flat() == 0.0)
        batch.sources[...] = SOURCE_CODES[GUIDE]
        stats, grads = actor_loss_and_grads(policy, critic, batch, LOSS_BC, bc_guide_only=True)
        assert stats.bc_loss > 0.0

    def test_q_term_normalization(self, actor_setup):
        policy, critic, batch = actor_setup
        stats, _ = actor_loss_and_grads(policy, critic, batch, LOSS_TD3BC, bc_lambda=0.0, alpha=2.0)
        assert stats.loss == pytest.approx(-stats.q_weight * stats.q_mean)
        assert stats.masked_steps == 6
        plain, _ = actor_loss_and_grads(policy, critic, batch, LOSS_TD3)
        assert plain.q_weight == 1.0
        assert plain.loss == pytest.approx(-plain.q_mean)

    def test_actor_update_leaves_critic_untouched(self, actor_setup):
        policy, critic, batch = actor_setup
        before = critic.copy()
        actor_update(policy, Adam(policy), critic, batch, LOSS_TD3BC, bc_lambda=0.2)
        for a, b in zip(before.weights + before.biases, critic.weights + critic.biases):
            assert_allclose(a, b)

    def test_unknown_loss(self, actor_setup):
        policy, critic, batch = actor_setup
        with pytest.raises(ContractViolation):
            actor_loss_and_grads(policy, critic, batch, "sac")


class TestSchedules:
    def test_bc_lambda_decay(self):
        cfg = JsrlConfig()
        lam = cfg.bc_lambda
        for epoch in range(300):
            assert cfg.bc_coefficient(epoch) == pytest.approx(lam, rel=1e-12)
            lam *= 0.99
        assert cfg.bc_coefficient(100) == pytest.approx(0.2 * 0.99**100, rel=1e-15)

    def test_guide_steps(self):
        cfg = JsrlConfig(episode_length=500, warm_up=50, epochs=1000)
        assert cfg.guide_steps(0) == 500
        assert cfg.guide_steps(500) == 250
        assert cfg.guide_steps(1000) == 50
        steps = [cfg.guide_steps(e) for e in range(1001)]
        assert min(steps) >= 50
        assert np.all(np.diff(steps) <= 0)

    def test_invalid_configs(self):
        with pytest.raises(ContractViolation):
            Td3Config(gamma=1.0)
        with pytest.raises(ContractViolation):
            Td3Config(tau=0.0)
        with pytest.raises(ContractViolation):
            JsrlConfig(bc_decay=1.5)
