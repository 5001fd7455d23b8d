import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from spikerl.core.errors import ContractViolation
from spikerl.networks.mlp import MlpNetwork
from spikerl.networks.snn import SnnPolicy, snn_forward_sequence
from spikerl.replay.buffer import SequenceReplayBuffer
from spikerl.trainer.rollout import evaluate_policy, policy_rollout
from spikerl.trainer.stacking import StatelessPolicy, repeat_passes, stack_episode, stack_observations
from spikerl.trainer.td3 import LOSS_TD3, actor_loss_and_grads


@pytest.fixture
def stateless(rng):
    return StatelessPolicy(SnnPolicy([36, 16, 4], rng=rng, gain=2.0), frames=2, passes=3)


class TestStackObservations:
    def test_oldest_first_zero_padded(self):
        obs = np.arange(8, dtype=float).reshape(4, 2)
        stacked = stack_observations(obs, 3)
        assert stacked.shape == (4, 6)
        assert_array_equal(stacked[0], [0, 0, 0, 0, 0, 1])
        assert_array_equal(stacked[1], [0, 0, 0, 1, 2, 3])
        assert_array_equal(stacked[3], [2, 3, 4, 5, 6, 7])

    def test_single_frame_is_identity(self, rng):
        obs = rng.normal(size=(5, 18))
        assert_array_equal(stack_observations(obs, 1), obs)

    def test_rejects_zero_frames(self):
        with pytest.raises(ContractViolation):
            stack_observations(np.zeros((3, 18)), 0)

    def test_episode_chain_is_kept(self, weightless_env, stateless):
        ep = policy_rollout(weightless_env(episode_length=20), stateless, history_length=0)
        stacked = stack_episode(ep.transitions, 2)
        assert len(stacked) == 20
        for prev, cur in zip(stacked[:-1], stacked[1:]):
            assert_allclose(cur.s, prev.s_next)
        for raw, t in zip(ep.transitions, stacked):
            assert t.s.shape == (36,)
            assert_allclose(t.s[18:], raw.s)
            assert_allclose(t.a, raw.a)

    def test_empty_episode(self):
        with pytest.raises(ContractViolation):
            stack_episode([], 2)


class TestStatelessPolicy:
    def test_action_depends_only_on_the_stack(self, rng, stateless):
        obs = rng.normal(size=(6, 18))
        stateless.reset_state()
        acted = np.stack([stateless.act(o) for o in obs])
        stacked = stack_observations(obs, 2)
        for i in range(6):
            out, _ = snn_forward_sequence(stateless.policy, np.tile(stacked[i], (3, 1)))
            assert_allclose(acted[i], out[-1])

    def test_reset_clears_the_stack(self, rng, stateless):
        obs = rng.normal(size=(3, 18))
        stateless.reset_state()
        first = stateless.act(obs[0])
        stateless.act(obs[1])
        stateless.reset_state()
        assert_allclose(stateless.act(obs[0]), first)

    def test_input_must_hold_the_stack(self, rng):
        with pytest.raises(ContractViolation):
            StatelessPolicy(SnnPolicy([18, 8, 4], rng=rng), frames=2)
        with pytest.raises(ContractViolation):
            StatelessPolicy(SnnPolicy([36, 8, 4], rng=rng), frames=2, passes=0)

    def test_evaluation(self, weightless_env, stateless):
        result = evaluate_policy(weightless_env(episode_length=30), stateless, 2, history_length=0)
        assert result.lengths == [30, 30]


class TestRepeatPasses:
    def test_masks_cover_the_last_pass(self, rng, weightless_env, stateless):
        buf = SequenceReplayBuffer(capacity=10_000)
        ep = policy_rollout(weightless_env(episode_length=30), stateless, history_length=2)
        buf.push_episode(stack_episode(ep.transitions, 2))
        batch = repeat_passes(buf.sample_transitions(5, rng), 3)
        assert batch.observations.shape == (3, 5, 36)
        assert batch.histories.shape == (3, 5, 8)
        assert_array_equal(batch.loss_mask, [[0.0] * 5, [0.0] * 5, [1.0] * 5])
        assert_array_equal(batch.valid_mask, batch.loss_mask)
        assert_array_equal(batch.observations[0], batch.observations[2])

        critic = MlpNetwork([36 + 8 + 4, 8, 1], rng=rng)
        stats, _ = actor_loss_and_grads(stateless.policy, critic, batch, LOSS_TD3)
        assert stats.masked_steps == 5

    def test_rejects_zero_passes(self, rng, weightless_env, stateless):
        buf = SequenceReplayBuffer(capacity=10_000)
        buf.push_episode(policy_rollout(weightless_env(episode_length=10), stateless, history_length=0).transitions)
        with pytest.raises(ContractViolation):
            repeat_passes(buf.sample_transitions(2, rng), 0)
