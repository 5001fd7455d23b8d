import numpy as np
import pytest
from numpy.testing import assert_allclose

from spikerl.core.errors import ContractViolation, GuideTrainingError
from spikerl.env.quadrotor import CRASH, TIMEOUT, QuadrotorEnv
from spikerl.networks.mlp import MlpNetwork
from spikerl.networks.snn import SnnPolicy
from spikerl.replay.buffer import GUIDE, POLICY
from spikerl.trainer.config import Td3Config
from spikerl.trainer.guide import guide_criterion_met, make_guide, train_guide
from spikerl.trainer.history import ActionHistory, privileged_input
from spikerl.trainer.rollout import (
    collect_episodes,
    evaluate_policy,
    guide_rollout,
    jsrl_rollout,
    policy_rollout,
    run_episode,
)


def hover_guide(inputs):
    return np.zeros(4)


def tumbling_guide(inputs):
    return np.array([2.0, 2.0, -2.0, -2.0])


@pytest.fixture
def policy(rng):
    return SnnPolicy([18, 16, 8, 4], rng=rng, gain=2.0)


class TestActionHistory:
    def test_newest_last(self):
        hist = ActionHistory(length=3, act_dim=2)
        hist.push(np.array([1.0, 1.0]))
        hist.push(np.array([2.0, 2.0]))
        assert_allclose(hist.vector(), [0.0, 0.0, 1.0, 1.0, 2.0, 2.0])
        assert hist.dim == 6

    def test_privileged_input(self):
        x = privileged_input(np.ones((5, 18)), np.zeros((5, 128)))
        assert x.shape == (5, 146)


class TestJumpStart:
    def test_guide_then_policy(self, weightless_env, policy, rng):
        env = weightless_env(episode_length=100)
        ep = jsrl_rollout(env, hover_guide, policy, n=30, rng=rng, exploration_noise=0.1)
        assert ep.guide_steps == 70
        assert ep.length == 100 and ep.done_reason == TIMEOUT
        assert [t.source for t in ep.transitions] == [GUIDE] * 70 + [POLICY] * 30
        assert not any(t.d for t in ep.transitions)

    def test_guide_actions_stored_without_noise(self, weightless_env, policy, rng):
        def steady_guide(inputs):
            return np.array([0.5, -0.25, 0.0, 1.0])

        ep = jsrl_rollout(weightless_env(episode_length=100), steady_guide, policy, n=30, rng=rng, exploration_noise=0.1)
        guided = np.stack([t.a for t in ep.transitions if t.source == GUIDE])
        assert guided.shape == (70, 4)
        assert_allclose(guided, np.tile([0.5, -0.25, 0.0, 1.0], (70, 1)), rtol=0, atol=0)
        own = np.stack([t.a for t in ep.transitions if t.source == POLICY])
        assert np.all(np.abs(own) <= 2.0)

    def test_guide_training_rollout_explores(self, weightless_env, rng):
        ep = guide_rollout(weightless_env(episode_length=40), hover_guide, rng, exploration_noise=0.1)
        assert np.max(np.abs(np.stack([t.a for t in ep.transitions]))) > 0.0

    def test_actor_state_is_warm_at_handover(self, weightless_env, policy):
        ep = jsrl_rollout(weightless_env(episode_length=100), hover_guide, policy, n=30)
        assert ep.handover_state is not None
        assert any(np.any(s.membrane != 0.0) for s in ep.handover_state)

    def test_guide_keeps_at_least_the_warm_up(self, weightless_env, policy):
        ep = jsrl_rollout(weightless_env(episode_length=100), hover_guide, policy, n=1000, warm_up=50)
        assert ep.guide_steps == 50
        assert sum(t.source == GUIDE for t in ep.transitions) == 50

    def test_history_follows_actions(self, weightless_env, policy, rng):
        ep = jsrl_rollout(weightless_env(episode_length=60), hover_guide, policy, n=20, rng=rng, exploration_noise=0.3)
        for prev, cur in zip(ep.transitions[:-1], ep.transitions[1:]):
            assert_allclose(cur.history[-4:], prev.a)
            assert_allclose(cur.s, prev.s_next)
        assert ep.transitions[0].history.shape == (128,)

    def test_crash_is_terminal(self):
        ep = guide_rollout(QuadrotorEnv(rng=np.random.default_rng(0)), tumbling_guide)
        assert ep.done_reason == CRASH
        assert ep.transitions[-1].d
        assert not any(t.d for t in ep.transitions[:-1])

    def test_policy_rollout_without_history(self, weightless_env, policy):
        ep = policy_rollout(weightless_env(episode_length=10), policy, history_length=0)
        assert ep.length == 10
        assert all(t.source == POLICY for t in ep.transitions)
        assert ep.transitions[0].history.shape == (0,)

    def test_missing_actors(self, weightless_env, policy):
        env = weightless_env(episode_length=10)
        with pytest.raises(ContractViolation):
            run_episode(env, None, policy, guide_steps=5)
        with pytest.raises(ContractViolation):
            run_episode(env, hover_guide, None, guide_steps=5)


class TestCollection:
    def test_worker_count_does_not_change_results(self, weightless_env, policy):
        def collect(workers):
            envs = [weightless_env(episode_length=30, seed=s) for s in (1, 2)]
            rngs = [np.random.default_rng(s) for s in (10, 20)]
            return collect_episodes(
                envs, rngs, 5, lambda env, r: policy_rollout(env, policy.copy(), r, 0.2), workers=workers
            )

        serial, threaded = collect(1), collect(2)
        assert [e.total_reward for e in serial] == [e.total_reward for e in threaded]
        for a, b in zip(serial, threaded):
            assert_allclose(a.transitions[-1].s_next, b.transitions[-1].s_next)

    def test_evaluation_is_deterministic(self, policy):
        def run():
            return evaluate_policy(QuadrotorEnv(rng=np.random.default_rng(4), episode_length=80), policy, 3)

        a, b = run(), run()
        assert a.rewards == b.rewards and a.lengths == b.lengths

    def test_evaluation_of_a_guide_network(self, weightless_env, rng):
        result = evaluate_policy(weightless_env(episode_length=20), make_guide(rng, (8,)), 2)
        assert result.lengths == [20, 20]
        assert result.reasons == [TIMEOUT, TIMEOUT]


class TestGuide:
    def test_tumbling_actor_fails_criterion(self):
        env = QuadrotorEnv(rng=np.random.default_rng(0))
        assert not guide_criterion_met(env, tumbling_guide, episodes=3)

    def test_weightless_env_always_passes(self, weightless_env):
        assert guide_criterion_met(weightless_env(episode_length=60), tumbling_guide, episodes=2)

    def test_guide_architecture(self, rng):
        guide = make_guide(rng)
        assert isinstance(guide, MlpNetwork)
        assert guide.sizes == [146, 64, 64, 4]

    def test_train_guide_stops_once_criterion_holds(self, weightless_env, rng):
        guide = train_guide(
            weightless_env(episode_length=60, seed=1),
            weightless_env(episode_length=60, seed=2),
            rng,
            td3=Td3Config(batch_size=8),
            hidden_sizes=(8,),
            critic_hidden_sizes=(16, 16),
            max_epochs=2,
            episodes_per_epoch=1,
            updates_per_epoch=4,
            eval_episodes=2,
        )
        assert guide.in_dim == 146 and guide.out_dim == 4

    def test_train_guide_budget_exhausted(self, weightless_env, rng):
        with pytest.raises(GuideTrainingError):
            train_guide(weightless_env(), weightless_env(), rng, max_epochs=0)
