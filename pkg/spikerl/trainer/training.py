# The MIT License (MIT)
# Copyright © 2025 SpikeRL

"""
Epoch loop for the four training methods of the spiking actor.

* ``bc``: offline imitation of a guide dataset.
* ``td3``: online TD3, the spiking actor acting from the first step.
* ``td3bc``: offline TD3 with a normalised Q term and a BC term.
* ``td3bc_jsrl``: online TD3+BC with jump-started rollouts from the guide.
"""

import os
from typing import Dict, List, Optional

import bittensor as bt
import numpy as np

from spikerl.base.trainer import BaseTrainer
from spikerl.core.const import ACT_DIM, CURRICULUM_INTERVAL_AUTO, OBS_DIM
from spikerl.core.errors import BufferNotReady, ContractViolation, DivergenceError
from spikerl.env.quadrotor import QuadrotorEnv
from spikerl.networks.checkpoint import load_checkpoint, save_checkpoint
from spikerl.networks.mlp import MlpNetwork
from spikerl.networks.params import Adam, soft_update
from spikerl.networks.snn import SnnPolicy
from spikerl.replay.buffer import EpisodeRecord, SequenceBatch, SequenceReplayBuffer, Transition
from spikerl.replay.episode_log import fill_buffer, load_episodes, save_episodes
from spikerl.surrogate.schedule import SlopeSchedule
from spikerl.trainer.config import JsrlConfig, Td3Config
from spikerl.trainer.guide import train_guide
from spikerl.trainer.rollout import (
    EpisodeResult,
    collect_episodes,
    evaluate_policy,
    guide_rollout,
    jsrl_rollout,
    policy_rollout,
)
from spikerl.trainer.stacking import StatelessPolicy, repeat_passes, stack_episode
from spikerl.trainer.td3 import LOSS_BC, LOSS_TD3, LOSS_TD3BC, TwinCritics, actor_update, critic_update
from spikerl.utils.config import add_env_args, add_network_args, add_slope_args, add_trainer_args
from spikerl.utils.logging import log_event
from spikerl.utils.misc import spawn_generators, write_csv

METRICS_COLUMNS = (
    "epoch",
    "env_steps",
    "mean_reward",
    "mean_episode_len",
    "lambda",
    "k_slope",
    "curriculum_stage",
    "critic_loss",
    "actor_loss",
)

ONLINE_METHODS = ("td3", "td3bc_jsrl")
ACTOR_LOSS_FOR_METHOD = {
    "bc": LOSS_BC,
    "td3": LOSS_TD3,
    "td3bc": LOSS_TD3BC,
    "td3bc_jsrl": LOSS_TD3BC,
}

CRITIC_FILES = {
    "q1": "critic1.json",
    "q2": "critic2.json",
    "q1_target": "critic1_target.json",
    "q2_target": "critic2_target.json",
}


class SpikingTrainer(BaseTrainer):
    """
    Trains a spiking actor with one of the TD3-family methods.

    Outputs in the run directory: ``metrics.csv`` (one row per epoch),
    ``actor.json`` and, when a guide is used, ``guide.json``.
    """

    run_name = "train"

    @classmethod
    def add_args(cls, parser):
        super().add_args(parser)
        add_network_args(cls, parser)
        add_slope_args(cls, parser)
        add_env_args(cls, parser)
        add_trainer_args(cls, parser)

    def __init__(self, config=None):
        super().__init__(config=config)
        c = self.config

        self.method = c.trainer.method
        if self.method not in ACTOR_LOSS_FOR_METHOD:
            raise ContractViolation(f"Unknown training method {self.method!r}")
        self.online = self.method in ONLINE_METHODS
        self.loss_kind = ACTOR_LOSS_FOR_METHOD[self.method]
        self.td3 = Td3Config.from_config(c)
        self.jsrl = JsrlConfig.from_config(c)
        self.history_length = int(c.trainer.history_length)
        self.frame_stack = int(c.trainer.frame_stack)
        self.forward_passes = int(c.trainer.forward_passes)
        if self.frame_stack > 0 and self.method == "td3bc_jsrl":
            raise ContractViolation("A stateless actor is trained with bc, td3 or td3bc, not td3bc_jsrl")
        obs_dim = OBS_DIM * max(self.frame_stack, 1)

        # One environment and noise stream per rollout worker
        workers = max(1, int(c.trainer.parallel_envs))
        self.envs = [QuadrotorEnv.from_config(c, rng) for rng in spawn_generators(self.rngs["env"], workers)]
        self.noise_rngs = spawn_generators(self.rngs["noise"], workers)
        self.eval_env = QuadrotorEnv.from_config(c, self.rngs["eval"])

        self.schedule = SlopeSchedule.from_config(c)
        sizes = [obs_dim, *c.snn.hidden_sizes, ACT_DIM]
        self.policy = SnnPolicy(
            sizes, float(c.snn.leak), float(c.snn.threshold), self.schedule.k, rng=self.rngs["init"], gain=float(c.snn.gain)
        )
        self.target_policy = self.policy.copy()
        self.actor_opt = Adam(self.policy, self.td3.lr)
        self.critics = TwinCritics(
            obs_dim + self.history_length * ACT_DIM, ACT_DIM, c.critic.hidden_sizes, rng=self.rngs["init"], lr=self.td3.lr
        )
        self.buffer = SequenceReplayBuffer(
            capacity=int(c.trainer.buffer_size),
            sequence_length=int(c.trainer.sequence_length),
            warm_up=int(c.trainer.warm_up),
            stride=int(c.trainer.stride),
        )
        self.guide: Optional[MlpNetwork] = None
        self.bc_lambda = self.jsrl.bc_coefficient(0)
        self.updates = 0
        # environment steps collected for training, summed over workers
        self.env_steps = 0
        self.last_row: Dict[str, float] = {}
        self.metrics_path = os.path.join(self.full_path, "metrics.csv")
        self.actor_path = os.path.join(self.full_path, "actor.json")
        self.guide_path = os.path.join(self.full_path, "guide.json")

    def rollout_actor(self, policy: SnnPolicy):
        """The actor as rollouts drive it: stateless over stacked observations when frames are stacked."""
        if self.frame_stack > 0:
            return StatelessPolicy(policy, self.frame_stack, self.forward_passes)
        return policy

    def stored(self, transitions: List[Transition]) -> List[Transition]:
        return stack_episode(transitions, self.frame_stack) if self.frame_stack > 0 else list(transitions)

    def sample(self) -> SequenceBatch:
        if self.frame_stack > 0:
            transitions = self.buffer.sample_transitions(self.td3.batch_size, self.rngs["sampler"])
            return repeat_passes(transitions, self.forward_passes)
        return self.buffer.sample_batch(self.td3.batch_size, self.rngs["sampler"])

    @property
    def uses_jump_start(self) -> bool:
        return self.method == "td3bc_jsrl" and self.jsrl.use_jump_start

    def setup(self):
        resumed = bool(self.config.trainer.resume) and os.path.exists(self.state_path)
        if resumed:
            self.load_state()
        elif os.path.exists(self.metrics_path):
            os.remove(self.metrics_path)

        needs_dataset = not self.online
        if self.guide is None and (self.uses_jump_start or (needs_dataset and not self.config.jsrl.dataset)):
            self.guide = self.load_or_train_guide()
        if needs_dataset:
            self.load_dataset()
        bt.logging.info(
            f"Method {self.method} | actor {self.policy.sizes} | slope mode {self.schedule.mode} k={self.schedule.k}"
        )

    def load_or_train_guide(self) -> MlpNetwork:
        c = self.config
        path = c.jsrl.guide_checkpoint
        if path:
            guide = load_checkpoint(path)
            expected = OBS_DIM + self.history_length * ACT_DIM
            if guide.kind != "mlp" or guide.in_dim != expected or guide.out_dim != ACT_DIM:
                raise ContractViolation(
                    f"Guide checkpoint {path} maps {guide.sizes[0]} -> {guide.sizes[-1]}, expected {expected} -> {ACT_DIM}"
                )
            bt.logging.info(f"Loaded guide from {path}")
        else:
            train_rng, eval_rng = spawn_generators(self.rngs["guide"], 2)
            guide = train_guide(
                QuadrotorEnv.from_config(c, train_rng),
                QuadrotorEnv.from_config(c, eval_rng),
                self.rngs["guide"],
                td3=self.td3,
                hidden_sizes=c.guide.hidden_sizes,
                critic_hidden_sizes=c.critic.hidden_sizes,
                max_epochs=self.jsrl.guide_epochs,
                episodes_per_epoch=int(c.trainer.episodes_per_epoch),
                updates_per_epoch=int(c.trainer.updates_per_epoch),
                eval_episodes=self.jsrl.guide_eval_episodes,
                warm_up=self.jsrl.warm_up,
                history_length=self.history_length,
            )
        save_checkpoint(guide, self.guide_path)
        return guide

    def load_dataset(self):
        """
        Fill the buffer for an offline method: from ``jsrl.dataset`` when given,
        otherwise from noise-free guide episodes on a dedicated environment.
        """
        c = self.config
        if c.jsrl.dataset:
            episodes = load_episodes(c.jsrl.dataset)
        else:
            env = QuadrotorEnv.from_config(c, spawn_generators(self.rngs["guide"], 1)[0])
            episodes = [
                EpisodeRecord.from_transitions(
                    guide_rollout(env, self.guide, history_length=self.history_length).transitions
                )
                for _ in range(int(c.jsrl.dataset_episodes))
            ]
            save_episodes(os.path.join(self.full_path, "dataset.npz"), episodes)
        if self.frame_stack > 0:
            episodes = [EpisodeRecord.from_transitions(self.stored(e.transitions())) for e in episodes]
        windows = fill_buffer(self.buffer, episodes)
        bt.logging.info(
            f"Offline dataset: {len(episodes)} episodes, {self.buffer.num_transitions} transitions, {windows} training windows"
        )
        if windows == 0 and self.frame_stack == 0:
            raise ContractViolation("Offline dataset yields no training windows; episodes are too short")

    def collect(self, epoch: int) -> List[EpisodeResult]:
        n = self.jsrl.jump_start_n(epoch)

        def rollout(env: QuadrotorEnv, rng: np.random.Generator) -> EpisodeResult:
            # each worker acts with its own copy of the hidden state
            actor = self.rollout_actor(self.policy.copy())
            if self.uses_jump_start:
                return jsrl_rollout(
                    env, self.guide, actor, n, rng, self.td3.exploration_noise, self.jsrl.warm_up, self.history_length
                )
            return policy_rollout(env, actor, rng, self.td3.exploration_noise, self.history_length)

        episodes = collect_episodes(
            self.envs, self.noise_rngs, int(self.config.trainer.episodes_per_epoch), rollout, workers=len(self.envs)
        )
        for episode in episodes:
            self.buffer.push_episode(self.stored(episode.transitions))
        return episodes

    def dump_divergence(self, batch: SequenceBatch, err: Exception):
        path = os.path.join(self.full_path, "divergence_dump.npz")
        np.savez(
            path,
            observations=batch.observations,
            actions=batch.actions,
            rewards=batch.rewards,
            loss_mask=batch.loss_mask,
            slope=self.policy.slope,
            **{f"actor_w{i}": w for i, w in enumerate(self.policy.weights)},
        )
        bt.logging.error(f"Training diverged at update {self.updates}: {err}. Batch and weights dumped to {path}")
        log_event("divergence", update=self.updates, epoch=self.epoch, message=str(err))

    def update(self) -> Dict[str, float]:
        c = self.config
        critic_losses, actor_losses = [], []
        for _ in range(int(c.trainer.updates_per_epoch)):
            try:
                batch = self.sample()
            except BufferNotReady as e:
                bt.logging.debug(f"Update skipped: {e}")
                break
            self.updates += 1
            try:
                if self.loss_kind != LOSS_BC:
                    stats = critic_update(self.critics, self.target_policy, batch, self.td3, self.rngs["noise"])
                    if not np.isfinite(stats["critic_loss"]):
                        raise DivergenceError(f"Critic loss became non-finite ({stats['critic_loss']})")
                    critic_losses.append(stats["critic_loss"])
                if self.loss_kind == LOSS_BC or self.updates % self.td3.actor_delay == 0:
                    actor = actor_update(
                        self.policy,
                        self.actor_opt,
                        self.critics.q1,
                        batch,
                        loss_kind=self.loss_kind,
                        bc_lambda=self.bc_lambda,
                        alpha=self.jsrl.alpha,
                        bc_guide_only=self.jsrl.bc_guide_only,
                        k=self.schedule.k,
                    )
                    actor_losses.append(actor.loss)
                    soft_update(self.target_policy, self.policy, self.td3.tau)
                    if self.loss_kind != LOSS_BC:
                        self.critics.soft_update(self.td3.tau)
            except DivergenceError as err:
                self.dump_divergence(batch, err)
                raise
        return {
            "critic_loss": float(np.mean(critic_losses)) if critic_losses else float("nan"),
            "actor_loss": float(np.mean(actor_losses)) if actor_losses else float("nan"),
        }

    @property
    def curriculum_interval(self) -> int:
        """Epochs between curriculum advances, 0 when the curriculum is frozen."""
        interval = int(self.config.reward.curriculum_interval)
        if interval != CURRICULUM_INTERVAL_AUTO:
            return max(interval, 0)
        stages = int(self.config.reward.curriculum_steps)
        if stages <= 1:
            return 0
        return max(1, self.num_epochs // stages)

    def maybe_advance_curriculum(self, epoch: int):
        interval = self.curriculum_interval
        if interval <= 0 or (epoch + 1) % interval != 0 or self.eval_env.reward_cfg.is_final:
            return
        for env in self.envs + [self.eval_env]:
            env.advance_curriculum()
        log_event("curriculum", epoch=epoch, stage=self.eval_env.reward_cfg.stage)

    def train_epoch(self, epoch: int) -> Dict[str, float]:
        if self.online:
            self.env_steps += sum(episode.length for episode in self.collect(epoch))
        self.bc_lambda = self.jsrl.bc_coefficient(epoch) if self.jsrl.use_bc_term else 0.0
        k_used = self.schedule.k
        stage = self.eval_env.reward_cfg.stage
        losses = self.update()

        result = evaluate_policy(
            self.eval_env, self.rollout_actor(self.policy), int(self.config.trainer.eval_episodes), self.history_length
        )
        k_next = self.schedule.on_epoch(epoch, result.mean_reward)
        self.policy.slope = self.target_policy.slope = k_next
        self.maybe_advance_curriculum(epoch)

        row = {
            "epoch": epoch,
            "env_steps": self.env_steps,
            "mean_reward": result.mean_reward,
            "mean_episode_len": result.mean_length,
            "lambda": self.bc_lambda if self.loss_kind == LOSS_TD3BC else 0.0,
            "k_slope": k_used,
            "curriculum_stage": stage,
            **losses,
        }
        write_csv(self.metrics_path, METRICS_COLUMNS, [row], append=True)
        self.last_row = row
        bt.logging.info(
            f"Epoch {epoch} | reward {result.mean_reward:.2f} | length {result.mean_length:.1f} | "
            f"k {k_used:.2f} | λ {row['lambda']:.4f} | critic {losses['critic_loss']:.4f} | "
            f"actor {losses['actor_loss']:.4f} | buffer {len(self.buffer)} windows"
        )
        return row

    def save_state(self):
        """Save networks as checkpoints and counters to ``state.npz``."""
        bt.logging.info("save_state()")
        save_checkpoint(self.policy, self.actor_path)
        save_checkpoint(self.target_policy, os.path.join(self.full_path, "actor_target.json"))
        for attr, name in CRITIC_FILES.items():
            save_checkpoint(getattr(self.critics, attr), os.path.join(self.full_path, name))
        np.savez(
            self.state_path,
            epoch=self.epoch,
            updates=self.updates,
            env_steps=self.env_steps,
            slope=self.schedule.k,
            slope_window=self.schedule.window(),
            slope_evicted=np.nan if self.schedule.evicted_score is None else self.schedule.evicted_score,
            stage=self.eval_env.reward_cfg.stage,
            bc_lambda=self.bc_lambda,
        )

    def load_state(self):
        """Restore networks and counters written by :meth:`save_state`. Optimiser moments restart."""
        bt.logging.info(f"load_state() from {self.state_path}")
        with np.load(self.state_path) as state:
            self.epoch = int(state["epoch"])
            self.updates = int(state["updates"])
            self.env_steps = int(state["env_steps"]) if "env_steps" in state.files else 0
            self.schedule.k = float(state["slope"])
            evicted = float(state["slope_evicted"]) if "slope_evicted" in state.files else None
            self.schedule.restore_window(state["slope_window"], evicted)
            stage = int(state["stage"])
            self.bc_lambda = float(state["bc_lambda"])
        self.policy = load_checkpoint(self.actor_path)
        self.policy.slope = self.schedule.k
        self.target_policy = load_checkpoint(os.path.join(self.full_path, "actor_target.json"))
        self.target_policy.slope = self.schedule.k
        self.actor_opt = Adam(self.policy, self.td3.lr)
        for attr, name in CRITIC_FILES.items():
            setattr(self.critics, attr, load_checkpoint(os.path.join(self.full_path, name)))
        self.critics.opt1 = Adam(self.critics.q1, self.td3.lr)
        self.critics.opt2 = Adam(self.critics.q2, self.td3.lr)
        for env in self.envs + [self.eval_env]:
            env.set_stage(stage)
        if os.path.exists(self.guide_path):
            self.guide = load_checkpoint(self.guide_path)

    def on_finished(self):
        bt.logging.success(f"Training finished after {self.epoch} epochs; actor saved to {self.actor_path}")


def run_training(config) -> SpikingTrainer:
    """Train with the method named in ``config.trainer.method`` and return the finished trainer."""
    trainer = SpikingTrainer(config)
    trainer.run()
    return trainer
