# The MIT License (MIT)
# Copyright © 2025 SpikeRL

from dataclasses import dataclass

from spikerl.core.const import (
    ACTOR_DELAY,
    BC_LAMBDA_DECAY,
    BC_LAMBDA_START,
    EPISODE_LENGTH,
    EXPLORATION_NOISE,
    GAMMA,
    GUIDE_EVAL_EPISODES,
    LEARNING_RATE,
    NOISE_CLIP,
    POLICY_NOISE,
    TAU_TARGET,
    TD3BC_ALPHA,
    WARM_UP_STEPS,
)
from spikerl.core.errors import ContractViolation


@dataclass
class Td3Config:
    gamma: float = GAMMA
    tau: float = TAU_TARGET
    policy_noise: float = POLICY_NOISE
    noise_clip: float = NOISE_CLIP
    exploration_noise: float = EXPLORATION_NOISE
    actor_delay: int = ACTOR_DELAY
    lr: float = LEARNING_RATE
    batch_size: int = 32

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ContractViolation(
                f"gamma must lie in (0, 1) for training, got {self.gamma}; "
                "compute_td_targets takes gamma=0 directly for one-step targets"
            )
        if not 0.0 < self.tau <= 1.0:
            raise ContractViolation(f"tau must lie in (0, 1], got {self.tau}")
        if self.actor_delay < 1:
            raise ContractViolation(f"actor_delay must be >= 1, got {self.actor_delay}")

    @classmethod
    def from_config(cls, config) -> "Td3Config":
        t = config.trainer
        return cls(
            gamma=float(t.gamma),
            tau=float(t.tau),
            policy_noise=float(t.policy_noise),
            noise_clip=float(t.noise_clip),
            exploration_noise=float(t.exploration_noise),
            actor_delay=int(t.actor_delay),
            lr=float(t.lr),
            batch_size=int(t.batch_size),
        )


@dataclass
class JsrlConfig:
    """
    Behavioural-cloning strength and jump-start schedule.

    The guide controls the first ``episode_length − N`` steps of every training
    episode, N growing linearly with the epoch until the guide only covers the
    warm-up period.
    """

    bc_lambda: float = BC_LAMBDA_START
    bc_decay: float = BC_LAMBDA_DECAY
    alpha: float = TD3BC_ALPHA
    episode_length: int = EPISODE_LENGTH
    warm_up: int = WARM_UP_STEPS
    epochs: int = 1000
    use_bc_term: bool = True
    use_jump_start: bool = True
    bc_guide_only: bool = False
    guide_eval_episodes: int = GUIDE_EVAL_EPISODES
    guide_epochs: int = 200

    def __post_init__(self):
        if self.bc_lambda < 0.0 or not 0.0 < self.bc_decay <= 1.0:
            raise ContractViolation(f"Invalid BC schedule λ0={self.bc_lambda} decay={self.bc_decay}")
        if self.epochs < 1:
            raise ContractViolation(f"epochs must be >= 1, got {self.epochs}")

    @classmethod
    def from_config(cls, config) -> "JsrlConfig":
        j = config.jsrl
        return cls(
            bc_lambda=float(j.bc_lambda),
            bc_decay=float(j.bc_decay),
            alpha=float(j.alpha),
            episode_length=int(config.env.episode_length),
            warm_up=int(config.trainer.warm_up),
            epochs=int(config.trainer.epochs),
            use_bc_term=not j.no_bc_term,
            use_jump_start=not j.no_jump_start,
            bc_guide_only=bool(j.bc_guide_only),
            guide_eval_episodes=int(j.guide_eval_episodes),
            guide_epochs=int(j.guide_epochs),
        )

    def bc_coefficient(self, epoch: int) -> float:
        """λ after ``epoch`` decays: λ0 · decay^epoch."""
        return self.bc_lambda * self.bc_decay**epoch

    def jump_start_n(self, epoch: int) -> int:
        """Steps handed to the spiking actor at ``epoch``, capped so the guide keeps the warm-up."""
        n = int(epoch * self.episode_length / self.epochs)
        return max(0, min(n, self.episode_length - self.warm_up))

    def guide_steps(self, epoch: int) -> int:
        return max(self.episode_length - self.jump_start_n(epoch), self.warm_up)
