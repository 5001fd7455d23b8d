# The MIT License (MIT)
# Copyright © 2025 SpikeRL

"""
Twin-critic TD3 updates shared by every training method.

The critics and the guide see the privileged input (observation plus action
history); the spiking actor sees only observations and is trained over
sequences, its loss masked to the steps after the warm-up.
"""

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import bittensor as bt
import numpy as np

from spikerl.core.const import ACTION_HIGH, ACTION_LOW, LEARNING_RATE
from spikerl.core.errors import ContractViolation, DivergenceError
from spikerl.networks.mlp import RELU, MlpNetwork, mlp_backward, mlp_forward, mlp_forward_cached
from spikerl.networks.params import Adam, ParamGrads, Sgd, soft_update
from spikerl.networks.snn import SPIKING, SnnPolicy, snn_backward_sequence, snn_forward_sequence
from spikerl.replay.buffer import SOURCE_CODES, GUIDE, SequenceBatch, TransitionBatch
from spikerl.trainer.config import Td3Config
from spikerl.trainer.history import privileged_input

# Actor loss variants
LOSS_TD3 = "td3"
LOSS_TD3BC = "td3bc"
LOSS_BC = "bc"
ACTOR_LOSSES = (LOSS_TD3, LOSS_TD3BC, LOSS_BC)

OPTIMIZERS = {"adam": Adam, "sgd": Sgd}


class TwinCritics:
    """Two Q-networks, their targets and one optimiser each."""

    def __init__(
        self,
        input_dim: int,
        act_dim: int,
        hidden_sizes: Sequence[int] = (256, 256),
        rng: Optional[np.random.Generator] = None,
        lr: float = LEARNING_RATE,
        optimizer: str = "adam",
    ):
        if optimizer not in OPTIMIZERS:
            raise ContractViolation(f"Unknown optimizer {optimizer!r}, expected one of {tuple(OPTIMIZERS)}")
        rng = rng if rng is not None else np.random.default_rng(0)
        sizes = [input_dim + act_dim, *hidden_sizes, 1]
        self.input_dim = input_dim
        self.act_dim = act_dim
        self.q1 = MlpNetwork(sizes, RELU, rng=rng)
        self.q2 = MlpNetwork(sizes, RELU, rng=rng)
        self.q1_target = self.q1.copy()
        self.q2_target = self.q2.copy()
        self.opt1 = OPTIMIZERS[optimizer](self.q1, lr)
        self.opt2 = OPTIMIZERS[optimizer](self.q2, lr)

    def _inputs(self, inputs: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return np.concatenate([inputs, actions], axis=-1)

    def q_values(self, inputs: np.ndarray, actions: np.ndarray, target: bool = False) -> Tuple[np.ndarray, np.ndarray]:
        """Both critics' values, shaped like the leading axes of ``inputs``."""
        x = self._inputs(inputs, actions)
        n1, n2 = (self.q1_target, self.q2_target) if target else (self.q1, self.q2)
        return mlp_forward(n1, x)[..., 0], mlp_forward(n2, x)[..., 0]

    def soft_update(self, tau: float):
        soft_update(self.q1_target, self.q1, tau)
        soft_update(self.q2_target, self.q2, tau)


def compute_td_targets(
    rewards: np.ndarray,
    dones: np.ndarray,
    q1_next: np.ndarray,
    q2_next: np.ndarray,
    gamma: float,
) -> np.ndarray:
    """
    Clipped double-Q target ``y = r + γ(1 − d)·min(Q1', Q2')``.
    """
    return np.asarray(rewards, dtype=np.float64) + gamma * (1.0 - np.asarray(dones, dtype=np.float64)) * np.minimum(
        q1_next, q2_next
    )


def smoothed_target_actions(
    actions: np.ndarray,
    rng: np.random.Generator,
    policy_noise: float,
    noise_clip: float,
) -> np.ndarray:
    noise = np.clip(rng.normal(0.0, policy_noise, size=actions.shape), -noise_clip, noise_clip)
    return np.clip(actions + noise, ACTION_LOW, ACTION_HIGH)


def fit_critics(
    critics: TwinCritics,
    inputs: np.ndarray,
    actions: np.ndarray,
    targets: np.ndarray,
    weights: Optional[np.ndarray] = None,
) -> float:
    """
    One gradient step of both critics towards ``targets`` (mean squared error).

    Args:
        critics: The twin critics.
        inputs: Privileged inputs, shape ``(..., input_dim)``.
        actions: Actions, shape ``(..., act_dim)``.
        targets: TD targets, shaped like the leading axes.
        weights: Optional 0/1 mask over the leading axes (padding excluded).

    Returns:
        float: Mean of the two critics' losses before the step.
    """
    targets = np.asarray(targets, dtype=np.float64)
    w = np.ones_like(targets) if weights is None else np.asarray(weights, dtype=np.float64)
    count = float(w.sum())
    if count == 0.0:
        return 0.0
    x = critics._inputs(inputs, actions)
    losses = []
    for net, opt in ((critics.q1, critics.opt1), (critics.q2, critics.opt2)):
        q, cache = mlp_forward_cached(net, x)
        err = q[..., 0] - targets
        losses.append(float(np.sum(w * err**2) / count))
        grads, _ = mlp_backward(net, cache, (2.0 * w * err / count)[..., None])
        if not grads.is_finite():
            raise DivergenceError("Critic gradients became non-finite")
        opt.step(net, grads)
    return 0.5 * (losses[0] + losses[1])


def critic_update(
    critics: TwinCritics,
    target_policy: SnnPolicy,
    batch: SequenceBatch,
    cfg: Td3Config,
    rng: np.random.Generator,
) -> Dict[str, float]:
    """
    TD3 critic step on a sequence batch.

    Target actions come from the target actor run over the next-observation
    windows from a zero state, plus clipped smoothing noise.
    """
    next_actions, _ = snn_forward_sequence(target_policy, batch.next_observations, mode=SPIKING)
    next_actions = smoothed_target_actions(next_actions, rng, cfg.policy_noise, cfg.noise_clip)
    next_inputs = privileged_input(batch.next_observations, batch.next_histories)
    q1n, q2n = critics.q_values(next_inputs, next_actions, target=True)
    targets = compute_td_targets(batch.rewards, batch.dones, q1n, q2n, cfg.gamma)
    inputs = privileged_input(batch.observations, batch.histories)
    loss = fit_critics(critics, inputs, batch.actions, targets, batch.valid_mask)
    return {"critic_loss": loss, "q_target_mean": float(np.mean(targets))}


def critic_update_transitions(
    critics: TwinCritics,
    target_actor: MlpNetwork,
    batch: TransitionBatch,
    cfg: Td3Config,
    rng: np.random.Generator,
) -> Dict[str, float]:
    """Single-transition TD3 critic step, used while training the guide."""
    next_inputs = privileged_input(batch.next_observations, batch.next_histories)
    next_actions = smoothed_target_actions(
        np.clip(mlp_forward(target_actor, next_inputs), ACTION_LOW, ACTION_HIGH),
        rng,
        cfg.policy_noise,
        cfg.noise_clip,
    )
    q1n, q2n = critics.q_values(next_inputs, next_actions, target=True)
    targets = compute_td_targets(batch.rewards, batch.dones, q1n, q2n, cfg.gamma)
    inputs = privileged_input(batch.observations, batch.histories)
    return {"critic_loss": fit_critics(critics, inputs, batch.actions, targets)}


@dataclass
class ActorLoss:
    """Per-update actor statistics."""

    loss: float
    q_mean: float
    bc_loss: float
    q_weight: float
    masked_steps: int


def actor_loss_and_grads(
    policy: SnnPolicy,
    critic: MlpNetwork,
    batch: SequenceBatch,
    loss_kind: str = LOSS_TD3BC,
    bc_lambda: float = 0.0,
    alpha: float = 2.0,
    bc_guide_only: bool = False,
    k: Optional[float] = None,
    mode: str = SPIKING,
) -> Tuple[ActorLoss, ParamGrads]:
    """
    Actor loss over the masked steps of a sequence batch and its gradients.

    * ``td3``: −Q
    * ``td3bc``: −(α / mean|Q|)·Q + λ‖π(s) − a‖²
    * ``bc``: ‖π(s) − a‖²

    Only steps where ``batch.loss_mask`` is set contribute. With
    ``bc_guide_only`` the imitation term is further restricted to
    guide-generated steps.

    Returns:
        (statistics, parameter gradients of the policy)
    """
    if loss_kind not in ACTOR_LOSSES:
        raise ContractViolation(f"Unknown actor loss {loss_kind!r}, expected one of {ACTOR_LOSSES}")
    k = policy.slope if k is None else k
    actions, tape = snn_forward_sequence(policy, batch.observations, mode=mode, slope=k)
    mask = np.asarray(batch.loss_mask, dtype=np.float64)
    count = float(mask.sum())
    if count == 0.0:
        return ActorLoss(0.0, 0.0, 0.0, 0.0, 0), ParamGrads.zeros_like(policy)

    grad_actions = np.zeros_like(actions)
    loss = q_mean = bc_loss = q_weight = 0.0

    if loss_kind != LOSS_BC:
        inputs = np.concatenate([privileged_input(batch.observations, batch.histories), actions], axis=-1)
        q, cache = mlp_forward_cached(critic, inputs)
        q = q[..., 0]
        q_mean = float(np.sum(mask * q) / count)
        if loss_kind == LOSS_TD3BC:
            # normaliser is a constant of the gradient
            q_weight = alpha / max(float(np.sum(mask * np.abs(q)) / count), 1e-8)
        else:
            q_weight = 1.0
        loss -= q_weight * q_mean
        _, input_grads = mlp_backward(critic, cache, (-q_weight * mask / count)[..., None])
        grad_actions += input_grads[..., -policy.act_dim :]

    bc_weight = 1.0 if loss_kind == LOSS_BC else (bc_lambda if loss_kind == LOSS_TD3BC else 0.0)
    if bc_weight > 0.0:
        bc_mask = mask
        if bc_guide_only:
            bc_mask = mask * (np.asarray(batch.sources) == SOURCE_CODES[GUIDE])
        bc_count = float(bc_mask.sum())
        if bc_count > 0.0:
            diff = actions - batch.actions
            bc_loss = float(np.sum(bc_mask[..., None] * diff**2) / bc_count)
            loss += bc_weight * bc_loss
            grad_actions += 2.0 * bc_weight * bc_mask[..., None] * diff / bc_count

    grads = snn_backward_sequence(tape, grad_actions, mask, k)
    return ActorLoss(float(loss), q_mean, bc_loss, q_weight, int(count)), grads


def actor_update(
    policy: SnnPolicy,
    optimizer,
    critic: MlpNetwork,
    batch: SequenceBatch,
    loss_kind: str = LOSS_TD3BC,
    bc_lambda: float = 0.0,
    alpha: float = 2.0,
    bc_guide_only: bool = False,
    k: Optional[float] = None,
) -> ActorLoss:
    """
    One optimiser step of the spiking actor. The critic only supplies dQ/da;
    its parameters are untouched.

    Raises:
        DivergenceError: The loss or a gradient is non-finite.
    """
    stats, grads = actor_loss_and_grads(policy, critic, batch, loss_kind, bc_lambda, alpha, bc_guide_only, k)
    if stats.masked_steps == 0:
        bt.logging.warning("Actor batch has no unmasked steps; skipping update")
        return stats
    if not np.isfinite(stats.loss) or not grads.is_finite():
        raise DivergenceError(f"Actor loss became non-finite ({stats.loss})")
    optimizer.step(policy, grads)
    return stats


def guide_actor_update(
    actor: MlpNetwork,
    optimizer,
    critic: MlpNetwork,
    batch: TransitionBatch,
) -> float:
    """Deterministic policy-gradient step of the dense guide: minimise −Q(s, π(s))."""
    inputs = privileged_input(batch.observations, batch.histories)
    actions, actor_cache = mlp_forward_cached(actor, inputs)
    q, critic_cache = mlp_forward_cached(critic, np.concatenate([inputs, actions], axis=-1))
    n = float(q.shape[0])
    _, input_grads = mlp_backward(critic, critic_cache, np.full_like(q, -1.0 / n))
    grads, _ = mlp_backward(actor, actor_cache, input_grads[..., -actor.out_dim :])
    if not grads.is_finite():
        raise DivergenceError("Guide actor gradients became non-finite")
    optimizer.step(actor, grads)
    return float(-q.mean())
