# The MIT License (MIT)
# Copyright © 2025 SpikeRL

"""
Spiking actor: a dense encoder feeding a stack of soft-reset LIF layers and a
linear decoder that reads the last hidden layer's spikes.

The forward pass over a sequence records a :class:`GradientTape`; replaying it
in reverse (:func:`snn_backward_sequence`) gives backpropagation-through-time
gradients where the Heaviside derivative is replaced by the fast-sigmoid
surrogate evaluated at ``U_pre − U_thr``.
"""

import copy
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from spikerl.core.const import ACT_DIM, LIF_LEAK, LIF_THRESHOLD, OBS_DIM, SLOPE_START, SNN_HIDDEN_SIZES
from spikerl.core.errors import ContractViolation
from spikerl.networks.lif import LifLayerState, lif_step, smooth_spike, surrogate_grad
from spikerl.networks.params import ParamGrads, check_sizes, init_dense

SPIKING = "spiking"
SMOOTH = "smooth"


class SnnPolicy:
    """
    Parameter container for the spiking actor.

    ``sizes = [obs_dim, h1, ..., hL, act_dim]``. ``weights[0]`` is the encoder
    (its output is the input current of the first LIF layer), ``weights[-1]``
    the decoder. The policy keeps a persistent :class:`LifLayerState` per hidden
    layer that :meth:`act` advances and :meth:`reset_state` zeroes.
    """

    kind = "snn"

    def __init__(
        self,
        sizes: Sequence[int] = (OBS_DIM, *SNN_HIDDEN_SIZES, ACT_DIM),
        leak: float = LIF_LEAK,
        threshold: float = LIF_THRESHOLD,
        slope: float = SLOPE_START,
        rng: Optional[np.random.Generator] = None,
        gain: float = 1.0,
    ):
        self.sizes = check_sizes(sizes, min_layers=3)
        if not 0.0 <= leak <= 1.0:
            raise ContractViolation(f"Leak must lie in [0, 1], got {leak}")
        if threshold <= 0.0:
            raise ContractViolation(f"Threshold must be positive, got {threshold}")
        self.leak = float(leak)
        self.threshold = float(threshold)
        self.slope = float(slope)

        rng = rng if rng is not None else np.random.default_rng(0)
        self.weights: List[np.ndarray] = []
        self.biases: List[np.ndarray] = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            w, b = init_dense(rng, fan_in, fan_out, gain)
            self.weights.append(w)
            self.biases.append(b)
        self.reset_state()

    @property
    def obs_dim(self) -> int:
        return self.sizes[0]

    @property
    def act_dim(self) -> int:
        return self.sizes[-1]

    @property
    def hidden_sizes(self) -> List[int]:
        return self.sizes[1:-1]

    @property
    def num_hidden(self) -> int:
        return len(self.sizes) - 2

    def zero_(self) -> "SnnPolicy":
        for w in self.weights:
            w[...] = 0.0
        for b in self.biases:
            b[...] = 0.0
        return self

    def copy(self) -> "SnnPolicy":
        return copy.deepcopy(self)

    def reinitialized(self, rng: np.random.Generator, gain: float = 1.0) -> "SnnPolicy":
        return SnnPolicy(self.sizes, self.leak, self.threshold, self.slope, rng=rng, gain=gain)

    def zero_states(self, batch_shape: Tuple[int, ...] = ()) -> List[LifLayerState]:
        return [
            LifLayerState.zeros(tuple(batch_shape) + (n,), self.leak, self.threshold)
            for n in self.hidden_sizes
        ]

    def reset_state(self, batch_shape: Tuple[int, ...] = ()):
        self.state = self.zero_states(batch_shape)

    def act(self, observation: np.ndarray) -> np.ndarray:
        """
        Advance the persistent hidden state by one step and return the decoded action.
        """
        x = np.asarray(observation, dtype=np.float64)
        if x.shape[-1] != self.obs_dim:
            raise ContractViolation(f"Observation has dim {x.shape[-1]}, expected {self.obs_dim}")
        if x.shape[:-1] != self.state[0].membrane.shape[:-1]:
            self.reset_state(x.shape[:-1])
        next_state = []
        for layer, state in enumerate(self.state):
            current = x @ self.weights[layer].T + self.biases[layer]
            x, state = lif_step(state, current)
            next_state.append(state)
        self.state = next_state
        return x @ self.weights[-1].T + self.biases[-1]


@dataclass
class GradientTape:
    """
    Everything the backward pass needs from one forward call over a sequence.

    All recorded arrays have shape ``(T, B, n)``. ``layer_inputs[i]`` is the
    presynaptic activity of ``weights[i]`` (observations for the encoder, spikes
    otherwise); ``charged[l]`` is the post-charge, pre-reset membrane of hidden
    layer ``l``.
    """

    mode: str
    forward_slope: float
    leak: float
    threshold: float
    weights: List[np.ndarray]
    layer_inputs: List[np.ndarray] = field(default_factory=list)
    charged: List[np.ndarray] = field(default_factory=list)
    spikes: List[np.ndarray] = field(default_factory=list)
    final_states: List[LifLayerState] = field(default_factory=list)
    squeeze_batch: bool = False

    @property
    def length(self) -> int:
        return self.layer_inputs[0].shape[0]

    @property
    def batch_size(self) -> int:
        return self.layer_inputs[0].shape[1]


def snn_forward_sequence(
    policy: SnnPolicy,
    observations: np.ndarray,
    initial: Optional[List[LifLayerState]] = None,
    mode: str = SPIKING,
    slope: Optional[float] = None,
) -> Tuple[np.ndarray, GradientTape]:
    """
    Unroll the spiking actor over a sequence without resetting hidden states.

    Args:
        policy: The spiking actor.
        observations: Array of shape ``(T, obs_dim)`` or ``(T, B, obs_dim)``.
        initial: Optional hidden states to start from; zeros otherwise.
        mode: ``"spiking"`` (Heaviside) or ``"smooth"`` (differentiable spike for gradient checks).
        slope: Slope of the smooth spike; defaults to ``policy.slope``.

    Returns:
        (actions, tape), actions shaped like the observations with ``act_dim`` last.
    """
    if mode not in (SPIKING, SMOOTH):
        raise ContractViolation(f"Unknown forward mode {mode!r}")
    obs = np.asarray(observations, dtype=np.float64)
    if obs.ndim not in (2, 3) or obs.shape[0] < 1:
        raise ContractViolation(f"Expected a non-empty (T, [B,] obs_dim) sequence, got shape {obs.shape}")
    if obs.shape[-1] != policy.obs_dim:
        raise ContractViolation(f"Observation has dim {obs.shape[-1]}, expected {policy.obs_dim}")
    squeeze = obs.ndim == 2
    if squeeze:
        obs = obs[:, None, :]
    steps, batch = obs.shape[0], obs.shape[1]
    k = policy.slope if slope is None else float(slope)
    thr = policy.threshold

    if initial is None:
        membranes = [np.zeros((batch, n)) for n in policy.hidden_sizes]
    else:
        if len(initial) != policy.num_hidden:
            raise ContractViolation(f"Expected {policy.num_hidden} initial states, got {len(initial)}")
        membranes = [np.broadcast_to(s.membrane, (batch, n)).copy() for s, n in zip(initial, policy.hidden_sizes)]

    num_layers = len(policy.weights)
    layer_inputs = [np.empty((steps, batch, policy.sizes[i])) for i in range(num_layers)]
    charged = [np.empty((steps, batch, n)) for n in policy.hidden_sizes]
    spikes = [np.empty((steps, batch, n)) for n in policy.hidden_sizes]
    actions = np.empty((steps, batch, policy.act_dim))

    last_spikes = [np.zeros((batch, n)) for n in policy.hidden_sizes]
    for t in range(steps):
        x = obs[t]
        for layer in range(policy.num_hidden):
            layer_inputs[layer][t] = x
            current = x @ policy.weights[layer].T + policy.biases[layer]
            u_pre = policy.leak * membranes[layer] + current
            if mode == SPIKING:
                s = (u_pre > thr).astype(np.float64)
            else:
                s = smooth_spike(u_pre - thr, k)
            membranes[layer] = u_pre - s * thr
            charged[layer][t] = u_pre
            spikes[layer][t] = s
            last_spikes[layer] = s
            x = s
        layer_inputs[-1][t] = x
        actions[t] = x @ policy.weights[-1].T + policy.biases[-1]

    final_states = [
        LifLayerState(membrane=m, spikes=s, leak=policy.leak, threshold=thr)
        for m, s in zip(membranes, last_spikes)
    ]
    tape = GradientTape(
        mode=mode,
        forward_slope=k,
        leak=policy.leak,
        threshold=thr,
        weights=policy.weights,
        layer_inputs=layer_inputs,
        charged=charged,
        spikes=spikes,
        final_states=final_states,
        squeeze_batch=squeeze,
    )
    if squeeze:
        actions = actions[:, 0, :]
    return actions, tape


def snn_backward_sequence(
    tape: GradientTape,
    output_grads: np.ndarray,
    warm_up_mask: np.ndarray,
    k: float,
    detach_reset: Optional[bool] = None,
) -> ParamGrads:
    """
    Backpropagate through time over a recorded tape.

    Args:
        tape: Tape from :func:`snn_forward_sequence`.
        output_grads: dLoss/dAction, shaped like the forward actions.
        warm_up_mask: 1 where a step contributes to the loss, 0 on warm-up or padding;
            shape ``(T,)`` or ``(T, B)``.
        k: Surrogate slope used in place of the Heaviside derivative.
        detach_reset: Treat the ``−s·U_thr`` reset as a constant. Defaults to True in
            spiking mode and False in smooth mode, where the gradient is exact.

    Returns:
        Gradients for every weight and bias of the policy.
    """
    steps, batch = tape.length, tape.batch_size
    grads_out = np.asarray(output_grads, dtype=np.float64)
    if tape.squeeze_batch and grads_out.ndim == 2:
        grads_out = grads_out[:, None, :]
    if grads_out.shape[:2] != (steps, batch):
        raise ContractViolation(
            f"Output gradients of shape {np.shape(output_grads)} do not match a tape of {steps} steps"
        )
    mask = np.asarray(warm_up_mask, dtype=np.float64)
    if mask.shape[0] != steps:
        raise ContractViolation(f"Mask length {mask.shape[0]} does not match tape length {steps}")
    if mask.ndim == 1:
        mask = np.broadcast_to(mask[:, None], (steps, batch))
    grads_out = grads_out * mask[:, :, None]

    if detach_reset is None:
        detach_reset = tape.mode == SPIKING

    weights = tape.weights
    num_hidden = len(tape.charged)
    thr, leak = tape.threshold, tape.leak
    grad_w = [np.zeros_like(w) for w in weights]
    grad_b = [np.zeros(w.shape[0]) for w in weights]
    # dLoss/dU_l[t], carried backward from step t + 1
    carry = [np.zeros((batch, c.shape[2])) for c in tape.charged]

    for t in range(steps - 1, -1, -1):
        g = grads_out[t]
        grad_w[-1] += g.T @ tape.layer_inputs[-1][t]
        grad_b[-1] += g.sum(axis=0)
        g_spikes = g @ weights[-1]
        for layer in range(num_hidden - 1, -1, -1):
            sg = surrogate_grad(tape.charged[layer][t] - thr, k)
            if detach_reset:
                g_charged = carry[layer] + g_spikes * sg
            else:
                g_charged = carry[layer] + (g_spikes - thr * carry[layer]) * sg
            grad_w[layer] += g_charged.T @ tape.layer_inputs[layer][t]
            grad_b[layer] += g_charged.sum(axis=0)
            carry[layer] = leak * g_charged
            if layer > 0:
                g_spikes = g_charged @ weights[layer]

    return ParamGrads(weights=grad_w, biases=grad_b)
