# The MIT License (MIT)
# Copyright © 2025 SpikeRL

"""
Parameter plumbing shared by the spiking actor and the dense networks:
initialisation, gradient containers, optimisers and target-network updates.

Every network exposes two aligned lists, ``weights`` (each of shape
``(fan_out, fan_in)``) and ``biases`` (each of shape ``(fan_out,)``). Layer ``i``
is the synapse feeding layer ``i + 1`` of the size list.
"""

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from spikerl.core.const import LEARNING_RATE
from spikerl.core.errors import ContractViolation


def init_dense(
    rng: np.random.Generator, fan_in: int, fan_out: int, gain: float = 1.0
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Uniform initialisation in ``±gain / sqrt(fan_in)`` for a dense layer.

    Args:
        rng: Generator drawing the weights.
        fan_in: Number of inputs.
        fan_out: Number of outputs.
        gain: Multiplier on the bound.

    Returns:
        (weight, bias) with shapes ``(fan_out, fan_in)`` and ``(fan_out,)``.
    """
    bound = gain / np.sqrt(fan_in)
    weight = rng.uniform(-bound, bound, size=(fan_out, fan_in))
    bias = rng.uniform(-bound, bound, size=(fan_out,))
    return weight, bias


def check_sizes(sizes: Sequence[int], min_layers: int = 2) -> List[int]:
    sizes = [int(s) for s in sizes]
    if len(sizes) < min_layers or any(s <= 0 for s in sizes):
        raise ContractViolation(f"Invalid layer sizes {sizes}")
    return sizes


@dataclass
class ParamGrads:
    """Gradients for every weight and bias of a network, aligned with its parameter lists."""

    weights: List[np.ndarray] = field(default_factory=list)
    biases: List[np.ndarray] = field(default_factory=list)

    @classmethod
    def zeros_like(cls, net) -> "ParamGrads":
        return cls(
            weights=[np.zeros_like(w) for w in net.weights],
            biases=[np.zeros_like(b) for b in net.biases],
        )

    def __len__(self) -> int:
        return len(self.weights)

    def __add__(self, other: "ParamGrads") -> "ParamGrads":
        return ParamGrads(
            weights=[a + b for a, b in zip(self.weights, other.weights)],
            biases=[a + b for a, b in zip(self.biases, other.biases)],
        )

    def scaled(self, factor: float) -> "ParamGrads":
        return ParamGrads(
            weights=[w * factor for w in self.weights],
            biases=[b * factor for b in self.biases],
        )

    def layer_vector(self, index: int) -> np.ndarray:
        """Weight and bias gradient of one layer flattened into a single vector."""
        return np.concatenate([self.weights[index].ravel(), self.biases[index].ravel()])

    def flat(self) -> np.ndarray:
        return np.concatenate([self.layer_vector(i) for i in range(len(self))])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.flat())))


def parameter_count(net) -> int:
    return int(sum(w.size for w in net.weights) + sum(b.size for b in net.biases))


def soft_update(target, source, tau: float):
    """
    Polyak-average ``source`` into ``target`` in place: θ' ← τθ + (1 − τ)θ'.
    """
    if not 0.0 < tau <= 1.0:
        raise ContractViolation(f"tau must lie in (0, 1], got {tau}")
    for t_w, s_w in zip(target.weights, source.weights):
        t_w *= 1.0 - tau
        t_w += tau * s_w
    for t_b, s_b in zip(target.biases, source.biases):
        t_b *= 1.0 - tau
        t_b += tau * s_b


def _param_shapes(net) -> List[Tuple[int, ...]]:
    return [p.shape for p in list(net.weights) + list(net.biases)]


def _check_grads(shapes: List[Tuple[int, ...]], grads: ParamGrads):
    got = [np.shape(g) for g in list(grads.weights) + list(grads.biases)]
    if got != shapes:
        raise ContractViolation(f"Gradients shaped {got} do not match the optimised network {shapes}")


class Sgd:
    """Plain gradient descent on a network's parameter lists."""

    def __init__(self, net, lr: float = LEARNING_RATE):
        self.lr = lr
        self.shapes = _param_shapes(net)

    def step(self, net, grads: ParamGrads):
        _check_grads(self.shapes, grads)
        for w, g in zip(net.weights, grads.weights):
            w -= self.lr * g
        for b, g in zip(net.biases, grads.biases):
            b -= self.lr * g


class Adam:
    """
    Adam optimiser holding first/second moment estimates for one network.
    """

    def __init__(
        self,
        net,
        lr: float = LEARNING_RATE,
        betas: Tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.shapes = _param_shapes(net)
        params = list(net.weights) + list(net.biases)
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, net, grads: ParamGrads):
        _check_grads(self.shapes, grads)
        self.t += 1
        params = list(net.weights) + list(net.biases)
        updates = list(grads.weights) + list(grads.biases)
        bias1 = 1.0 - self.beta1 ** self.t
        bias2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, updates, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)
