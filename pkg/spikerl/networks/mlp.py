# The MIT License (MIT)
# Copyright © 2025 SpikeRL

"""
Dense feedforward networks used for the critics, their targets and the
privileged guide actor. Each hidden layer is an affine map followed by a
nonlinearity; the output layer is linear.
"""

import copy
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from spikerl.core.errors import ContractViolation
from spikerl.networks.params import ParamGrads, check_sizes, init_dense

RELU = "relu"
SIGMOID = "sigmoid"
IDENTITY = "identity"
ACTIVATIONS = (RELU, SIGMOID, IDENTITY)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class MlpNetwork:
    """Weights, biases and hidden activation of a dense network."""

    kind = "mlp"

    def __init__(
        self,
        sizes: Sequence[int],
        activation: str = RELU,
        rng: Optional[np.random.Generator] = None,
        gain: float = 1.0,
    ):
        if activation not in ACTIVATIONS:
            raise ContractViolation(f"Unknown activation {activation!r}, expected one of {ACTIVATIONS}")
        self.sizes = check_sizes(sizes, min_layers=2)
        self.activation = activation
        rng = rng if rng is not None else np.random.default_rng(0)
        self.weights: List[np.ndarray] = []
        self.biases: List[np.ndarray] = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            w, b = init_dense(rng, fan_in, fan_out, gain)
            self.weights.append(w)
            self.biases.append(b)

    @property
    def in_dim(self) -> int:
        return self.sizes[0]

    @property
    def out_dim(self) -> int:
        return self.sizes[-1]

    def copy(self) -> "MlpNetwork":
        return copy.deepcopy(self)

    def reinitialized(self, rng: np.random.Generator, gain: float = 1.0) -> "MlpNetwork":
        return MlpNetwork(self.sizes, self.activation, rng=rng, gain=gain)

    def zero_(self) -> "MlpNetwork":
        for w in self.weights:
            w[...] = 0.0
        for b in self.biases:
            b[...] = 0.0
        return self

    def __call__(self, inputs: np.ndarray) -> np.ndarray:
        return mlp_forward(self, inputs)


@dataclass
class MlpCache:
    """Layer inputs and pre-activations recorded by a forward pass."""

    inputs: List[np.ndarray] = field(default_factory=list)
    pre_activations: List[np.ndarray] = field(default_factory=list)
    lead_shape: Tuple[int, ...] = ()


def _activate(net: MlpNetwork, z: np.ndarray) -> np.ndarray:
    if net.activation == RELU:
        return np.maximum(z, 0.0)
    if net.activation == SIGMOID:
        return _sigmoid(z)
    return z


def _activation_grad(net: MlpNetwork, z: np.ndarray, k: Optional[float]) -> np.ndarray:
    if net.activation == RELU:
        return (z > 0.0).astype(np.float64)
    if net.activation == SIGMOID:
        # σ'(kz)/k = σ(kz)(1 − σ(kz)); k = 1 is the true derivative
        s = _sigmoid(z if k is None else k * z)
        return s * (1.0 - s)
    return np.ones_like(z)


def mlp_forward_cached(net: MlpNetwork, inputs: np.ndarray) -> Tuple[np.ndarray, MlpCache]:
    """
    Forward pass that also returns the cache needed by :func:`mlp_backward`.

    Args:
        net: The network.
        inputs: Array whose last axis has ``net.in_dim`` entries.

    Returns:
        (outputs, cache). Leading axes of ``inputs`` are preserved.
    """
    x = np.asarray(inputs, dtype=np.float64)
    if x.shape[-1] != net.in_dim:
        raise ContractViolation(f"Input has dim {x.shape[-1]}, expected {net.in_dim}")
    lead = x.shape[:-1]
    x = x.reshape(-1, net.in_dim)
    cache = MlpCache(lead_shape=lead)
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        cache.inputs.append(x)
        z = x @ w.T + b
        cache.pre_activations.append(z)
        x = z if i == last else _activate(net, z)
    return x.reshape(lead + (net.out_dim,)), cache


def mlp_forward(net: MlpNetwork, inputs: np.ndarray) -> np.ndarray:
    return mlp_forward_cached(net, inputs)[0]


def mlp_backward(
    net: MlpNetwork,
    cache: MlpCache,
    output_grads: np.ndarray,
    k: Optional[float] = None,
) -> Tuple[ParamGrads, np.ndarray]:
    """
    Reverse pass through a dense network.

    Args:
        net: The network the cache was recorded on.
        cache: Cache from :func:`mlp_forward_cached`.
        output_grads: dLoss/dOutput, shaped like the forward outputs.
        k: Optional slope for a sigmoid network's surrogate derivative.

    Returns:
        (parameter gradients, dLoss/dInput shaped like the forward inputs).
    """
    g = np.asarray(output_grads, dtype=np.float64)
    if g.shape != cache.lead_shape + (net.out_dim,):
        raise ContractViolation(
            f"Output gradients of shape {g.shape} do not match outputs of shape "
            f"{cache.lead_shape + (net.out_dim,)}"
        )
    g = g.reshape(-1, net.out_dim)
    grads = ParamGrads.zeros_like(net)
    for i in range(len(net.weights) - 1, -1, -1):
        if i < len(net.weights) - 1:
            g = g * _activation_grad(net, cache.pre_activations[i], k)
        grads.weights[i] = g.T @ cache.inputs[i]
        grads.biases[i] = g.sum(axis=0)
        g = g @ net.weights[i]
    return grads, g.reshape(cache.lead_shape + (net.in_dim,))
