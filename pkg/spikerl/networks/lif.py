# The MIT License (MIT)
# Copyright © 2025 SpikeRL

"""
Soft-reset leaky integrate-and-fire neurons and the fast-sigmoid surrogate.

One step charges the membrane with the input current, tests the post-charge
potential against the threshold, and subtracts the threshold from every
neuron that fired:

    U_pre = β·U + I
    s     = [U_pre > U_thr]
    U'    = U_pre − s·U_thr
"""

from dataclasses import dataclass, replace
from typing import Tuple, Union

import numpy as np

from spikerl.core.const import LIF_LEAK, LIF_THRESHOLD
from spikerl.core.errors import ContractViolation


@dataclass
class LifLayerState:
    """Membrane potentials and last spikes of one LIF layer (batched on the leading axes)."""

    membrane: np.ndarray
    spikes: np.ndarray
    leak: float = LIF_LEAK
    threshold: float = LIF_THRESHOLD

    @classmethod
    def zeros(
        cls,
        shape: Union[int, Tuple[int, ...]],
        leak: float = LIF_LEAK,
        threshold: float = LIF_THRESHOLD,
    ) -> "LifLayerState":
        return cls(
            membrane=np.zeros(shape),
            spikes=np.zeros(shape),
            leak=leak,
            threshold=threshold,
        )

    def copy(self) -> "LifLayerState":
        return replace(self, membrane=self.membrane.copy(), spikes=self.spikes.copy())


def surrogate_grad(x, k: float):
    """
    Derivative of the fast sigmoid normalised by its slope: 1 / (1 + k|x|)².

    Args:
        x: Distance of the membrane potential from threshold (scalar or array).
        k: Slope, k >= 1.

    Returns:
        Value(s) in (0, 1], equal to 1 only at x = 0.
    """
    return 1.0 / (1.0 + k * np.abs(x)) ** 2


def smooth_spike(x, k: float):
    """
    Differentiable stand-in for the Heaviside used by the gradient-check mode.

    ``0.5 + x / (1 + k|x|)`` is the fast sigmoid scaled by ``1/k`` and centred
    at 0.5, so its derivative is exactly :func:`surrogate_grad`.
    """
    return 0.5 + x / (1.0 + k * np.abs(x))


def lif_step(
    state: LifLayerState, input_current: np.ndarray
) -> Tuple[np.ndarray, LifLayerState]:
    """
    Advance one LIF layer by one timestep.

    Args:
        state: Current layer state.
        input_current: Synaptic current, same shape as ``state.membrane``.

    Returns:
        (spikes, next_state). Spikes are 0/1 floats.
    """
    input_current = np.asarray(input_current, dtype=np.float64)
    if input_current.shape != np.shape(state.membrane):
        raise ContractViolation(
            f"Input current of shape {input_current.shape} does not match "
            f"membrane of shape {np.shape(state.membrane)}"
        )
    if not 0.0 <= state.leak <= 1.0:
        raise ContractViolation(f"Leak must lie in [0, 1], got {state.leak}")

    charged = state.leak * state.membrane + input_current
    spikes = (charged > state.threshold).astype(np.float64)
    membrane = charged - spikes * state.threshold
    return spikes, replace(state, membrane=membrane, spikes=spikes)
