# The MIT License (MIT)
# Copyright © 2025 SpikeRL

"""
Per-inference energy of a spiking network on neuromorphic hardware.

Every neuron pays one update plus one within-tile cost per incoming synapse;
every spike a hidden layer emits pays a synaptic spike operation. The encoder is
driven by continuous input, so it has no spike term.
"""

from dataclasses import dataclass, field
from typing import List

import numpy as np

from spikerl.core.const import (
    ACT_DIM,
    ENERGY_NEURON_UPDATE_PJ,
    ENERGY_SYNAPTIC_SPIKE_PJ,
    ENERGY_WITHIN_TILE_PJ,
    OBS_DIM,
    REFERENCE_ACTIVATION_SPARSITY,
    SNN_HIDDEN_SIZES,
)
from spikerl.core.errors import ContractViolation

PJ_TO_MJ = 1e-9


@dataclass
class EnergyModel:
    p_s: float = ENERGY_SYNAPTIC_SPIKE_PJ
    p_w: float = ENERGY_WITHIN_TILE_PJ
    p_u: float = ENERGY_NEURON_UPDATE_PJ
    layer_sizes: List[int] = field(default_factory=lambda: [OBS_DIM, *SNN_HIDDEN_SIZES, ACT_DIM])
    activation_sparsity: float = REFERENCE_ACTIVATION_SPARSITY

    def __post_init__(self):
        if min(self.p_s, self.p_w, self.p_u) < 0.0:
            raise ContractViolation("Energy costs must be non-negative")
        if not 0.0 <= self.activation_sparsity <= 1.0:
            raise ContractViolation(f"Activation sparsity {self.activation_sparsity} outside [0, 1]")
        if len(self.layer_sizes) < 3:
            raise ContractViolation(f"Need input, at least one hidden and an output layer, got {self.layer_sizes}")

    @classmethod
    def from_config(cls, config, layer_sizes: List[int], activation_sparsity: float) -> "EnergyModel":
        return cls(
            p_s=float(config.energy.p_s),
            p_w=float(config.energy.p_w),
            p_u=float(config.energy.p_u),
            layer_sizes=list(layer_sizes),
            activation_sparsity=float(activation_sparsity),
        )


def estimate_energy_pj(model: EnergyModel) -> float:
    sizes = model.layer_sizes
    active = 1.0 - model.activation_sparsity
    # first hidden layer: updates and fan-in from the continuous input
    energy = sizes[1] * (model.p_u + sizes[0] * model.p_w)
    # remaining hidden layers: presynaptic spikes plus updates and fan-in
    for prev, n in zip(sizes[1:-2], sizes[2:-1]):
        energy += model.p_s * active * prev + n * (model.p_u + prev * model.p_w)
    # decoder: last hidden layer's spikes plus fan-in, no neuron update
    energy += model.p_s * active * sizes[-2] + sizes[-1] * (sizes[-2] * model.p_w)
    return float(energy)


def estimate_energy(model: EnergyModel) -> float:
    """
    Energy per inference in mJ.

    Args:
        model: Cost parameters, layer sizes and activation sparsity.

    Returns:
        float: Energy in millijoules.
    """
    return estimate_energy_pj(model) * PJ_TO_MJ


def energy_terms(model: EnergyModel) -> np.ndarray:
    """Energy split into its (P_s, P_w, P_u) coefficients so that ``E = terms · (P_s, P_w, P_u)``."""
    unit = [
        EnergyModel(1.0, 0.0, 0.0, model.layer_sizes, model.activation_sparsity),
        EnergyModel(0.0, 1.0, 0.0, model.layer_sizes, model.activation_sparsity),
        EnergyModel(0.0, 0.0, 1.0, model.layer_sizes, model.activation_sparsity),
    ]
    return np.array([estimate_energy_pj(m) for m in unit]) * PJ_TO_MJ
