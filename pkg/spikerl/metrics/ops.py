# The MIT License (MIT)
# Copyright © 2025 SpikeRL

"""
Operation counts and memory footprint per inference.

* Dense synaptic ops ignore every kind of sparsity.
* Effective ops count the encoder as multiply-accumulates on continuous input
  and every spike-driven layer as accumulates scaled by the fraction of active
  presynaptic neurons.
"""

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from spikerl.core.const import BYTES_PER_PARAMETER, REFERENCE_ACTIVATION_SPARSITY
from spikerl.core.errors import ContractViolation
from spikerl.metrics.energy import EnergyModel, estimate_energy
from spikerl.networks.params import parameter_count
from spikerl.networks.snn import SPIKING, SnnPolicy, snn_forward_sequence

# Membrane potential and last spike per LIF neuron
SNN_STATE_PER_NEURON = 2


def count_dense_synops(layer_sizes: Sequence[int]) -> int:
    sizes = [int(s) for s in layer_sizes]
    return int(sum(a * b for a, b in zip(sizes[:-1], sizes[1:])))


def layer_sparsity(policy: SnnPolicy, observations: np.ndarray) -> List[float]:
    """
    Fraction of silent neuron-steps per hidden layer while the policy runs over
    ``observations`` from a zero state.
    """
    obs = np.asarray(observations, dtype=np.float64)
    if obs.ndim != 2 or obs.shape[0] == 0:
        raise ContractViolation(f"Expected a non-empty (T, obs_dim) trajectory, got shape {obs.shape}")
    _, tape = snn_forward_sequence(policy, obs, mode=SPIKING)
    return [float(1.0 - s.mean()) for s in tape.spikes]


def measure_activation_sparsity(policy: SnnPolicy, observations: np.ndarray) -> float:
    """
    1 − (spikes emitted) / (hidden neuron-steps) over a trajectory.
    """
    obs = np.asarray(observations, dtype=np.float64)
    if obs.ndim != 2 or obs.shape[0] == 0:
        raise ContractViolation(f"Expected a non-empty (T, obs_dim) trajectory, got shape {obs.shape}")
    _, tape = snn_forward_sequence(policy, obs, mode=SPIKING)
    spikes = sum(float(s.sum()) for s in tape.spikes)
    neuron_steps = sum(s.size for s in tape.spikes)
    return 1.0 - spikes / neuron_steps


def effective_ops(
    layer_sizes: Sequence[int],
    per_layer_sparsity: Union[float, Sequence[float]],
    encoder_is_mac: bool = True,
) -> Tuple[float, float]:
    """
    Sparsity-aware operation counts.

    Args:
        layer_sizes: ``[N_in, N_1, ..., N_L, N_out]``.
        per_layer_sparsity: Sparsity of each hidden layer (presynaptic to the
            following synapse), or one value applied to all of them.
        encoder_is_mac: Count the encoder as MACs; otherwise as dense ACs.

    Returns:
        (eff_macs, eff_acs)
    """
    sizes = [int(s) for s in layer_sizes]
    hidden = len(sizes) - 2
    if hidden < 1:
        raise ContractViolation(f"Need at least one hidden layer, got sizes {sizes}")
    if np.ndim(per_layer_sparsity) == 0:
        sparsity = [float(per_layer_sparsity)] * hidden
    else:
        sparsity = [float(s) for s in per_layer_sparsity]
    if len(sparsity) != hidden:
        raise ContractViolation(f"Expected {hidden} sparsity values, got {len(sparsity)}")
    if any(not 0.0 <= s <= 1.0 for s in sparsity):
        raise ContractViolation(f"Sparsity values must lie in [0, 1], got {sparsity}")

    encoder = float(sizes[0] * sizes[1])
    eff_macs = encoder if encoder_is_mac else 0.0
    eff_acs = 0.0 if encoder_is_mac else encoder
    for i in range(1, len(sizes) - 1):
        eff_acs += (1.0 - sparsity[i - 1]) * sizes[i] * sizes[i + 1]
    return eff_macs, eff_acs


def footprint_kb_for_sizes(
    layer_sizes: Sequence[int],
    spiking: bool,
    bytes_per_parameter: int = BYTES_PER_PARAMETER,
) -> float:
    """Weights, biases and (for spiking nets) per-neuron state, in kilobytes."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2:
        return 0.0
    params = sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))
    state = SNN_STATE_PER_NEURON * sum(sizes[1:-1]) if spiking else 0
    return (params + state) * bytes_per_parameter / 1024.0


def footprint_kb(net, bytes_per_parameter: int = BYTES_PER_PARAMETER) -> float:
    spiking = getattr(net, "kind", "mlp") == "snn"
    state = SNN_STATE_PER_NEURON * sum(net.sizes[1:-1]) if spiking else 0
    return (parameter_count(net) + state) * bytes_per_parameter / 1024.0


@dataclass
class OpsReport:
    footprint_kb: float
    activation_sparsity: float
    dense_synops: int
    eff_macs: float
    eff_acs: float
    layer_sizes: List[int] = field(default_factory=list)
    per_layer_sparsity: List[float] = field(default_factory=list)
    # effective ACs from the measured per-layer sparsity
    eff_acs_per_layer: Optional[float] = None
    # effective ACs at the published aggregate sparsity, for comparison
    eff_acs_reference: Optional[float] = None
    energy_mj: Optional[float] = None

    def to_dict(self) -> Dict:
        return asdict(self)


def snn_ops_report(
    policy: SnnPolicy,
    observations: Optional[np.ndarray] = None,
    bytes_per_parameter: int = BYTES_PER_PARAMETER,
    energy: Optional[EnergyModel] = None,
) -> OpsReport:
    """
    Counts for a spiking actor. Without a trajectory the published aggregate
    sparsity stands in for the measured one.
    """
    sizes = list(policy.sizes)
    if observations is not None:
        per_layer = layer_sparsity(policy, observations)
        aggregate = measure_activation_sparsity(policy, observations)
    else:
        per_layer = [REFERENCE_ACTIVATION_SPARSITY] * policy.num_hidden
        aggregate = REFERENCE_ACTIVATION_SPARSITY
    eff_macs, eff_acs = effective_ops(sizes, aggregate)
    _, eff_acs_layers = effective_ops(sizes, per_layer)
    _, eff_acs_ref = effective_ops(sizes, REFERENCE_ACTIVATION_SPARSITY)
    if energy is not None:
        energy = EnergyModel(energy.p_s, energy.p_w, energy.p_u, sizes, aggregate)
        energy_mj = estimate_energy(energy)
    else:
        energy_mj = estimate_energy(EnergyModel(layer_sizes=sizes, activation_sparsity=aggregate))
    return OpsReport(
        footprint_kb=footprint_kb(policy, bytes_per_parameter),
        activation_sparsity=aggregate,
        dense_synops=count_dense_synops(sizes),
        eff_macs=eff_macs,
        eff_acs=eff_acs,
        layer_sizes=sizes,
        per_layer_sparsity=per_layer,
        eff_acs_per_layer=eff_acs_layers,
        eff_acs_reference=eff_acs_ref,
        energy_mj=energy_mj,
    )


def ann_reference_report(
    layer_sizes: Sequence[int] = (146, 64, 64, 4),
    bytes_per_parameter: int = BYTES_PER_PARAMETER,
) -> OpsReport:
    """
    Counts for a dense network on observation plus action history: every
    synapse is a MAC and there is no activation sparsity to exploit.
    """
    sizes = [int(s) for s in layer_sizes]
    dense = count_dense_synops(sizes)
    return OpsReport(
        footprint_kb=footprint_kb_for_sizes(sizes, spiking=False, bytes_per_parameter=bytes_per_parameter),
        activation_sparsity=0.0,
        dense_synops=dense,
        eff_macs=float(dense),
        eff_acs=0.0,
        layer_sizes=sizes,
    )


def format_ops_table(reports: Dict[str, OpsReport]) -> str:
    """Plain-text comparison table, one row per named report."""
    header = f"{'Network':<16}{'Footprint (kb)':>16}{'Act. sparsity':>15}{'SynOps dense':>15}{'Eff. MACs':>12}{'Eff. ACs':>12}"
    lines = [header, "-" * len(header)]
    for name, r in reports.items():
        lines.append(
            f"{name:<16}{r.footprint_kb:>16.1f}{r.activation_sparsity:>15.2f}"
            f"{r.dense_synops / 1e3:>14.1f}k{r.eff_macs / 1e3:>11.1f}k{r.eff_acs / 1e3:>11.1f}k"
        )
    return "\n".join(lines)
