# The MIT License (MIT)
# Copyright © 2025 SpikeRL

"""
Per-layer gradient diagnostics under different surrogate slopes.

Layer ``i`` of a report is the synapse ``weights[i]`` together with its bias:
layer 0 feeds the first hidden layer, the last layer is the decoder. For each
trial the network is freshly initialised, one forward pass is recorded and the
backward pass is replayed once per slope, so every slope sees the same tape.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Union

import bittensor as bt
import numpy as np

from spikerl.core.errors import ContractViolation
from spikerl.networks.mlp import SIGMOID, MlpNetwork, mlp_backward, mlp_forward_cached
from spikerl.networks.params import ParamGrads
from spikerl.networks.snn import SPIKING, SnnPolicy, snn_backward_sequence, snn_forward_sequence
from spikerl.utils.misc import write_csv

Network = Union[SnnPolicy, MlpNetwork]

SWEEP_COLUMNS = ["slope", "layer", "mean_abs_grad", "zero_fraction", "cosine_to_ref"]


@dataclass
class LayerGradStats:
    layer_index: int
    mean_abs_grad: float
    zero_fraction: float
    cosine_to_ref: float = float("nan")


@dataclass
class ProbeBatch:
    """Inputs and upstream loss gradients fed through a network for diagnostics."""

    inputs: np.ndarray
    output_grads: np.ndarray


def make_input_batch(
    net: Network,
    rng: np.random.Generator,
    batch_size: int = 16,
    steps: int = 10,
) -> ProbeBatch:
    """
    Gaussian inputs and gaussian output gradients shaped for ``net``.

    Spiking networks get ``(steps, batch, dim)`` sequences, dense ones ``(batch, dim)``.
    """
    lead = (steps, batch_size) if net.kind == "snn" else (batch_size,)
    return ProbeBatch(
        inputs=rng.standard_normal(lead + (net.sizes[0],)),
        output_grads=rng.standard_normal(lead + (net.sizes[-1],)),
    )


def _grads_per_slope(net: Network, batch: ProbeBatch, slopes: Sequence[float]) -> List[ParamGrads]:
    if net.kind == "snn":
        _, tape = snn_forward_sequence(net, batch.inputs, mode=SPIKING)
        mask = np.ones(tape.length)
        return [snn_backward_sequence(tape, batch.output_grads, mask, k) for k in slopes]
    if net.activation != SIGMOID:
        bt.logging.debug(f"Slope has no effect on a {net.activation} network")
    _, cache = mlp_forward_cached(net, batch.inputs)
    return [mlp_backward(net, cache, batch.output_grads, k=k)[0] for k in slopes]


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    norm = np.linalg.norm(a) * np.linalg.norm(b)
    if norm == 0.0:
        return float("nan")
    return float(np.clip(np.dot(a, b) / norm, -1.0, 1.0))


def _layer_figures(grads: ParamGrads, zero_tol: float) -> np.ndarray:
    """(num_layers, 2) array of mean |g| and zero fraction per layer."""
    figures = np.empty((len(grads), 2))
    for i in range(len(grads)):
        v = np.abs(grads.layer_vector(i))
        figures[i] = (v.mean(), np.mean(v < zero_tol))
    return figures


def _run_trials(
    net: Network,
    batch: Optional[ProbeBatch],
    slopes: Sequence[float],
    trials: int,
    rng: Optional[np.random.Generator],
    workers: int,
    batch_size: int,
    steps: int,
) -> List[List[ParamGrads]]:
    if trials < 1:
        raise ContractViolation(f"trials must be >= 1, got {trials}")
    if rng is None and batch is None:
        raise ContractViolation("Either an input batch or a generator is required")

    if rng is None:
        jobs = [(net, batch)] * trials
    else:
        jobs = []
        for trial_seed in rng.integers(0, 2**63 - 1, size=trials):
            trial_rng = np.random.default_rng(int(trial_seed))
            trial_net = net.reinitialized(trial_rng)
            trial_batch = batch if batch is not None else make_input_batch(trial_net, trial_rng, batch_size, steps)
            jobs.append((trial_net, trial_batch))

    def run(job):
        return _grads_per_slope(job[0], job[1], slopes)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]


def layer_gradient_magnitudes(
    net: Network,
    batch: Optional[ProbeBatch] = None,
    k: float = 1.0,
    trials: int = 1,
    rng: Optional[np.random.Generator] = None,
    zero_tol: float = 1e-8,
    workers: int = 1,
    batch_size: int = 16,
    steps: int = 10,
) -> List[LayerGradStats]:
    """
    Mean absolute gradient and near-zero fraction per layer, averaged over trials.

    Args:
        net: Network whose architecture is measured.
        batch: Fixed input batch; drawn per trial from ``rng`` when omitted.
        k: Surrogate slope.
        trials: Number of trials to average.
        rng: When given, every trial uses a freshly initialised copy of ``net``.
            Without it every trial reuses ``net`` and ``batch`` as they are.
        zero_tol: Magnitude below which a gradient entry counts as zero.
        workers: Thread count for running trials.

    Returns:
        One :class:`LayerGradStats` per layer, layer 0 closest to the input.
    """
    results = _run_trials(net, batch, [k], trials, rng, workers, batch_size, steps)
    figures = np.mean([_layer_figures(r[0], zero_tol) for r in results], axis=0)
    return [
        LayerGradStats(layer_index=i, mean_abs_grad=float(m), zero_fraction=float(z))
        for i, (m, z) in enumerate(figures)
    ]


def gradient_cosine_similarity(
    net: Network,
    batch: Optional[ProbeBatch] = None,
    k_shallow: float = 1.0,
    k_ref: float = 100.0,
    trials: int = 1,
    rng: Optional[np.random.Generator] = None,
    zero_tol: float = 1e-8,
    workers: int = 1,
    batch_size: int = 16,
    steps: int = 10,
) -> List[LayerGradStats]:
    """
    Per-layer cosine between gradients at ``k_shallow`` and at the reference slope,
    both computed on the same recorded forward pass.

    Layers whose gradient vector has zero norm in a trial yield NaN for that trial
    and are left out of the average; a layer that is zero in every trial reports NaN.
    Magnitude figures in the returned stats refer to ``k_shallow``.
    """
    if k_shallow > k_ref:
        raise ContractViolation(f"k_shallow ({k_shallow}) must not exceed k_ref ({k_ref})")
    results = _run_trials(net, batch, [k_shallow, k_ref], trials, rng, workers, batch_size, steps)
    figures = np.mean([_layer_figures(r[0], zero_tol) for r in results], axis=0)
    cosines = np.array(
        [[_cosine(r[0].layer_vector(i), r[1].layer_vector(i)) for i in range(len(r[0]))] for r in results]
    )
    return [
        LayerGradStats(
            layer_index=i,
            mean_abs_grad=float(figures[i, 0]),
            zero_fraction=float(figures[i, 1]),
            cosine_to_ref=_nanmean(cosines[:, i]),
        )
        for i in range(figures.shape[0])
    ]


def _nanmean(values: np.ndarray) -> float:
    finite = values[~np.isnan(values)]
    return float(finite.mean()) if finite.size else float("nan")


def run_slope_sweep(
    slopes: Sequence[float],
    trials: int = 100,
    layers: int = 4,
    neurons: int = 64,
    out: Optional[str] = None,
    seed: int = 0,
    k_ref: float = 100.0,
    net_kind: str = "snn",
    in_dim: int = 64,
    out_dim: int = 64,
    batch_size: int = 16,
    steps: int = 10,
    zero_tol: float = 1e-8,
    workers: int = 1,
) -> List[Dict[str, float]]:
    """
    Gradient magnitude and alignment for every slope on a ``layers × neurons`` network.

    Every slope is evaluated on the same sequence of trial networks and input
    batches. When ``out`` is given the rows are written there as CSV with
    columns ``slope, layer, mean_abs_grad, zero_fraction, cosine_to_ref``.

    Returns:
        The rows, ordered by slope then layer.
    """
    if not slopes:
        raise ContractViolation("At least one slope is required")
    sizes = [in_dim] + [neurons] * layers + [out_dim]
    if net_kind == "snn":
        net = SnnPolicy(sizes)
    elif net_kind == "mlp":
        net = MlpNetwork(sizes, activation=SIGMOID)
    else:
        raise ContractViolation(f"Unknown network kind {net_kind!r}")

    bt.logging.info(
        f"Slope sweep: slopes={list(slopes)} k_ref={k_ref} trials={trials} net={net_kind} sizes={sizes}"
    )
    all_slopes = list(slopes) + [k_ref]
    results = _run_trials(
        net, None, all_slopes, trials, np.random.default_rng(seed), workers, batch_size, steps
    )

    rows = []
    for j, k in enumerate(slopes):
        figures = np.mean([_layer_figures(r[j], zero_tol) for r in results], axis=0)
        for i in range(figures.shape[0]):
            cosines = np.array([_cosine(r[j].layer_vector(i), r[-1].layer_vector(i)) for r in results])
            rows.append(
                {
                    "slope": float(k),
                    "layer": i,
                    "mean_abs_grad": float(figures[i, 0]),
                    "zero_fraction": float(figures[i, 1]),
                    "cosine_to_ref": _nanmean(cosines),
                }
            )
        layer0 = rows[-figures.shape[0]]
        bt.logging.info(
            f"k={k:g}: layer 0 |g|={layer0['mean_abs_grad']:.3e} cos={layer0['cosine_to_ref']:.3f}"
        )

    if out:
        write_csv(out, SWEEP_COLUMNS, rows)
        bt.logging.success(f"Wrote {len(rows)} sweep rows to {os.path.abspath(out)}")
    return rows
