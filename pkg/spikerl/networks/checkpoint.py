# The MIT License (MIT)
# Copyright © 2025 SpikeRL

"""
JSON checkpoints for the spiking actor and dense networks.

A checkpoint is a single JSON object::

    {"header": "SPIKERL-CKPT-1", "kind": "snn" | "mlp", "sizes": [...],
     "weights": [[row, ...], ...], "biases": [[...], ...],
     "beta": 0.9, "threshold": 1.0, "k": 2.0, "activation": null}

Weights are stored row-major with shape ``(fan_out, fan_in)``.
"""

import json
import os
from typing import Any, Dict, Union

import bittensor as bt
import numpy as np

from spikerl.core.const import CHECKPOINT_HEADER
from spikerl.core.errors import CheckpointError
from spikerl.networks.mlp import MlpNetwork
from spikerl.networks.snn import SnnPolicy

Network = Union[SnnPolicy, MlpNetwork]


def network_to_dict(net: Network) -> Dict[str, Any]:
    record = {
        "header": CHECKPOINT_HEADER,
        "kind": net.kind,
        "sizes": list(net.sizes),
        "weights": [w.tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
        "beta": None,
        "threshold": None,
        "k": None,
        "activation": None,
    }
    if net.kind == "snn":
        record.update(beta=net.leak, threshold=net.threshold, k=net.slope)
    else:
        record["activation"] = net.activation
    return record


def network_from_dict(record: Dict[str, Any]) -> Network:
    """
    Rebuild a network from a checkpoint record.

    Raises:
        CheckpointError: Wrong header, unknown kind, or parameter shapes that do
            not match the declared sizes.
    """
    if not isinstance(record, dict) or record.get("header") != CHECKPOINT_HEADER:
        raise CheckpointError(f"Missing or unsupported checkpoint header, expected {CHECKPOINT_HEADER!r}")
    kind = record.get("kind")
    if kind not in ("snn", "mlp"):
        raise CheckpointError(f"Unknown network kind {kind!r}")
    try:
        sizes = [int(s) for s in record["sizes"]]
        if kind == "snn":
            net = SnnPolicy(
                sizes,
                leak=float(record["beta"]),
                threshold=float(record["threshold"]),
                slope=float(record["k"]),
            )
        else:
            net = MlpNetwork(sizes, activation=record.get("activation") or "relu")
        weights = [np.asarray(w, dtype=np.float64) for w in record["weights"]]
        biases = [np.asarray(b, dtype=np.float64) for b in record["biases"]]
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"Malformed checkpoint: {e}") from e

    if len(weights) != len(net.weights) or len(biases) != len(net.biases):
        raise CheckpointError(f"Checkpoint has {len(weights)} layers, sizes {sizes} imply {len(net.weights)}")
    for i, (w, b) in enumerate(zip(weights, biases)):
        if w.shape != net.weights[i].shape or b.shape != net.biases[i].shape:
            raise CheckpointError(
                f"Layer {i} has shapes {w.shape}/{b.shape}, expected "
                f"{net.weights[i].shape}/{net.biases[i].shape}"
            )
    net.weights = weights
    net.biases = biases
    if kind == "snn":
        net.reset_state()
    return net


def save_checkpoint(net: Network, path: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w") as f:
        json.dump(network_to_dict(net), f)
    bt.logging.debug(f"Saved {net.kind} checkpoint {net.sizes} to {path}")


def load_checkpoint(path: str) -> Network:
    try:
        with open(path, "r") as f:
            record = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise CheckpointError(f"Could not read checkpoint {path}: {e}") from e
    net = network_from_dict(record)
    bt.logging.debug(f"Loaded {net.kind} checkpoint {net.sizes} from {path}")
    return net
