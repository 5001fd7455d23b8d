# The MIT License (MIT)
# Copyright © 2025 SpikeRL

"""
Exceptions raised across spikerl.
"""


class SpikeRLError(Exception):
    """Base class for every error raised by this package."""


class ContractViolation(SpikeRLError, ValueError):
    """A precondition of an operation does not hold (shapes, ranges, modes)."""


class SimulationDivergedError(SpikeRLError, RuntimeError):
    """The quadrotor state contains non-finite values."""


class BufferNotReady(SpikeRLError):
    """The replay buffer holds fewer samples than requested. Retry after more rollouts."""

    def __init__(self, available: int, requested: int):
        super().__init__(
            f"Replay buffer not ready: {available} sequences available, {requested} requested"
        )
        self.available = available
        self.requested = requested


class GuideTrainingError(SpikeRLError, RuntimeError):
    """The guide policy did not meet its stop criterion within the budget."""


class DivergenceError(SpikeRLError, RuntimeError):
    """A training loss became non-finite."""


class CheckpointError(SpikeRLError, ValueError):
    """A checkpoint file is unreadable or does not match the expected layout."""
