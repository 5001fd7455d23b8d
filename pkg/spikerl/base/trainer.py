# The MIT License (MIT)
# Copyright © 2025 SpikeRL

# Permission is hereby granted, free of charge, to any person obtaining a copy of this software and associated
# documentation files (the “Software”), to deal in the Software without restriction, including without limitation
# the rights to use, copy, modify, merge, publish, distribute, sublicense, and/or sell copies of the Software,
# and to permit persons to whom the Software is furnished to do so, subject to the following conditions:

# The above copyright notice and this permission notice shall be included in all copies or substantial portions of
# the Software.

# THE SOFTWARE IS PROVIDED “AS IS”, WITHOUT WARRANTY OF ANY KIND, EXPRESS OR IMPLIED, INCLUDING BUT NOT LIMITED TO
# THE WARRANTIES OF MERCHANTABILITY, FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL
# THE AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER LIABILITY, WHETHER IN AN ACTION
# OF CONTRACT, TORT OR OTHERWISE, ARISING FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER
# DEALINGS IN THE SOFTWARE.

import copy
import os
import typing
from abc import ABC, abstractmethod
from traceback import print_exception

import bittensor as bt

from spikerl import __version__
from spikerl.core.errors import SpikeRLError
from spikerl.utils.config import add_args, check_config, config, write_run_stamp
from spikerl.utils.logging import log_event
from spikerl.utils.misc import seed_streams


class BaseTrainer(ABC):
    """
    Base class for epoch-driven training runs. Subclasses implement :meth:`setup`
    and :meth:`train_epoch`; this class owns configuration, the run directory,
    seeding, the main loop and checkpointing hooks.
    """

    run_name: str = "train"

    @classmethod
    def check_config(cls, config: "bt.Config"):
        check_config(cls, config)

    @classmethod
    def add_args(cls, parser):
        add_args(cls, parser)

    @classmethod
    def config(cls, args: typing.Optional[typing.List[str]] = None):
        return config(cls, args)

    def __init__(self, config=None):
        self.config = copy.deepcopy(config) if config is not None else self.config()
        self.check_config(self.config)

        # Set up logging with the provided configuration.
        bt.logging.set_config(config=self.config.logging)

        # Log the configuration for reference.
        bt.logging.info(self.config)
        write_run_stamp(self.config, __version__)

        self.full_path = self.config.run.full_path
        self.rngs = seed_streams(self.config.run.seed)
        self.epoch = 0
        self.should_exit: bool = False
        bt.logging.info(f"Run directory: {self.full_path} (seed {self.config.run.seed})")

    @property
    def num_epochs(self) -> int:
        return int(self.config.trainer.epochs)

    @property
    def state_path(self) -> str:
        return os.path.join(self.full_path, "state.npz")

    @abstractmethod
    def setup(self):
        ...

    @abstractmethod
    def train_epoch(self, epoch: int) -> typing.Dict[str, float]:
        ...

    def on_finished(self):
        """Called once after the last epoch or an interrupt."""

    def should_save(self, epoch: int) -> bool:
        interval = int(self.config.trainer.checkpoint_interval)
        return interval > 0 and (epoch + 1) % interval == 0

    def run(self):
        """
        Runs epochs until ``trainer.epochs`` is reached.

        A keyboard interrupt saves the state and stops cleanly. Package errors
        (divergence, bad configuration) are logged and re-raised; anything else
        is logged with its traceback before propagating.

        Raises:
            SpikeRLError: From setup or from an epoch.
        """
        self.setup()
        bt.logging.info(f"Training starting at epoch {self.epoch} of {self.num_epochs}")
        log_event("run_started", epoch=self.epoch, epochs=self.num_epochs, seed=self.config.run.seed)

        while self.epoch < self.num_epochs:
            try:
                bt.logging.info(f"epoch({self.epoch})")
                row = self.train_epoch(self.epoch)
                log_event("epoch", **row)

                if self.should_save(self.epoch):
                    self.save_state()
                self.epoch += 1

                # Check if we should exit.
                if self.should_exit:
                    break

            # If someone intentionally stops the trainer, it'll save and terminate.
            except KeyboardInterrupt:
                self.save_state()
                bt.logging.success("Training stopped by keyboard interrupt; state saved.")
                break

            except SpikeRLError as err:
                bt.logging.error(f"Error during training: {str(err)}")
                raise

            # Unforeseen errors are logged for diagnosis before stopping the run.
            except Exception as err:
                bt.logging.error(f"Error during training: {str(err)}")
                bt.logging.debug(str(print_exception(type(err), err, err.__traceback__)))
                raise

        self.save_state()
        self.on_finished()
        log_event("run_finished", epoch=self.epoch)

    def save_state(self):
        bt.logging.trace("save_state() not implemented for this trainer.")

    def load_state(self):
        bt.logging.trace("load_state() not implemented for this trainer.")
