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

import argparse
import json
import os
import sys
from typing import Any, Dict, List, Optional

import bittensor as bt
import yaml

from spikerl.core import const
from spikerl.core.errors import ContractViolation
from .logging import setup_events_logger


def _flatten(tree: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    flat = {}
    for key, value in tree.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, name + "."))
        else:
            flat[name] = value
    return flat


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Read a YAML or JSON config file of nested sections into dotted keys.

    ``{"trainer": {"gamma": 0.9}}`` becomes ``{"trainer.gamma": 0.9}``.
    """
    try:
        with open(os.path.expanduser(path), "r") as f:
            if path.endswith(".json"):
                tree = json.load(f)
            else:
                tree = yaml.safe_load(f)
    except (OSError, ValueError, yaml.YAMLError) as e:
        raise ContractViolation(f"Could not read config file {path}: {e}") from e
    if tree is None:
        return {}
    if not isinstance(tree, dict):
        raise ContractViolation(f"Config file {path} must hold a mapping, got {type(tree).__name__}")
    return _flatten(tree)


def config_to_dict(config) -> Dict[str, Any]:
    """Plain nested dict of a ``bt.Config``, without private entries."""
    out = {}
    for key, value in dict(config).items():
        if str(key).startswith("_"):
            continue
        if isinstance(value, dict):
            out[key] = config_to_dict(value)
        else:
            out[key] = value
    return out


def check_config(cls, config: "bt.Config"):
    r"""Checks/validates the config namespace object and prepares the run directory."""
    bt.logging.check_config(config)

    full_path = config.run.out or os.path.join(
        config.logging.logging_dir, "spikerl", config.run.name, f"seed{config.run.seed}"
    )
    config.run.full_path = os.path.abspath(os.path.expanduser(full_path))
    if not os.path.exists(config.run.full_path):
        os.makedirs(config.run.full_path, exist_ok=True)

    if not config.run.dont_save_events:
        # Add custom event logger for the events.
        events_logger = setup_events_logger(
            config.run.full_path, config.run.events_retention_size
        )
        bt.logging.register_primary_logger(events_logger.name)


def write_run_stamp(config: "bt.Config", version: str):
    """Resolved config snapshot and version stamp inside the run directory."""
    with open(os.path.join(config.run.full_path, "config.yaml"), "w") as f:
        yaml.safe_dump(config_to_dict(config), f, default_flow_style=False, sort_keys=True)
    with open(os.path.join(config.run.full_path, "VERSION"), "w") as f:
        f.write(f"{version}\n")


def add_args(cls, parser):
    """
    Adds arguments shared by every command.
    """

    parser.add_argument(
        "--config",
        dest="config_file",
        type=str,
        help="YAML or JSON file whose nested sections override the defaults below.",
        default=None,
    )

    parser.add_argument("--run.seed", "--seed", type=int, help="Run seed.", default=0)

    parser.add_argument(
        "--run.out",
        "--out",
        type=str,
        help="Run directory. Defaults to <logging_dir>/spikerl/<run.name>/seed<seed>.",
        default=None,
    )

    parser.add_argument(
        "--run.name",
        type=str,
        help="Run name used for the default run directory.",
        default=getattr(cls, "run_name", "run"),
    )

    parser.add_argument(
        "--run.events_retention_size",
        type=int,
        help="Events retention size.",
        default=64 * 1024 * 1024,  # 64 MB
    )

    parser.add_argument(
        "--run.dont_save_events",
        action="store_true",
        help="If set, we dont save events to a log file.",
        default=False,
    )


def add_network_args(cls, parser):
    """Architecture of the spiking actor, critics and guide."""

    parser.add_argument(
        "--snn.hidden_sizes",
        type=int,
        nargs="+",
        help="Hidden LIF layer sizes of the spiking actor.",
        default=list(const.SNN_HIDDEN_SIZES),
    )
    parser.add_argument("--snn.leak", type=float, help="Membrane leak β.", default=const.LIF_LEAK)
    parser.add_argument(
        "--snn.threshold", type=float, help="Firing threshold U_thr.", default=const.LIF_THRESHOLD
    )
    parser.add_argument(
        "--snn.gain", type=float, help="Weight initialisation gain.", default=1.0
    )
    parser.add_argument(
        "--critic.hidden_sizes",
        type=int,
        nargs="+",
        help="Hidden sizes of the twin critics.",
        default=[256, 256],
    )
    parser.add_argument(
        "--guide.hidden_sizes",
        type=int,
        nargs="+",
        help="Hidden sizes of the privileged guide actor.",
        default=[64, 64],
    )


def add_slope_args(cls, parser):
    """Surrogate slope schedule."""

    parser.add_argument(
        "--slope.mode",
        "--slope-mode",
        type=str,
        choices=["fixed", "interval", "adaptive"],
        help="Slope schedule.",
        default="adaptive",
    )
    parser.add_argument(
        "--slope.k", "--slope-k", type=float, help="Initial (or fixed) slope.", default=const.SLOPE_START
    )
    parser.add_argument("--slope.k_min", type=float, help="Lower slope clamp.", default=const.SLOPE_MIN)
    parser.add_argument("--slope.k_max", type=float, help="Upper slope clamp.", default=const.SLOPE_MAX)
    parser.add_argument(
        "--slope.window", type=int, help="Adaptive score window.", default=const.SLOPE_WINDOW
    )
    parser.add_argument(
        "--slope.interval_epochs",
        type=int,
        help="Epochs between doublings for the interval schedule.",
        default=const.SLOPE_INTERVAL_EPOCHS,
    )
    parser.add_argument(
        "--slope.score_floor",
        type=float,
        help="Raw reward mapped to a score of 0.",
        default=const.SCORE_FLOOR,
    )
    parser.add_argument(
        "--slope.score_ceil",
        type=float,
        help="Raw reward mapped to a score of 100.",
        default=const.SCORE_CEIL,
    )
    parser.add_argument(
        "--slope.scheduling_order",
        type=int,
        help="Carried for compatibility with published settings; unused.",
        default=const.SCHEDULING_ORDER,
    )


def add_env_args(cls, parser):
    """Quadrotor simulation and reward curriculum."""

    parser.add_argument(
        "--env.episode_length", type=int, help="Timeout in control steps.", default=const.EPISODE_LENGTH
    )
    parser.add_argument("--env.dt", type=float, help="Control period in seconds.", default=const.CONTROL_DT)
    parser.add_argument("--env.substeps", type=int, help="Physics sub-steps per control step.", default=1)
    parser.add_argument(
        "--env.attitude_encoding",
        type=str,
        choices=["rotation_matrix", "euler_rows", "euler_padded"],
        help="Attitude layout of the 18-dim observation.",
        default="rotation_matrix",
    )
    parser.add_argument(
        "--env.weightless",
        action="store_true",
        help="Debug preset without gravity or thrust.",
        default=False,
    )
    parser.add_argument(
        "--env.target", type=float, nargs=3, help="Hover target position.", default=list(const.HOVER_TARGET)
    )
    parser.add_argument("--env.mass", type=float, help="Vehicle mass in kg.", default=0.033)
    parser.add_argument("--env.tau_motor", type=float, help="Motor time constant in s.", default=0.05)
    parser.add_argument(
        "--env.max_tilt_deg", type=float, help="Crash roll/pitch limit.", default=const.CRASH_MAX_TILT_DEG
    )
    parser.add_argument(
        "--env.max_distance", type=float, help="Crash distance from target.", default=const.CRASH_MAX_DISTANCE
    )
    parser.add_argument(
        "--env.reset_position", type=float, help="Half-width of the reset position box.", default=0.3
    )

    parser.add_argument(
        "--reward.curriculum_steps", type=int, help="Number of curriculum stages.", default=const.CURRICULUM_STEPS
    )
    parser.add_argument(
        "--reward.curriculum_interval",
        type=int,
        help="Epochs between curriculum advances; 0 freezes the curriculum, -1 spreads the stages evenly over trainer.epochs.",
        default=const.CURRICULUM_INTERVAL_AUTO,
    )
    parser.add_argument(
        "--reward.stage", type=int, help="Initial curriculum stage.", default=0
    )
    for name, (start, end) in const.REWARD_COEFFICIENTS.items():
        parser.add_argument(
            f"--reward.{name}",
            type=float,
            nargs=2,
            help=f"Start and end value of {name}.",
            default=[start, end],
        )


def add_trainer_args(cls, parser):
    """TD3 family hyperparameters, jump-start schedule and replay layout."""

    parser.add_argument(
        "--trainer.method",
        "--method",
        type=str,
        choices=list(const.TRAINING_METHODS),
        help="Training algorithm.",
        default="td3bc_jsrl",
    )
    parser.add_argument("--trainer.epochs", "--epochs", type=int, help="Training epochs.", default=1000)
    parser.add_argument(
        "--trainer.episodes_per_epoch", type=int, help="Rollout episodes collected per epoch.", default=2
    )
    parser.add_argument(
        "--trainer.updates_per_epoch", type=int, help="Gradient steps per epoch.", default=50
    )
    parser.add_argument("--trainer.batch_size", type=int, help="Sequences per batch.", default=32)
    parser.add_argument(
        "--trainer.parallel_envs", "--parallel-envs", type=int, help="Rollout workers.", default=1
    )
    parser.add_argument("--trainer.lr", type=float, help="Adam learning rate.", default=const.LEARNING_RATE)
    parser.add_argument("--trainer.gamma", type=float, help="Discount.", default=const.GAMMA)
    parser.add_argument("--trainer.tau", type=float, help="Target update rate.", default=const.TAU_TARGET)
    parser.add_argument(
        "--trainer.policy_noise", type=float, help="Target smoothing noise.", default=const.POLICY_NOISE
    )
    parser.add_argument(
        "--trainer.noise_clip", type=float, help="Target smoothing clip.", default=const.NOISE_CLIP
    )
    parser.add_argument(
        "--trainer.exploration_noise",
        type=float,
        help="Gaussian exploration σ in command units.",
        default=const.EXPLORATION_NOISE,
    )
    parser.add_argument(
        "--trainer.actor_delay", type=int, help="Critic steps per actor step.", default=const.ACTOR_DELAY
    )
    parser.add_argument(
        "--trainer.buffer_size",
        type=int,
        help="Replay capacity in transitions.",
        default=const.BUFFER_SIZE_ONLINE,
    )
    parser.add_argument(
        "--trainer.sequence_length", type=int, help="Training sequence length.", default=const.SEQUENCE_LENGTH
    )
    parser.add_argument(
        "--trainer.warm_up", type=int, help="Warm-up steps without loss.", default=const.WARM_UP_STEPS
    )
    parser.add_argument(
        "--trainer.stride", type=int, help="Stride between sequence slices.", default=const.SEQUENCE_STRIDE
    )
    parser.add_argument(
        "--trainer.history_length",
        type=int,
        help="Action history length seen by critic and guide.",
        default=const.ACTION_HISTORY_LENGTH,
    )
    parser.add_argument(
        "--trainer.frame_stack",
        type=int,
        help="Observations stacked into a stateless actor input; 0 keeps the actor stateful.",
        default=0,
    )
    parser.add_argument(
        "--trainer.forward_passes",
        type=int,
        help="Forward passes per action of a stateless actor.",
        default=const.FORWARD_PASSES,
    )
    parser.add_argument(
        "--trainer.eval_episodes", type=int, help="Evaluation episodes per epoch.", default=const.EVAL_EPISODES
    )
    parser.add_argument(
        "--trainer.checkpoint_interval",
        type=int,
        help="Epochs between state saves (0 saves only at the end).",
        default=10,
    )
    parser.add_argument(
        "--trainer.resume",
        action="store_true",
        help="Continue from state.npz in the run directory.",
        default=False,
    )

    parser.add_argument("--jsrl.alpha", type=float, help="Q normaliser weight α.", default=const.TD3BC_ALPHA)
    parser.add_argument(
        "--jsrl.bc_lambda", type=float, help="Initial BC coefficient λ0.", default=const.BC_LAMBDA_START
    )
    parser.add_argument(
        "--jsrl.bc_decay", type=float, help="Per-epoch decay of λ.", default=const.BC_LAMBDA_DECAY
    )
    parser.add_argument(
        "--jsrl.no_bc_term", action="store_true", help="Drop the BC term from the actor loss.", default=False
    )
    parser.add_argument(
        "--jsrl.no_jump_start",
        action="store_true",
        help="Let the spiking actor act from the first step.",
        default=False,
    )
    parser.add_argument(
        "--jsrl.bc_guide_only",
        action="store_true",
        help="Restrict the BC term to guide-tagged transitions.",
        default=False,
    )
    parser.add_argument(
        "--jsrl.guide_checkpoint",
        type=str,
        help="Pretrained guide checkpoint; trained from scratch when omitted.",
        default=None,
    )
    parser.add_argument(
        "--jsrl.guide_epochs", type=int, help="Guide training budget in epochs.", default=200
    )
    parser.add_argument(
        "--jsrl.guide_eval_episodes",
        type=int,
        help="Episodes in the guide stop criterion.",
        default=const.GUIDE_EVAL_EPISODES,
    )
    parser.add_argument(
        "--jsrl.dataset",
        type=str,
        help="Episode log used by the offline methods; collected with the guide when omitted.",
        default=None,
    )
    parser.add_argument(
        "--jsrl.dataset_episodes",
        type=int,
        help="Guide episodes collected for an offline dataset.",
        default=50,
    )


def add_analyze_args(cls, parser):
    parser.add_argument(
        "--analyze.slopes",
        "--slopes",
        type=float,
        nargs="+",
        help="Slopes to compare against the reference.",
        default=[1.0, 2.0, 5.0, 10.0, 25.0, 50.0, 100.0],
    )
    parser.add_argument("--analyze.k_ref", type=float, help="Reference slope.", default=100.0)
    parser.add_argument("--analyze.trials", "--trials", type=int, help="Random trials.", default=100)
    parser.add_argument("--analyze.layers", "--layers", type=int, help="Hidden layers.", default=4)
    parser.add_argument("--analyze.neurons", "--neurons", type=int, help="Neurons per layer.", default=64)
    parser.add_argument(
        "--analyze.net", type=str, choices=["snn", "mlp"], help="Network family.", default="snn"
    )
    parser.add_argument("--analyze.steps", type=int, help="Sequence length of each sweep input batch.", default=10)
    parser.add_argument("--analyze.batch_size", type=int, help="Probe batch size.", default=16)
    parser.add_argument("--analyze.workers", type=int, help="Threads for trials.", default=1)


def add_eval_args(cls, parser):
    parser.add_argument(
        "--eval.checkpoint", "--checkpoint", type=str, help="Network checkpoint to evaluate.", default=None
    )
    parser.add_argument(
        "--eval.episodes", "--episodes", type=int, help="Noise-free episodes.", default=const.EVAL_EPISODES
    )
    parser.add_argument(
        "--eval.trajectory",
        "--trajectory",
        type=str,
        help="Write the first episode's trajectory log here.",
        default=None,
    )
    parser.add_argument(
        "--eval.forward_passes",
        type=int,
        help="Forward passes per action when the checkpoint takes stacked observations.",
        default=const.FORWARD_PASSES,
    )


def add_bench_args(cls, parser):
    parser.add_argument(
        "--bench.checkpoint", "--checkpoint", type=str, help="Spiking actor checkpoint.", default=None
    )
    parser.add_argument(
        "--bench.trajectory",
        "--trajectory",
        type=str,
        help="Trajectory log whose observations drive the sparsity measurement.",
        default=None,
    )
    parser.add_argument(
        "--bench.bytes_per_parameter",
        type=int,
        help="Bytes per stored parameter.",
        default=const.BYTES_PER_PARAMETER,
    )
    parser.add_argument(
        "--energy.p_s", type=float, help="pJ per synaptic spike op.", default=const.ENERGY_SYNAPTIC_SPIKE_PJ
    )
    parser.add_argument(
        "--energy.p_w", type=float, help="pJ within-tile spike energy.", default=const.ENERGY_WITHIN_TILE_PJ
    )
    parser.add_argument(
        "--energy.p_u", type=float, help="pJ per neuron update.", default=const.ENERGY_NEURON_UPDATE_PJ
    )


def add_ablate_args(cls, parser):
    parser.add_argument(
        "--ablate.seeds", type=int, nargs="+", help="Seeds run for every grid cell.", default=[0]
    )
    parser.add_argument(
        "--ablate.reward_target",
        type=float,
        help="Mean evaluation reward a run must reach to count in the time-to-target columns.",
        default=const.REWARD_TARGET,
    )


def add_slope_sweep_args(cls, parser):
    """Slope settings compared by the stateless slope sweep."""

    parser.add_argument(
        "--slope_sweep.methods",
        type=str,
        nargs="+",
        choices=["bc", "td3"],
        help="Training methods swept.",
        default=["bc", "td3"],
    )
    parser.add_argument(
        "--slope_sweep.fixed_slopes",
        type=float,
        nargs="+",
        help="Fixed slopes compared with the interval and adaptive schedules.",
        default=[1.0, 5.0, 25.0, 100.0],
    )
    parser.add_argument(
        "--slope_sweep.frame_stack",
        type=int,
        help="Observations stacked into the stateless actor input.",
        default=const.FRAME_STACK,
    )


def config(cls, args: Optional[List[str]] = None):
    """
    Returns the configuration object for ``cls`` after adding its arguments.

    A ``--config`` file supplies defaults; flags given on the command line win.
    """
    args = list(sys.argv[1:] if args is None else args)
    parser = argparse.ArgumentParser(prog=f"spikerl {getattr(cls, 'run_name', '')}".strip())
    bt.logging.add_args(parser)
    cls.add_args(parser)

    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", dest="config_file", default=None)
    known, _ = pre.parse_known_args(args)
    if known.config_file:
        overrides = load_config_file(known.config_file)
        dests = {action.dest for action in parser._actions}
        unknown = sorted(set(overrides) - dests)
        if unknown:
            bt.logging.warning(f"Ignoring unknown config keys: {unknown}")
        parser.set_defaults(**{k: v for k, v in overrides.items() if k in dests})

    return bt.Config(parser, args=args)
