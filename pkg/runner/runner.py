# The MIT License (MIT)
# Copyright © 2025 SpikeRL

"""
spikerl command line

Subcommands:
    analyze-slopes   Gradient magnitude / alignment sweep over surrogate slopes
    train            Train a spiking actor (bc, td3, td3bc, td3bc_jsrl)
    eval             Noise-free evaluation of a checkpoint
    bench            Footprint, operation counts and energy of a spiking actor
    ablate           BC-term × jump-start grid
    ablate-slopes    Slope settings × {bc, td3} grid on a stateless stacked-observation actor

Usage:
    spikerl train --method td3bc_jsrl --config run.yaml --seed 7 --out runs/jsrl
    spikerl analyze-slopes --slopes 1 5 25 --trials 100 --out runs/sweep
    spikerl eval --checkpoint runs/jsrl/actor.json --episodes 20
    spikerl bench --checkpoint runs/jsrl/actor.json --trajectory runs/eval/trajectory.csv
    spikerl ablate-slopes --epochs 300 --ablate.seeds 0 1 2 --out runs/slopes
"""

import copy
import json
import os
import shutil
import sys
from typing import Callable, Dict, List, Optional, Tuple, Union

import bittensor as bt
import numpy as np

from spikerl import __version__
from spikerl.core.const import ACT_DIM, OBS_DIM, REFERENCE_ACTIVATION_SPARSITY, REWARD_TARGET
from spikerl.core.errors import ContractViolation, SpikeRLError
from spikerl.env.quadrotor import QuadrotorEnv
from spikerl.env.trajectory import TrajectoryLog, load_observations
from spikerl.metrics.energy import EnergyModel
from spikerl.metrics.ops import ann_reference_report, format_ops_table, snn_ops_report
from spikerl.networks.checkpoint import load_checkpoint
from spikerl.networks.snn import SnnPolicy
from spikerl.surrogate.diagnostics import run_slope_sweep
from spikerl.surrogate.schedule import ADAPTIVE, FIXED, INTERVAL
from spikerl.trainer.rollout import evaluate_policy
from spikerl.trainer.stacking import StatelessPolicy
from spikerl.trainer.training import SpikingTrainer, run_training
from spikerl.utils.config import (
    add_ablate_args,
    add_analyze_args,
    add_args,
    add_bench_args,
    add_env_args,
    add_eval_args,
    add_slope_sweep_args,
    check_config,
    config,
    write_run_stamp,
)
from spikerl.utils.logging import log_event
from spikerl.utils.misc import read_csv, seed_streams, write_csv

ABLATION_COLUMNS = (
    "bc_term",
    "jump_start",
    "seeds",
    "final_mean_reward",
    "final_mean_episode_len",
    "best_mean_reward",
    "steps_to_target",
)

SLOPE_ABLATION_COLUMNS = (
    "method",
    "slope_mode",
    "k",
    "seeds",
    "epochs_to_target",
    "final_mean_reward",
    "best_mean_reward",
)


class AnalyzeCommand:
    run_name = "analyze"

    @classmethod
    def add_args(cls, parser):
        add_args(cls, parser)
        add_analyze_args(cls, parser)


class EvalCommand:
    run_name = "eval"

    @classmethod
    def add_args(cls, parser):
        add_args(cls, parser)
        add_env_args(cls, parser)
        add_eval_args(cls, parser)


class BenchCommand:
    run_name = "bench"

    @classmethod
    def add_args(cls, parser):
        add_args(cls, parser)
        add_bench_args(cls, parser)


class AblateCommand(SpikingTrainer):
    run_name = "ablate"

    @classmethod
    def add_args(cls, parser):
        super().add_args(parser)
        add_ablate_args(cls, parser)


class AblateSlopesCommand(AblateCommand):
    run_name = "ablate-slopes"

    @classmethod
    def add_args(cls, parser):
        super().add_args(parser)
        add_slope_sweep_args(cls, parser)


def prepare(cls, args: List[str]) -> "bt.Config":
    """Parse, validate and stamp the run directory of a non-training command."""
    cfg = config(cls, args)
    check_config(cls, cfg)
    bt.logging.set_config(config=cfg.logging)
    bt.logging.info(cfg)
    write_run_stamp(cfg, __version__)
    return cfg


def write_json(path: str, payload: Dict):
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=float)


def cmd_analyze_slopes(args: List[str]) -> int:
    cfg = prepare(AnalyzeCommand, args)
    a = cfg.analyze
    out = os.path.join(cfg.run.full_path, "slope_sweep.csv")
    rows = run_slope_sweep(
        a.slopes,
        trials=int(a.trials),
        layers=int(a.layers),
        neurons=int(a.neurons),
        out=out,
        seed=int(cfg.run.seed),
        k_ref=float(a.k_ref),
        net_kind=a.net,
        batch_size=int(a.batch_size),
        steps=int(a.steps),
        workers=int(a.workers),
    )
    for row in rows:
        if row["layer"] == 0:
            bt.logging.info(
                f"k={row['slope']:g} | layer 0 |grad| {row['mean_abs_grad']:.3e} | "
                f"zero {row['zero_fraction']:.2f} | cos {row['cosine_to_ref']:.3f}"
            )
    log_event("slope_sweep", rows=len(rows), out=out)
    return 0


def cmd_train(args: List[str]) -> int:
    trainer = run_training(SpikingTrainer.config(args))
    if trainer.last_row:
        bt.logging.success(
            f"Final epoch: reward {trainer.last_row['mean_reward']:.2f}, "
            f"length {trainer.last_row['mean_episode_len']:.1f}"
        )
    return 0


def cmd_eval(args: List[str]) -> int:
    cfg = prepare(EvalCommand, args)
    if not cfg.eval.checkpoint:
        raise ContractViolation("eval needs --checkpoint")
    actor = load_checkpoint(cfg.eval.checkpoint)
    if actor.kind == "mlp":
        # the guide's input is the observation followed by its action history
        history_length = (actor.in_dim - OBS_DIM) // ACT_DIM
    else:
        history_length = 0
        if actor.obs_dim != OBS_DIM:
            # trained on stacked observations
            actor = StatelessPolicy(actor, actor.obs_dim // OBS_DIM, int(cfg.eval.forward_passes))
    env = QuadrotorEnv.from_config(cfg, seed_streams(cfg.run.seed)["eval"])
    trajectory = TrajectoryLog(env.dt) if cfg.eval.trajectory else None
    result = evaluate_policy(env, actor, int(cfg.eval.episodes), history_length, trajectory)
    if trajectory is not None:
        trajectory.write(cfg.eval.trajectory)
        bt.logging.info(f"Trajectory of the first episode written to {cfg.eval.trajectory}")

    summary = {
        "checkpoint": cfg.eval.checkpoint,
        "episodes": len(result.rewards),
        "mean_reward": result.mean_reward,
        "mean_episode_len": result.mean_length,
        "crashes": sum(r == "crash" for r in result.reasons),
    }
    write_json(os.path.join(cfg.run.full_path, "eval.json"), summary)
    bt.logging.success(
        f"Eval over {summary['episodes']} episodes | reward {result.mean_reward:.2f} | length {result.mean_length:.1f}"
    )
    log_event("eval", **summary)
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_bench(args: List[str]) -> int:
    cfg = prepare(BenchCommand, args)
    b = cfg.bench
    if b.checkpoint:
        policy = load_checkpoint(b.checkpoint)
        if policy.kind != "snn":
            raise ContractViolation(f"bench needs a spiking actor checkpoint, got {policy.kind}")
    else:
        bt.logging.warning("No --checkpoint given; benchmarking a freshly initialised actor")
        policy = SnnPolicy(rng=seed_streams(cfg.run.seed)["init"])
    observations = load_observations(b.trajectory) if b.trajectory else None
    energy = EnergyModel.from_config(cfg, policy.sizes, REFERENCE_ACTIVATION_SPARSITY)
    snn = snn_ops_report(policy, observations, int(b.bytes_per_parameter), energy)
    ann = ann_reference_report(bytes_per_parameter=int(b.bytes_per_parameter))

    payload = {"snn": snn.to_dict(), "ann": ann.to_dict()}
    write_json(os.path.join(cfg.run.full_path, "bench.json"), payload)
    log_event("bench", **{f"snn_{k}": v for k, v in snn.to_dict().items() if np.isscalar(v)})
    print(json.dumps(payload, indent=2, sort_keys=True, default=float))
    print(format_ops_table({"SNN": snn, "ANN (history)": ann}))
    return 0


def _final_rows(metrics_path: str) -> List[Dict[str, str]]:
    rows = read_csv(metrics_path)
    if not rows:
        raise ContractViolation(f"No epochs recorded in {metrics_path}")
    return rows


def first_reaching(rows: List[Dict[str, str]], target: float) -> Optional[Dict[str, str]]:
    """First metrics row whose mean evaluation reward reaches ``target``, or None."""
    for row in rows:
        if float(row["mean_reward"]) >= target:
            return row
    return None


def mean_or_na(values: List[Optional[float]]) -> Union[float, str]:
    """Mean over the runs that reached the target, ``"NA"`` when none did."""
    reached = [v for v in values if v is not None]
    return float(np.mean(reached)) if reached else "NA"


def _start_grid(cls, args: List[str]) -> "bt.Config":
    cfg = cls.config(args)
    cls.check_config(cfg)
    bt.logging.set_config(config=cfg.logging)
    write_run_stamp(cfg, __version__)
    return cfg


def _train_cell(cell: "bt.Config", root: str, share_guide: bool) -> List[Dict[str, str]]:
    """Train one grid cell; the first guide trained for a seed is reused by later cells."""
    guide = os.path.join(root, f"guide_seed{cell.run.seed}.json")
    if share_guide and os.path.exists(guide) and not cell.jsrl.guide_checkpoint:
        cell.jsrl.guide_checkpoint = guide
    trainer = run_training(cell)
    if share_guide and not os.path.exists(guide) and os.path.exists(trainer.guide_path):
        shutil.copyfile(trainer.guide_path, guide)
    return _final_rows(trainer.metrics_path)


def cmd_ablate(args: List[str]) -> int:
    """
    Train td3bc_jsrl once per seed for every combination of the BC term and
    jump-starting, then summarise the final and best evaluation per cell and
    the environment steps each needed to reach the reward target.
    """
    cfg = _start_grid(AblateCommand, args)
    root = cfg.run.full_path
    target = float(cfg.ablate.reward_target)

    summary = []
    for bc_term in (True, False):
        for jump_start in (True, False):
            finals, lengths, bests, steps = [], [], [], []
            for seed in cfg.ablate.seeds:
                cell = copy.deepcopy(cfg)
                cell.trainer.method = "td3bc_jsrl"
                cell.trainer.resume = False
                cell.jsrl.no_bc_term = not bc_term
                cell.jsrl.no_jump_start = not jump_start
                cell.run.seed = int(seed)
                cell.run.out = os.path.join(root, f"bc{int(bc_term)}_js{int(jump_start)}", f"seed{seed}")

                rows = _train_cell(cell, root, share_guide=jump_start)
                finals.append(float(rows[-1]["mean_reward"]))
                lengths.append(float(rows[-1]["mean_episode_len"]))
                bests.append(max(float(r["mean_reward"]) for r in rows))
                reached = first_reaching(rows, target)
                steps.append(None if reached is None else float(reached["env_steps"]))

            summary.append(
                {
                    "bc_term": "yes" if bc_term else "no",
                    "jump_start": "yes" if jump_start else "no",
                    "seeds": len(finals),
                    "final_mean_reward": float(np.mean(finals)),
                    "final_mean_episode_len": float(np.mean(lengths)),
                    "best_mean_reward": float(np.mean(bests)),
                    "steps_to_target": mean_or_na(steps),
                }
            )

    write_csv(os.path.join(root, "ablation.csv"), ABLATION_COLUMNS, summary)
    print(format_ablation_table(summary, target))
    log_event("ablation", cells=len(summary))
    return 0


def _cell_value(value: Union[float, str], width: int, digits: int) -> str:
    return f"{value:>{width}}" if isinstance(value, str) else f"{value:>{width}.{digits}f}"


def format_ablation_table(rows: List[Dict], target: float = REWARD_TARGET) -> str:
    steps = f"Steps to {target:g}"
    header = f"{'BC-term':<10}{'Jump-start':<12}{'Reward':>10}{'Length':>10}{'Best':>10}{steps:>16}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r['bc_term']:<10}{r['jump_start']:<12}{r['final_mean_reward']:>10.1f}"
            f"{r['final_mean_episode_len']:>10.1f}{r['best_mean_reward']:>10.1f}"
            f"{_cell_value(r['steps_to_target'], 16, 0)}"
        )
    return "\n".join(lines)


def slope_settings(fixed_slopes: List[float]) -> List[Tuple[str, Optional[float]]]:
    """Slope settings of the sweep: each fixed slope, then the interval and adaptive schedules."""
    return [(FIXED, float(k)) for k in fixed_slopes] + [(INTERVAL, None), (ADAPTIVE, None)]


def cmd_ablate_slopes(args: List[str]) -> int:
    """
    Train a stateless stacked-observation actor with BC and with TD3 under each
    slope setting, without a reward curriculum, and summarise how many epochs
    each needed to reach the reward target.
    """
    cfg = _start_grid(AblateSlopesCommand, args)
    root = cfg.run.full_path
    target = float(cfg.ablate.reward_target)
    sweep = cfg.slope_sweep

    summary = []
    for method in sweep.methods:
        for mode, k in slope_settings(sweep.fixed_slopes):
            finals, bests, epochs = [], [], []
            label = mode if k is None else f"{mode}_k{k:g}"
            for seed in cfg.ablate.seeds:
                cell = copy.deepcopy(cfg)
                cell.trainer.method = method
                cell.trainer.resume = False
                cell.trainer.frame_stack = int(sweep.frame_stack)
                cell.reward.curriculum_interval = 0
                cell.slope.mode = mode
                if k is not None:
                    cell.slope.k = k
                cell.run.seed = int(seed)
                cell.run.out = os.path.join(root, method, label, f"seed{seed}")

                rows = _train_cell(cell, root, share_guide=method == "bc")
                finals.append(float(rows[-1]["mean_reward"]))
                bests.append(max(float(r["mean_reward"]) for r in rows))
                reached = first_reaching(rows, target)
                epochs.append(None if reached is None else float(reached["epoch"]) + 1.0)

            summary.append(
                {
                    "method": method,
                    "slope_mode": mode,
                    "k": "" if k is None else k,
                    "seeds": len(finals),
                    "epochs_to_target": mean_or_na(epochs),
                    "final_mean_reward": float(np.mean(finals)),
                    "best_mean_reward": float(np.mean(bests)),
                }
            )

    write_csv(os.path.join(root, "slope_ablation.csv"), SLOPE_ABLATION_COLUMNS, summary)
    print(format_slope_ablation_table(summary, target))
    log_event("slope_ablation", cells=len(summary))
    return 0


def format_slope_ablation_table(rows: List[Dict], target: float = REWARD_TARGET) -> str:
    epochs = f"Epochs to {target:g}"
    header = f"{'Method':<8}{'Slope':<14}{epochs:>16}{'Reward':>10}{'Best':>10}"
    lines = [header, "-" * len(header)]
    for r in rows:
        slope = r["slope_mode"] if r["k"] == "" else f"{r['slope_mode']} {r['k']:g}"
        lines.append(
            f"{r['method']:<8}{slope:<14}{_cell_value(r['epochs_to_target'], 16, 1)}"
            f"{r['final_mean_reward']:>10.1f}{r['best_mean_reward']:>10.1f}"
        )
    return "\n".join(lines)


COMMANDS: Dict[str, Callable[[List[str]], int]] = {
    "analyze-slopes": cmd_analyze_slopes,
    "train": cmd_train,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "ablate": cmd_ablate,
    "ablate-slopes": cmd_ablate_slopes,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Entry point: dispatch on the first argument. Package errors become exit code 1,
    an unknown subcommand exit code 2.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    bt.logging.enable_info()
    if not argv or argv[0] in ("-h", "--help"):
        print(__doc__)
        return 0 if argv else 2
    name, rest = argv[0], argv[1:]
    if name not in COMMANDS:
        bt.logging.error(f"Unknown command {name!r}; expected one of {', '.join(COMMANDS)}")
        return 2

    bt.logging.info("=" * 60)
    bt.logging.info(f"spikerl {__version__} | {name}")
    bt.logging.info("=" * 60)
    try:
        return COMMANDS[name](rest)
    except SpikeRLError as e:
        bt.logging.error(f"{type(e).__name__}: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
