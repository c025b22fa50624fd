"""Command-line entry point.

Subcommands:
  train            run the full curriculum training loop, writing metrics,
                   bounds trace, sampled-velocity CSV, and snapshots
  grid             train fixed-environment agents from a snapshot directory
                   and emit the cross-environment evaluation grid
  export           re-emit a run directory's bounds trace and velocity-sample
                   CSVs after validating them against the metrics log
  validate-config  parse and validate a config document

A run directory is self-describing: the fully resolved configuration is
written alongside the outputs. Non-empty output directories are never
overwritten unless --force is given.
"""

import argparse
import dataclasses
import json
import os
import shutil
import sys

import numpy as np

from . import evaluation, training
from .config import (ConfigError, RunConfig, config_to_dict, load_config)
from .env import RewardConfigError
from .qnet import load_weights, forward


def _load_or_default(path) -> RunConfig:
    if path is None:
        return RunConfig()
    return load_config(path)


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if getattr(args, "episodes", None) is not None:
        cfg = dataclasses.replace(cfg, total_episodes=args.episodes)
    if getattr(args, "snapshot_tags", None):
        keep = [t.strip() for t in args.snapshot_tags.split(",") if t.strip()]
        milestones = cfg.training.snapshot_milestones
        unknown = [t for t in keep if t not in milestones]
        if unknown:
            raise ConfigError("unknown snapshot tag(s): %s (configured: %s)"
                              % (", ".join(unknown), ", ".join(sorted(milestones))))
        filtered = {t: milestones[t] for t in keep}
        cfg = dataclasses.replace(
            cfg, training=dataclasses.replace(cfg.training,
                                              snapshot_milestones=filtered))
    return cfg


def _prepare_out_dir(path, force: bool):
    if os.path.isdir(path) and os.listdir(path):
        if not force:
            raise RuntimeError(
                "output directory %s is not empty (use --force to overwrite)" % path)
        shutil.rmtree(path)
    os.makedirs(path, exist_ok=True)


def cmd_train(args) -> int:
    cfg = _apply_overrides(_load_or_default(args.config), args)
    _prepare_out_dir(args.out, args.force)
    run = training.run_training(cfg, out_dir=args.out)
    outcomes = [m["outcome"] for m in run.metrics]
    print("trained %d episodes (%d arrived, %d collided, %d timed out)"
          % (len(run.metrics), outcomes.count("arrived"),
             outcomes.count("collided"), outcomes.count("timeout")))
    print("outputs written to %s" % args.out)
    return 0


def cmd_grid(args) -> int:
    cfg = _apply_overrides(_load_or_default(args.config), args)

    snapshots = {}
    for tag in evaluation.ENV_TAGS:
        path = os.path.join(args.snapshots, "%s.bounds.json" % tag)
        if not os.path.exists(path):
            raise evaluation.MissingSnapshotError(
                "missing snapshot %r (no %s)" % (tag, path))
        snapshots[tag] = evaluation.load_env_snapshot(path)

    dr_weights = os.path.join(args.snapshots, "dr.weights.txt")
    if not os.path.exists(dr_weights):
        raise evaluation.MissingSnapshotError(
            "missing snapshot 'dr' (no %s)" % dr_weights)
    dr_params = load_weights(dr_weights)

    policies = {"dr": lambda obs: int(np.argmax(forward(dr_params, obs)))}
    episodes = args.episodes
    for offset, tag in enumerate(evaluation.ENV_TAGS, start=1):
        print("training fixed-environment agent in %r ..." % tag)
        agent = evaluation.train_fixed(snapshots[tag], cfg, episodes=episodes,
                                       seed=cfg.seed + offset)
        policies[tag] = agent.greedy_policy()

    cells = evaluation.build_grid(snapshots, policies, cfg)
    _prepare_out_dir(args.out, args.force)
    evaluation.grid_to_csv(cells, os.path.join(args.out, "grid.csv"))
    print(evaluation.format_grid(cells))
    print("grid written to %s" % os.path.join(args.out, "grid.csv"))
    return 0


def _read_lines(path, what):
    if not os.path.exists(path):
        raise RuntimeError("run directory is missing %s (%s)" % (what, path))
    with open(path) as f:
        return f.read().splitlines()


def cmd_export(args) -> int:
    run_dir = args.run
    metrics_lines = _read_lines(os.path.join(run_dir, training.METRICS_FILE),
                                "the metrics log")
    episodes = len(metrics_lines)
    bounds_lines = _read_lines(os.path.join(run_dir, training.BOUNDS_FILE),
                               "the bounds trace")
    sample_lines = _read_lines(os.path.join(run_dir, training.SAMPLES_FILE),
                               "the velocity samples")

    sample_rows = sample_lines[1:]
    if len(sample_rows) != episodes:
        raise RuntimeError("sample rows (%d) do not match metrics episodes (%d)"
                           % (len(sample_rows), episodes))
    for line in sample_rows:
        if len(line.split(",")) != 10:
            raise RuntimeError("malformed sample row (expected 9 value columns): %r"
                               % line)
    bounds_rows = bounds_lines[1:]
    if episodes and len(bounds_rows) % episodes != 0:
        raise RuntimeError("bounds rows (%d) are not a whole multiple of episodes (%d)"
                           % (len(bounds_rows), episodes))

    out = args.out or os.path.join(run_dir, "export")
    os.makedirs(out, exist_ok=True)
    for name, lines in ((training.BOUNDS_FILE, bounds_lines),
                        (training.SAMPLES_FILE, sample_lines)):
        with open(os.path.join(out, name), "w") as f:
            f.write("\n".join(lines))
            if lines:
                f.write("\n")
    print("exported %d episodes of traces to %s" % (episodes, out))
    return 0


def cmd_validate_config(args) -> int:
    cfg = load_config(args.config)
    print(json.dumps(config_to_dict(cfg), indent=2, sort_keys=True))
    print("config ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="highway-adr",
        description="Curriculum-randomized highway DQN training and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run the curriculum training loop")
    p.add_argument("--config", help="JSON config file (defaults apply if omitted)")
    p.add_argument("--out", required=True, help="output directory for run products")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--episodes", type=int, help="override total_episodes")
    p.add_argument("--snapshot-tags", help="comma-separated milestone tags to keep")
    p.add_argument("--force", action="store_true",
                   help="overwrite a non-empty output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("grid", help="build the cross-environment grid")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--snapshots", required=True,
                   help="directory with easy/mid/hard bounds and dr weights")
    p.add_argument("--out", required=True, help="output directory for grid.csv")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--episodes", type=int,
                   help="override fixed-environment training episodes")
    p.add_argument("--force", action="store_true",
                   help="overwrite a non-empty output directory")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("export", help="re-emit trace CSVs from a run directory")
    p.add_argument("--run", required=True, help="run directory to export from")
    p.add_argument("--out", help="destination (default: <run>/export)")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("validate-config", help="parse and validate a config file")
    p.add_argument("--config", required=True, help="JSON config file")
    p.set_defaults(func=cmd_validate_config)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, RewardConfigError, evaluation.MissingSnapshotError,
            training.TrainingDivergedError, RuntimeError, OSError) as e:
        print("error: %s" % e, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
