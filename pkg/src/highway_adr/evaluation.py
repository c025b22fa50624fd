"""Cross-environment evaluation: train agents against frozen snapshot
distributions, evaluate every agent in every snapshot environment with a
greedy policy, and assemble the (trained_in x tested_in) grid.
"""

import json
from dataclasses import dataclass, replace

import numpy as np

from . import generator as gen
from .config import RunConfig
from .training import run_episode, run_training

COLLISION_FREE_THRESHOLD = 0.95   # rate needed for a "collision-free" mark

AGENT_TAGS = ("easy", "mid", "hard", "dr")   # grid rows
ENV_TAGS = ("easy", "mid", "hard")           # grid columns

GRID_HEADER = "trained_in,tested_in,avg_speed,collision_free_rate,episodes,seed"


class MissingSnapshotError(KeyError):
    pass


@dataclass(frozen=True)
class EnvSnapshot:
    tag: str
    lower: np.ndarray
    upper: np.ndarray


@dataclass(frozen=True)
class GridCell:
    trained_in: str
    tested_in: str
    avg_speed: float
    collision_free_rate: float
    episodes: int
    seed: int

    @property
    def collision_free(self) -> bool:
        return self.collision_free_rate >= COLLISION_FREE_THRESHOLD


def env_snapshot_from_bounds(tag: str, bounds) -> EnvSnapshot:
    """Build a snapshot from (param, lower, upper) triples."""
    order = sorted(bounds)
    return EnvSnapshot(
        tag=tag,
        lower=np.array([b[1] for b in order], dtype=float),
        upper=np.array([b[2] for b in order], dtype=float),
    )


def load_env_snapshot(path) -> EnvSnapshot:
    with open(path) as f:
        data = json.load(f)
    return env_snapshot_from_bounds(data["tag"], data["bounds"])


def frozen_state(snapshot: EnvSnapshot, cfg: RunConfig) -> gen.DistributionState:
    """A DistributionState pinned to the snapshot's bounds."""
    state = gen.DistributionState(cfg.generator)
    if len(snapshot.lower) != state.num_params:
        raise ValueError("snapshot has %d params, config expects %d"
                         % (len(snapshot.lower), state.num_params))
    state.lower[:] = snapshot.lower
    state.upper[:] = snapshot.upper
    return state


def train_fixed(snapshot: EnvSnapshot, cfg: RunConfig, episodes=None, seed=None):
    """Train a fresh agent on the frozen snapshot distribution.

    Interior (episode) sampling only: boundary probability is forced to zero,
    so the generator's state never changes. Returns the trained DqnAgent.
    """
    fixed_cfg = replace(
        cfg,
        seed=cfg.seed if seed is None else seed,
        total_episodes=cfg.grid.fixed_train_episodes if episodes is None else episodes,
        generator=replace(cfg.generator, boundary_probability=0.0),
    )
    run = run_training(fixed_cfg, out_dir=None,
                       initial_bounds=(snapshot.lower, snapshot.upper))
    return run.agent


def evaluate(policy, snapshot: EnvSnapshot, n: int, cfg: RunConfig, rng):
    """Run n greedy episodes against the snapshot distribution.

    `policy` is a callable obs -> action. Returns (avg_speed,
    collision_free_rate): the mean of per-episode average speeds and the
    fraction of episodes not ending in a collision.
    """
    state = frozen_state(snapshot, cfg)
    speeds = []
    collision_free = 0
    for _ in range(n):
        sample = gen.episode_sample(state, rng)
        result = run_episode(policy, sample, cfg, rng)
        speeds.append(result.average_speed)
        if result.outcome != "collided":
            collision_free += 1
    return float(np.mean(speeds)), collision_free / n


def cell_seed(base_seed: int, row: int, col: int) -> int:
    """Deterministic per-cell seed: rows/cols indexed over the fixed tag order."""
    return base_seed * 100 + row * 10 + col


def build_grid(snapshots: dict, policies: dict, cfg: RunConfig,
               n: int = None, base_seed: int = None) -> list:
    """Evaluate every (trained_in, tested_in) pair; returns 12 GridCells.

    `snapshots` maps tag -> EnvSnapshot for the three test environments;
    `policies` maps tag -> greedy policy callable for the four agents. Every
    cell owns a private rng derived from (base_seed, row, col), so cells are
    independent of evaluation order and repeatable.
    """
    n = cfg.grid.episodes_per_cell if n is None else n
    base_seed = cfg.seed if base_seed is None else base_seed
    for tag in ENV_TAGS:
        if tag not in snapshots:
            raise MissingSnapshotError("missing environment snapshot %r" % tag)
    for tag in AGENT_TAGS:
        if tag not in policies:
            raise MissingSnapshotError("missing trained agent %r" % tag)

    cells = []
    for row, agent_tag in enumerate(AGENT_TAGS):
        for col, env_tag in enumerate(ENV_TAGS):
            seed = cell_seed(base_seed, row, col)
            rng = np.random.default_rng(seed)
            avg_speed, rate = evaluate(policies[agent_tag], snapshots[env_tag],
                                       n, cfg, rng)
            cells.append(GridCell(agent_tag, env_tag, avg_speed, rate, n, seed))
    return cells


def grid_to_csv(cells, path):
    with open(path, "w") as f:
        f.write(GRID_HEADER + "\n")
        for c in cells:
            f.write("%s,%s,%r,%r,%d,%d\n"
                    % (c.trained_in, c.tested_in, c.avg_speed,
                       c.collision_free_rate, c.episodes, c.seed))


def format_grid(cells) -> str:
    """Human-readable table, one row per training environment."""
    by_row = {}
    for c in cells:
        by_row.setdefault(c.trained_in, {})[c.tested_in] = c
    lines = ["%-10s" % "train\\test"
             + "".join("%-22s" % t for t in ENV_TAGS)]
    for tag in AGENT_TAGS:
        parts = ["%-10s" % tag]
        for env_tag in ENV_TAGS:
            c = by_row[tag][env_tag]
            mark = "ok" if c.collision_free else "x"
            parts.append("%-22s" % ("%.2f m/s %s (%.2f)"
                                    % (c.avg_speed, mark, c.collision_free_rate)))
        lines.append("".join(parts))
    return "\n".join(lines)
