"""Bidirectional training loop: the generator proposes scenarios (interior or
boundary-pinned), the agent trains on them, and boundary-episode performance
feeds back into the generator's range updates. Emits three log products per
run: a JSONL metrics stream (one record per episode), an append-only bounds
trace CSV, and a CSV of the raw sampled velocity vectors.
"""

import json
import os
from dataclasses import dataclass, replace

import numpy as np

from . import generator as gen
from .agent import DqnAgent, Transition
from .config import RunConfig, save_resolved_config
from .env import build_scenario, observe, reward, step
from .qnet import save_weights

METRICS_FILE = "metrics.jsonl"
BOUNDS_FILE = "bounds_trace.csv"
SAMPLES_FILE = "lambda_samples.csv"
CONFIG_FILE = "config.resolved.json"
SNAPSHOT_DIR = "snapshots"

METRICS_FIELDS = (
    "episode", "mode", "boundary_param", "boundary_side", "outcome",
    "reward", "steps", "avg_speed", "epsilon", "loss_mean", "train_iterations",
)


class TrainingDivergedError(RuntimeError):
    """Raised when a training iteration produces a non-finite loss."""


@dataclass
class EpisodeResult:
    cumulative_reward: float
    average_speed: float
    outcome: str                # "arrived" | "collided" | "timeout"
    steps: int
    mode: str                   # "episode" | "boundary"
    boundary: gen.BoundaryId | None = None
    step_rewards: list | None = None
    losses: list | None = None


@dataclass
class Snapshot:
    tag: str
    episode: int
    params: object              # NetworkParams copy
    bounds: list                # (param, lower, upper) triples


def run_episode(agent, sample, cfg: RunConfig, rng, training: bool = False,
                mode: str = "episode", boundary=None) -> EpisodeResult:
    """Roll one scenario to termination.

    `agent` is either a DqnAgent (epsilon-greedy when training, greedy when
    not) or a plain callable obs -> action used as a fixed policy. When
    training, every transition is pushed to replay, epsilon decays per step,
    and train iterations run per the agent's schedule. Evaluation rollouts
    leave the agent untouched.
    """
    if callable(agent):
        act = agent
    else:
        act = lambda obs: agent.act(obs, rng, training=training)

    state = build_scenario(sample, cfg.env)
    obs = observe(state, cfg.reward.v_max)
    cumulative = 0.0
    step_rewards = []
    losses = []
    while state.terminal is None:
        action = act(obs)
        state, outcome = step(state, action, cfg.env, cfg.reward)
        r = reward(state, outcome, cfg.reward)
        next_obs = observe(state, cfg.reward.v_max)
        cumulative += r
        step_rewards.append(r)
        if training and not callable(agent):
            loss = agent.observe(
                Transition(obs, action, r, next_obs, state.terminal is not None), rng
            )
            if loss is not None:
                if not np.isfinite(loss):
                    raise TrainingDivergedError(
                        "non-finite training loss %r at env step %d"
                        % (loss, agent.env_steps)
                    )
                losses.append(loss)
        obs = next_obs

    return EpisodeResult(
        cumulative_reward=cumulative,
        average_speed=state.ego.position / state.elapsed_time,
        outcome=state.terminal,
        steps=len(step_rewards),
        mode=mode,
        boundary=boundary,
        step_rewards=step_rewards,
        losses=losses if training else None,
    )


class OutputWriter:
    """Streams the three log products plus snapshots into a run directory."""

    def __init__(self, out_dir, cfg: RunConfig):
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        os.makedirs(os.path.join(out_dir, SNAPSHOT_DIR), exist_ok=True)
        save_resolved_config(cfg, os.path.join(out_dir, CONFIG_FILE))
        self._metrics = open(os.path.join(out_dir, METRICS_FILE), "w")
        self._bounds = open(os.path.join(out_dir, BOUNDS_FILE), "w")
        self._bounds.write("episode,param,lower,upper\n")
        self._samples = open(os.path.join(out_dir, SAMPLES_FILE), "w")
        self._samples.write("episode," + ",".join("v%d" % i for i in range(9)) + "\n")

    def metrics_record(self, record: dict):
        self._metrics.write(json.dumps(record, sort_keys=True) + "\n")

    def bounds_rows(self, episode: int, bounds):
        for i, lo, hi in bounds:
            self._bounds.write("%d,%d,%r,%r\n" % (episode, i, lo, hi))

    def sample_row(self, episode: int, sample):
        values = ",".join(repr(float(v)) for v in sample.initial_velocities)
        self._samples.write("%d,%s\n" % (episode, values))

    def snapshot(self, snap: Snapshot):
        base = os.path.join(self.out_dir, SNAPSHOT_DIR, snap.tag)
        save_weights(snap.params, base + ".weights.txt")
        with open(base + ".bounds.json", "w") as f:
            json.dump({"tag": snap.tag, "episode": snap.episode,
                       "bounds": snap.bounds}, f, sort_keys=True)
            f.write("\n")

    def close(self):
        for f in (self._metrics, self._bounds, self._samples):
            f.close()


def take_snapshot(agent: DqnAgent, state: gen.DistributionState, tag: str,
                  episode: int, writer: OutputWriter | None = None) -> Snapshot:
    """Freeze the agent's weights and the generator's bounds under a tag."""
    snap = Snapshot(
        tag=tag,
        episode=episode,
        params=agent.online.copy(),
        bounds=gen.snapshot_bounds(state),
    )
    if writer is not None:
        writer.snapshot(snap)
    return snap


@dataclass
class TrainingRun:
    agent: DqnAgent
    state: gen.DistributionState
    metrics: list               # one dict per episode, METRICS_FIELDS keys
    snapshots: dict             # tag -> Snapshot
    update_events: list         # generator UpdateEvents with episode index


def _milestone_schedule(cfg: RunConfig):
    """Map episode index -> list of snapshot tags due before that episode."""
    due = {}
    for tag, frac in cfg.training.snapshot_milestones.items():
        idx = int(round(frac * cfg.total_episodes))
        due.setdefault(idx, []).append(tag)
    for idx in due:
        due[idx].sort()
    return due


def run_training(cfg: RunConfig, out_dir=None, initial_bounds=None) -> TrainingRun:
    """Run the full loop for cfg.total_episodes episodes.

    `initial_bounds` optionally overrides the generator's starting (lower,
    upper) arrays, used for training against a frozen snapshot environment.
    Identical configs (seed included) produce bitwise-identical logs.
    """
    rng = np.random.default_rng(cfg.seed)
    agent = DqnAgent(cfg.agent, seed=cfg.seed)
    state = gen.DistributionState(cfg.generator)
    if initial_bounds is not None:
        lower, upper = initial_bounds
        state.lower[:] = lower
        state.upper[:] = upper

    writer = OutputWriter(out_dir, cfg) if out_dir is not None else None
    milestones = _milestone_schedule(cfg)
    metrics = []
    snapshots = {}
    update_events = []

    def snapshot_due(ep):
        for tag in milestones.get(ep, []):
            snapshots[tag] = take_snapshot(agent, state, tag, ep, writer)

    try:
        for ep in range(cfg.total_episodes):
            snapshot_due(ep)
            boundary_mode = rng.uniform() < cfg.generator.boundary_probability
            if boundary_mode:
                sample, boundary = gen.boundary_sample(state, rng)
                training = cfg.training.train_on_boundary
                result = run_episode(agent, sample, cfg, rng, training=training,
                                     mode="boundary", boundary=boundary)
                if cfg.generator.performance_metric == "episode_return":
                    performances = [result.cumulative_reward]
                else:
                    performances = result.step_rewards
                for p in performances:
                    gen.record_performance(state, boundary, p)
                    event = gen.maybe_update(state, boundary)
                    if event is not None:
                        update_events.append((ep, event))
            else:
                sample = gen.episode_sample(state, rng)
                result = run_episode(agent, sample, cfg, rng, training=True,
                                     mode="episode")

            losses = result.losses or []
            record = {
                "episode": ep,
                "mode": result.mode,
                "boundary_param": result.boundary.param if result.boundary else None,
                "boundary_side": result.boundary.side if result.boundary else None,
                "outcome": result.outcome,
                "reward": result.cumulative_reward,
                "steps": result.steps,
                "avg_speed": result.average_speed,
                "epsilon": agent.epsilon,
                "loss_mean": float(np.mean(losses)) if losses else None,
                "train_iterations": len(losses),
            }
            metrics.append(record)
            if writer is not None:
                writer.metrics_record(record)
                writer.bounds_rows(ep, gen.snapshot_bounds(state))
                writer.sample_row(ep, sample)

        snapshot_due(cfg.total_episodes)
        # The final agent and bounds are the domain-randomized artifacts.
        snapshots["dr"] = take_snapshot(agent, state, "dr", cfg.total_episodes, writer)
    finally:
        if writer is not None:
            writer.close()

    return TrainingRun(agent=agent, state=state, metrics=metrics,
                       snapshots=snapshots, update_events=update_events)
