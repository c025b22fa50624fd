"""Adaptive domain-randomization environment generator.

Each randomized parameter (a car's initial velocity) is drawn uniformly from
its own interval [lower_i, upper_i]. The generator probes the frontier by
occasionally pinning one parameter to one of its bounds ("boundary sample")
and banking the resulting episode performance in a per-boundary queue. When a
queue fills, its mean decides the bound's fate:

  mean >= increase threshold  ->  widen the range by the full step (0.5 m/s)
                                  and raise that threshold to the mean;
  mean <= decrease threshold  ->  narrow by HALF a step (0.25 m/s) and lower
                                  that threshold to the mean;
  otherwise                   ->  leave the bound alone.

The asymmetric step keeps an overshooting bound from bouncing all the way
back, and the self-tailoring thresholds replace fixed cutoffs with whatever
performance the agent last demonstrated at that frontier. Bounds are clamped
to the global velocity range and never cross. The queue is cleared after
every decision, change or not.
"""

from dataclasses import dataclass, field

import numpy as np

from .env import N_VEHICLES, ScenarioSample

LOWER = "lower"
UPPER = "upper"


@dataclass(frozen=True)
class GeneratorConfig:
    boundary_probability: float = 0.5   # chance an episode is boundary-sampled
    step_size: float = 0.5              # widening step; narrowing uses half
    increase_threshold: float = 15.0
    decrease_threshold: float = 13.0
    queue_size: int = 10
    min_value: float = 0.0              # global clamp on every bound
    max_value: float = 30.0
    initial_lower: float = 10.0
    initial_upper: float = 10.0
    randomize_ego: bool = True          # False: ego velocity fixed, 8 params
    fixed_ego_velocity: float = 10.0
    # What a boundary episode banks as performance: the episode's cumulative
    # reward ("episode_return") or one entry per step ("step_reward").
    performance_metric: str = "episode_return"

    @property
    def num_params(self) -> int:
        return N_VEHICLES if self.randomize_ego else N_VEHICLES - 1


@dataclass(frozen=True)
class BoundaryId:
    param: int          # randomized-parameter index, 0-based
    side: str           # "lower" | "upper"


@dataclass(frozen=True)
class UpdateEvent:
    boundary: BoundaryId
    mean_performance: float
    action: str         # "expanded" | "contracted" | "none"
    new_bound: float
    new_threshold: float | None   # None when no threshold moved


class DistributionState:
    """Per-parameter bounds plus per-boundary thresholds and performance queues."""

    def __init__(self, cfg: GeneratorConfig):
        self.cfg = cfg
        d = cfg.num_params
        self.lower = np.full(d, cfg.initial_lower, dtype=float)
        self.upper = np.full(d, cfg.initial_upper, dtype=float)
        self.queues = {}
        self.increase_thresholds = {}
        self.decrease_thresholds = {}
        for i in range(d):
            for side in (LOWER, UPPER):
                b = BoundaryId(i, side)
                self.queues[b] = []
                self.increase_thresholds[b] = cfg.increase_threshold
                self.decrease_thresholds[b] = cfg.decrease_threshold

    @property
    def num_params(self) -> int:
        return len(self.lower)

    def bound(self, b: BoundaryId) -> float:
        return self.lower[b.param] if b.side == LOWER else self.upper[b.param]


def _to_scenario(state: DistributionState, values: np.ndarray) -> ScenarioSample:
    cfg = state.cfg
    if cfg.randomize_ego:
        velocities = tuple(float(v) for v in values)
    else:
        velocities = (cfg.fixed_ego_velocity,) + tuple(float(v) for v in values)
    return ScenarioSample(initial_velocities=velocities)


def episode_sample(state: DistributionState, rng) -> ScenarioSample:
    """Draw every parameter uniformly from its current range."""
    values = rng.uniform(state.lower, state.upper)
    return _to_scenario(state, values)


def boundary_sample(state: DistributionState, rng):
    """Pin one uniformly chosen parameter to one of its bounds, sample the rest.

    Returns (ScenarioSample, BoundaryId). The pinned side is lower when an
    independent U(0,1) draw falls below 0.5.
    """
    d = state.num_params
    i = int(rng.integers(0, d))
    side = LOWER if rng.uniform() < 0.5 else UPPER
    values = rng.uniform(state.lower, state.upper)
    values[i] = state.lower[i] if side == LOWER else state.upper[i]
    return _to_scenario(state, values), BoundaryId(i, side)


def record_performance(state: DistributionState, boundary: BoundaryId, p: float):
    """Append one performance value to the boundary's queue."""
    if not np.isfinite(p):
        raise ValueError("non-finite performance value: %r" % p)
    state.queues[boundary].append(float(p))


def maybe_update(state: DistributionState, boundary: BoundaryId):
    """Decide the boundary's fate once its queue is full.

    Returns an UpdateEvent when a decision was taken (including the no-change
    case), else None. The queue is cleared on every decision.
    """
    queue = state.queues[boundary]
    cfg = state.cfg
    if len(queue) < cfg.queue_size:
        return None
    mean = float(np.mean(queue))
    queue.clear()

    i = boundary.param
    if mean >= state.increase_thresholds[boundary]:
        # Widen: upper moves up, lower moves down, clamped to the global range.
        if boundary.side == UPPER:
            state.upper[i] = min(state.upper[i] + cfg.step_size, cfg.max_value)
        else:
            state.lower[i] = max(state.lower[i] - cfg.step_size, cfg.min_value)
        state.increase_thresholds[boundary] = mean
        return UpdateEvent(boundary, mean, "expanded", state.bound(boundary), mean)

    if mean <= state.decrease_thresholds[boundary]:
        # Narrow by half a step; never cross the opposite bound.
        if boundary.side == UPPER:
            state.upper[i] = max(state.upper[i] - cfg.step_size / 2.0, state.lower[i])
        else:
            state.lower[i] = min(state.lower[i] + cfg.step_size / 2.0, state.upper[i])
        state.decrease_thresholds[boundary] = mean
        return UpdateEvent(boundary, mean, "contracted", state.bound(boundary), mean)

    return UpdateEvent(boundary, mean, "none", state.bound(boundary), None)


def snapshot_bounds(state: DistributionState):
    """Ordered (param, lower, upper) triples; pure read."""
    return [(i, float(state.lower[i]), float(state.upper[i]))
            for i in range(state.num_params)]
