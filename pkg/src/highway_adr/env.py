"""Deterministic lane-based highway micro-simulator.

The world is a straight 5-lane highway (lanes 0..4). One learning ego car and
8 scripted neighbor cars drive in the +x direction. Neighbors never change
lane and never change speed; only their initial velocities vary between
episodes. The ego starts 200 m from its destination line, in the middle of a
3x3 grid of neighbors occupying lanes 1..3 (lanes 0 and 4 start empty):

        lane 1      lane 2      lane 3
    ----[n +20]----[n +20]----[n +20]----   20 m ahead of ego
    ----[n -10]----[ EGO ]----[n -10]----   ego start line (x = 0)
    ----[n -20]----[n -20]----[n -20]----   20 m behind ego

Dynamics are discrete-time with a fixed step dt (1 s by default). Actions:
accelerate / decelerate at 3 m/s^2 for one step, instantaneous lane change
left / right, or no-op. An episode ends when the ego collides (same lane,
longitudinal gap under one car length), reaches the destination, or times
out. All transitions are pure functions of (state, action, dt): no hidden
randomness, so identical inputs always produce identical successors.

The per-step reward is a speed incentive plus terminal event bonuses:
    r = (v - v_max/2) / v_max  +  r_collision * 1[collided]
                               +  r_arrive    * 1[arrived]
A reward configuration is only accepted when
    r_arrive - r_collision >= 2 * distance / v_max,
which keeps "arrive slowly" worth more than "speed into a crash".
"""

from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

N_LANES = 5
N_VEHICLES = 9          # ego + 8 neighbors
OBS_SIZE = 22           # 5 one-hot lane + 9 velocities + 8 relative distances
DIST_CLIP = 100.0       # relative distances clipped to +-100 m before scaling

ACCEL_RATE = 3.0        # m/s^2, longitudinal accel/decel magnitude
CAR_LENGTH = 5.0        # m, collision threshold
DEFAULT_DT = 1.0        # s
DEFAULT_TIMEOUT = 60.0  # s, episode ends with no terminal bonus

# Fixed grid layout: (lane, position) per vehicle slot, ego first, then the
# 8 neighbors in row-major grid order (front row, ego row, rear row).
STANDARD_LAYOUT = (
    (2, 0.0),     # ego
    (1, 20.0),    # front row
    (2, 20.0),
    (3, 20.0),
    (1, -10.0),   # ego row, left/right of ego
    (3, -10.0),
    (1, -20.0),   # rear row
    (2, -20.0),
    (3, -20.0),
)


class Action(IntEnum):
    ACCELERATE = 0
    DECELERATE = 1
    LEFT = 2
    RIGHT = 3
    NOOP = 4


N_ACTIONS = len(Action)


class ScenarioError(ValueError):
    """Raised for scenario samples that violate the velocity clamp."""


class TerminalStateError(RuntimeError):
    """Raised when stepping a world that has already terminated."""


class RewardConfigError(ValueError):
    """Raised when a reward configuration fails the feasibility constraint."""


@dataclass(frozen=True)
class VehicleState:
    lane: int
    position: float
    velocity: float


@dataclass(frozen=True)
class ScenarioSample:
    """Initial velocities (ego first) plus the grid layout for one episode."""

    initial_velocities: tuple
    layout: tuple = STANDARD_LAYOUT


@dataclass(frozen=True)
class StepOutcome:
    collided: bool = False
    arrived: bool = False


@dataclass
class WorldState:
    vehicles: list        # VehicleState, ego first
    elapsed_time: float = 0.0
    terminal: str | None = None   # None | "collided" | "arrived" | "timeout"

    @property
    def ego(self) -> VehicleState:
        return self.vehicles[0]


@dataclass(frozen=True)
class RewardConfig:
    r_arrive: float = 20.0
    r_collision: float = -20.0
    v_max: float = 30.0
    distance: float = 200.0


@dataclass(frozen=True)
class EnvParams:
    """Simulation constants that are not part of the reward design."""

    dt: float = DEFAULT_DT
    car_length: float = CAR_LENGTH
    timeout: float = DEFAULT_TIMEOUT
    v_clamp: float = 30.0   # global clamp on any initial velocity


def validate_reward_config(cfg: RewardConfig):
    """Check r_arrive - r_collision >= 2*distance/v_max.

    Returns None when the configuration is feasible; raises RewardConfigError
    with both sides of the inequality otherwise.
    """
    if cfg.v_max <= 0:
        raise RewardConfigError("v_max must be positive, got %r" % cfg.v_max)
    if cfg.distance < 0:
        raise RewardConfigError("distance must be non-negative, got %r" % cfg.distance)
    margin = cfg.r_arrive - cfg.r_collision
    required = 2.0 * cfg.distance / cfg.v_max
    if margin < required:
        raise RewardConfigError(
            "infeasible reward design: r_arrive - r_collision = %.2f "
            "< %.2f = 2*distance/v_max" % (margin, required)
        )


def build_scenario(sample: ScenarioSample, params: EnvParams = EnvParams()) -> WorldState:
    """Place the 9 vehicles at their layout slots with the sampled velocities."""
    velocities = sample.initial_velocities
    if len(velocities) != N_VEHICLES or len(sample.layout) != N_VEHICLES:
        raise ScenarioError(
            "expected %d velocities and layout slots, got %d/%d"
            % (N_VEHICLES, len(velocities), len(sample.layout))
        )
    for i, v in enumerate(velocities):
        if not (0.0 <= v <= params.v_clamp):
            raise ScenarioError(
                "initial velocity %d = %r outside [0, %r]" % (i, v, params.v_clamp)
            )
    vehicles = [
        VehicleState(lane=lane, position=pos, velocity=float(v))
        for (lane, pos), v in zip(sample.layout, velocities)
    ]
    return WorldState(vehicles=vehicles, elapsed_time=0.0, terminal=None)


def collision(a: VehicleState, b: VehicleState, car_length: float = CAR_LENGTH) -> bool:
    """Two vehicles collide iff same lane and longitudinal gap < one car length."""
    return a.lane == b.lane and abs(a.position - b.position) < car_length


def step(state: WorldState, action, params: EnvParams = EnvParams(),
         reward_cfg: RewardConfig = RewardConfig()):
    """Advance the world one step under `action`; returns (state', StepOutcome).

    The ego's velocity/lane update applies first, then every vehicle advances
    by its (new) velocity * dt. Terminal causes are checked in the order
    collision, arrival, timeout; the first that holds wins.
    """
    if state.terminal is not None:
        raise TerminalStateError("cannot step a terminal state (%s)" % state.terminal)

    action = Action(action)
    ego = state.ego
    lane, velocity = ego.lane, ego.velocity
    if action == Action.ACCELERATE:
        velocity = min(velocity + ACCEL_RATE * params.dt, reward_cfg.v_max)
    elif action == Action.DECELERATE:
        velocity = max(velocity - ACCEL_RATE * params.dt, 0.0)
    elif action == Action.LEFT:
        lane = max(lane - 1, 0)
    elif action == Action.RIGHT:
        lane = min(lane + 1, N_LANES - 1)

    vehicles = [VehicleState(lane, ego.position + velocity * params.dt, velocity)]
    for v in state.vehicles[1:]:
        vehicles.append(replace(v, position=v.position + v.velocity * params.dt))

    elapsed = state.elapsed_time + params.dt
    new_ego = vehicles[0]

    # Only ego collisions end an episode; neighbors hold lane and speed, so
    # same-lane neighbors may pass through each other.
    collided = any(
        collision(new_ego, other, params.car_length) for other in vehicles[1:]
    )
    arrived = not collided and new_ego.position >= reward_cfg.distance
    terminal = None
    if collided:
        terminal = "collided"
    elif arrived:
        terminal = "arrived"
    elif elapsed >= params.timeout:
        terminal = "timeout"

    new_state = WorldState(vehicles=vehicles, elapsed_time=elapsed, terminal=terminal)
    return new_state, StepOutcome(collided=collided, arrived=arrived)


def observe(state: WorldState, v_max: float) -> np.ndarray:
    """22-component observation vector.

    Layout: ego-lane one-hot (5), all 9 velocities / v_max (9), then the 8
    neighbor longitudinal distances relative to the ego, clipped to +-100 m
    and divided by 100 (8).
    """
    obs = np.zeros(OBS_SIZE)
    ego = state.ego
    obs[ego.lane] = 1.0
    for i, v in enumerate(state.vehicles):
        obs[N_LANES + i] = v.velocity / v_max
    for j, v in enumerate(state.vehicles[1:]):
        rel = np.clip(v.position - ego.position, -DIST_CLIP, DIST_CLIP)
        obs[N_LANES + N_VEHICLES + j] = rel / DIST_CLIP
    return obs


def reward(state: WorldState, outcome: StepOutcome, cfg: RewardConfig) -> float:
    """Speed incentive plus terminal bonuses, evaluated on the post-step state."""
    r_v = (state.ego.velocity - cfg.v_max / 2.0) / cfg.v_max
    r_safety = 0.0
    if outcome.collided:
        r_safety += cfg.r_collision
    if outcome.arrived:
        r_safety += cfg.r_arrive
    return r_v + r_safety
