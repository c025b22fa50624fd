import itertools

import numpy as np
import pytest

from highway_adr.env import (Action, EnvParams, RewardConfig, RewardConfigError,
                             ScenarioError, ScenarioSample, StepOutcome,
                             TerminalStateError, VehicleState, build_scenario,
                             collision, observe, reward, step,
                             validate_reward_config)

ALL_TEN = ScenarioSample(tuple([10.0] * 9))


def far_away_sample(ego_v, neighbor_v=0.0):
    """Ego alone on the road: neighbors parked 1 km behind in other lanes."""
    layout = ((2, 0.0),) + tuple((lane, -1000.0) for lane in (0, 1, 3, 4, 0, 1, 3, 4))
    return ScenarioSample((ego_v,) + tuple([neighbor_v] * 8), layout=layout)


# ---------------------------------------------------------------- scenarios

def test_build_scenario_grid_positions():
    world = build_scenario(ALL_TEN)
    lanes = [v.lane for v in world.vehicles]
    positions = [v.position for v in world.vehicles]
    assert lanes == [2, 1, 2, 3, 1, 3, 1, 2, 3]
    assert positions == [0.0, 20.0, 20.0, 20.0, -10.0, -10.0, -20.0, -20.0, -20.0]
    assert all(v.velocity == 10.0 for v in world.vehicles)
    assert world.elapsed_time == 0.0 and world.terminal is None


def test_build_scenario_zero_ego_velocity():
    world = build_scenario(ScenarioSample((0.0,) + tuple([10.0] * 8)))
    assert world.ego.velocity == 0.0
    assert world.ego.position == 0.0


def test_build_scenario_rejects_clamp_violation():
    velocities = [10.0] * 9
    velocities[3] = 31.0
    with pytest.raises(ScenarioError):
        build_scenario(ScenarioSample(tuple(velocities)))
    velocities[3] = -0.5
    with pytest.raises(ScenarioError):
        build_scenario(ScenarioSample(tuple(velocities)))


def test_build_scenario_rejects_wrong_length():
    with pytest.raises(ScenarioError):
        build_scenario(ScenarioSample(tuple([10.0] * 8)))


# --------------------------------------------------------------------- step

def test_accelerate_updates_velocity_kinematically():
    world = build_scenario(far_away_sample(10.0))
    world, _ = step(world, Action.ACCELERATE)
    assert world.ego.velocity == 10.0 + 3.0 * 1.0   # v + a*dt


def test_noop_keeps_velocity():
    world = build_scenario(far_away_sample(10.0))
    world, _ = step(world, Action.NOOP)
    assert world.ego.velocity == 10.0


def test_velocity_clamps():
    world = build_scenario(far_away_sample(0.0))
    world, _ = step(world, Action.DECELERATE)
    assert world.ego.velocity == 0.0
    world = build_scenario(far_away_sample(29.0))
    world, _ = step(world, Action.ACCELERATE)
    assert world.ego.velocity == 30.0


def test_left_at_lane_zero_is_clamped_noop():
    layout = ((0, 0.0),) + tuple((lane, -1000.0) for lane in (1, 2, 3, 4, 1, 2, 3, 4))
    world = build_scenario(ScenarioSample(tuple([10.0] * 9), layout=layout))
    world, outcome = step(world, Action.LEFT)
    assert world.ego.lane == 0
    assert not outcome.collided


def test_right_at_lane_four_is_clamped_noop():
    layout = ((4, 0.0),) + tuple((lane, -1000.0) for lane in (0, 1, 2, 3, 0, 1, 2, 3))
    world = build_scenario(ScenarioSample(tuple([10.0] * 9), layout=layout))
    world, _ = step(world, Action.RIGHT)
    assert world.ego.lane == 4


def test_lane_changes_shift_by_one_and_keep_velocity():
    world = build_scenario(far_away_sample(12.0))
    left, _ = step(world, Action.LEFT)
    assert left.ego.lane == 1 and left.ego.velocity == 12.0
    right, _ = step(world, Action.RIGHT)
    assert right.ego.lane == 3 and right.ego.velocity == 12.0


def test_all_vehicles_advance_by_velocity_dt():
    world = build_scenario(ALL_TEN)
    world, _ = step(world, Action.NOOP)
    assert world.vehicles[1].position == 30.0   # 20 + 10*1
    assert world.vehicles[4].position == 0.0    # -10 + 10*1
    assert world.elapsed_time == 1.0


def test_stepping_terminal_state_raises():
    world = build_scenario(far_away_sample(30.0))
    while world.terminal is None:
        world, _ = step(world, Action.NOOP)
    with pytest.raises(TerminalStateError):
        step(world, Action.NOOP)


def test_arrival_at_distance():
    world = build_scenario(far_away_sample(30.0))
    for k in range(6):
        world, outcome = step(world, Action.NOOP)
        assert world.terminal is None
    world, outcome = step(world, Action.NOOP)   # 7 steps * 30 m = 210 >= 200
    assert world.terminal == "arrived" and outcome.arrived


def test_timeout_without_bonus_events():
    world = build_scenario(far_away_sample(1.0))
    for _ in range(59):
        world, outcome = step(world, Action.NOOP)
    assert world.terminal is None
    world, outcome = step(world, Action.NOOP)
    assert world.terminal == "timeout"
    assert not outcome.collided and not outcome.arrived


def test_rear_end_collision_detected():
    # Ego accelerating into the same-speed car ahead in its lane.
    world = build_scenario(ALL_TEN)
    world, o1 = step(world, Action.ACCELERATE)   # gap 20 -> 17
    world, o2 = step(world, Action.ACCELERATE)   # gap -> 11
    assert world.terminal is None
    world, o3 = step(world, Action.ACCELERATE)   # gap -> 2 < car length
    assert world.terminal == "collided" and o3.collided


def test_lane_change_into_occupied_cell_collides():
    layout = ((2, 0.0), (1, 2.0)) + tuple((lane, -1000.0) for lane in (3, 4, 0, 3, 4, 0, 3))
    world = build_scenario(ScenarioSample(tuple([10.0] * 9), layout=layout))
    # Both cars advance 10 m during the change; the 2 m gap now shares lane 1.
    world, outcome = step(world, Action.LEFT)
    assert outcome.collided and world.terminal == "collided"


def test_collision_takes_priority_over_arrival():
    layout = ((2, 195.0), (2, 207.0)) + tuple((lane, -1000.0) for lane in (0, 1, 3, 4, 0, 1, 3))
    velocities = (10.0, 0.0) + tuple([0.0] * 7)
    world = build_scenario(ScenarioSample(velocities, layout=layout))
    world, outcome = step(world, Action.NOOP)   # ego at 205: past 200 but 2 m from parked car
    assert world.terminal == "collided"
    assert outcome.collided and not outcome.arrived


# ------------------------------------------------------------- observation

def test_observation_layout_at_start():
    world = build_scenario(ALL_TEN)
    obs = observe(world, 30.0)
    assert obs.shape == (22,)
    assert list(obs[:5]) == [0.0, 0.0, 1.0, 0.0, 0.0]          # ego in lane 2
    assert np.allclose(obs[5:14], 10.0 / 30.0)                 # all velocities
    assert obs[14] == pytest.approx(20.0 / 100.0)              # front-row neighbor
    assert list(obs[14:17]) == pytest.approx([0.2, 0.2, 0.2])
    assert list(obs[17:19]) == pytest.approx([-0.1, -0.1])
    assert list(obs[19:22]) == pytest.approx([-0.2, -0.2, -0.2])


def test_observation_velocity_normalization():
    world = build_scenario(far_away_sample(30.0))
    obs = observe(world, 30.0)
    assert obs[5] == 1.0


def test_observation_distance_clipping():
    layout = ((2, 0.0), (2, 500.0)) + tuple((lane, -400.0) for lane in (0, 1, 3, 4, 0, 1, 3))
    world = build_scenario(ScenarioSample(tuple([10.0] * 9), layout=layout))
    obs = observe(world, 30.0)
    assert obs[14] == 1.0
    assert np.all(obs[15:] == -1.0)


def test_observation_blocks_within_ranges():
    rng = np.random.default_rng(0)
    for _ in range(50):
        velocities = tuple(rng.uniform(0, 30, size=9))
        world = build_scenario(ScenarioSample(velocities))
        for _ in range(rng.integers(0, 5)):
            if world.terminal is not None:
                break
            world, _ = step(world, int(rng.integers(0, 5)))
        obs = observe(world, 30.0)
        assert obs[:5].sum() == 1.0 and set(obs[:5]) <= {0.0, 1.0}
        assert np.all(obs[5:14] >= 0.0) and np.all(obs[5:14] <= 1.0)
        assert np.all(obs[14:] >= -1.0) and np.all(obs[14:] <= 1.0)


# ------------------------------------------------------------------- reward

def test_reward_at_vmax_without_event():
    world = build_scenario(far_away_sample(30.0))
    assert reward(world, StepOutcome(), RewardConfig()) == 0.5


def test_reward_at_half_vmax_is_zero():
    world = build_scenario(far_away_sample(15.0))
    assert reward(world, StepOutcome(), RewardConfig()) == 0.0


def test_reward_collision_at_vmax():
    world = build_scenario(far_away_sample(30.0))
    r = reward(world, StepOutcome(collided=True), RewardConfig(r_collision=-20.0))
    assert r == pytest.approx(-19.5)


def test_reward_arrival_bonus():
    world = build_scenario(far_away_sample(15.0))
    r = reward(world, StepOutcome(arrived=True), RewardConfig(r_arrive=20.0))
    assert r == pytest.approx(20.0)


def test_reward_bounds_property():
    cfg = RewardConfig()
    rng = np.random.default_rng(1)
    for _ in range(200):
        world = build_scenario(far_away_sample(float(rng.uniform(0, 30))))
        r = reward(world, StepOutcome(), cfg)
        assert -0.5 <= r <= 0.5
        r_col = reward(world, StepOutcome(collided=True), cfg)
        assert -0.5 + cfg.r_collision <= r_col <= 0.5 + cfg.r_collision
        r_arr = reward(world, StepOutcome(arrived=True), cfg)
        assert -0.5 + cfg.r_arrive <= r_arr <= 0.5 + cfg.r_arrive


# ------------------------------------------------------- reward feasibility

def test_validator_accepts_default_design():
    validate_reward_config(RewardConfig(r_arrive=20.0, r_collision=-20.0,
                                        v_max=30.0, distance=200.0))


def test_validator_rejects_weak_margin():
    cfg = RewardConfig(r_arrive=5.0, r_collision=0.0, v_max=30.0, distance=200.0)
    with pytest.raises(RewardConfigError) as exc:
        validate_reward_config(cfg)
    message = str(exc.value)
    required = 2.0 * 200.0 / 30.0
    assert ("%.2f" % required) in message      # 13.33
    assert ("%.2f" % 5.0) in message           # the failing margin


def test_validator_degenerate_distance():
    validate_reward_config(RewardConfig(r_arrive=1.0, r_collision=1.0,
                                        v_max=10.0, distance=0.0))


def test_validator_rejects_nonpositive_vmax():
    with pytest.raises(RewardConfigError):
        validate_reward_config(RewardConfig(v_max=0.0))


# -------------------------------------------------------------- invariants

def test_position_monotonicity():
    rng = np.random.default_rng(2)
    world = build_scenario(ScenarioSample(tuple(rng.uniform(0, 30, size=9))))
    while world.terminal is None:
        before = [v.position for v in world.vehicles]
        world, _ = step(world, int(rng.integers(0, 5)))
        after = [v.position for v in world.vehicles]
        assert all(b2 >= b1 for b1, b2 in zip(before, after))


def test_collision_symmetry_and_definition():
    rng = np.random.default_rng(3)
    for _ in range(500):
        a = VehicleState(int(rng.integers(0, 5)), float(rng.uniform(-30, 30)),
                         float(rng.uniform(0, 30)))
        b = VehicleState(int(rng.integers(0, 5)), float(rng.uniform(-30, 30)),
                         float(rng.uniform(0, 30)))
        expected = a.lane == b.lane and abs(a.position - b.position) < 5.0
        assert collision(a, b) == collision(b, a) == expected


def test_step_determinism():
    world = build_scenario(ALL_TEN)
    a1, o1 = step(world, Action.ACCELERATE)
    a2, o2 = step(world, Action.ACCELERATE)
    assert a1 == a2 and o1 == o2


def _profile_reward(profile, cfg):
    """Direct evaluation of the reward formula over a velocity profile,
    truncated at the first arrival; returns (total, arrived)."""
    total, pos = 0.0, 0.0
    for v in profile:
        pos += v
        total += (v - cfg.v_max / 2.0) / cfg.v_max
        if pos >= cfg.distance:
            return total + cfg.r_arrive, True
    return total, False


def test_feasible_design_orders_arrival_above_vmax_crash():
    # Brute force at small scale: within the duration bound 2d/v_max, every
    # arriving speed profile beats every crash-at-the-end ride at v_max.
    cfg = RewardConfig(r_arrive=2.0, r_collision=-2.0, v_max=10.0, distance=20.0)
    validate_reward_config(cfg)   # margin exactly 2d/v_max: the tight case
    horizon = int(2.0 * cfg.distance / cfg.v_max)
    grid = [0.0, 2.5, 5.0, 7.5, 10.0]

    arriving = []
    for profile in itertools.product(grid, repeat=horizon):
        total, arrived = _profile_reward(profile, cfg)
        if arrived:
            arriving.append(total)
    crashing = [k * 0.5 + cfg.r_collision for k in range(1, horizon + 1)]
    assert arriving and crashing
    assert min(arriving) > max(crashing)


def test_infeasible_design_breaks_the_ordering():
    # Sanity check that the brute-force oracle has teeth: with a margin far
    # below 2d/v_max, a v_max crash can outscore a slow arrival.
    cfg = RewardConfig(r_arrive=0.5, r_collision=0.0, v_max=10.0, distance=20.0)
    with pytest.raises(RewardConfigError):
        validate_reward_config(cfg)
    horizon = int(2.0 * cfg.distance / cfg.v_max)
    grid = [0.0, 2.5, 5.0, 7.5, 10.0]
    arriving = [r for p in itertools.product(grid, repeat=horizon)
                for r, ok in [_profile_reward(p, cfg)] if ok]
    crashing = [k * 0.5 + cfg.r_collision for k in range(1, horizon + 1)]
    assert min(arriving) <= max(crashing)
