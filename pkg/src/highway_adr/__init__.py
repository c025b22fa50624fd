"""Curriculum-randomized highway driving: an adaptive domain-randomization
generator that surfaces progressively harder traffic scenarios, a from-scratch
DQN agent trained to survive them, and a cross-environment evaluation grid.
"""

from .agent import AgentConfig, DqnAgent, ReplayPool, Transition
from .config import RunConfig, config_from_dict, load_config
from .env import (Action, EnvParams, RewardConfig, ScenarioSample, WorldState,
                  build_scenario, observe, reward, step, validate_reward_config)
from .generator import (BoundaryId, DistributionState, GeneratorConfig,
                        UpdateEvent, boundary_sample, episode_sample,
                        maybe_update, record_performance, snapshot_bounds)
from .evaluation import (EnvSnapshot, GridCell, build_grid, evaluate,
                         train_fixed)
from .training import (EpisodeResult, TrainingRun, run_episode, run_training,
                       take_snapshot)

__version__ = "0.1.0"
