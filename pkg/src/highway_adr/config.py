"""Run configuration: a strict JSON schema over the simulator, agent, and
generator hyperparameters, with every default supplied so an empty document
is a valid config. Unknown keys are rejected rather than ignored, and the
reward design is validated at load time.
"""

import dataclasses
import json

from .agent import AgentConfig
from .env import EnvParams, RewardConfig, validate_reward_config
from .generator import GeneratorConfig


class ConfigError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class TrainingOptions:
    train_on_boundary: bool = True      # push/learn from boundary rollouts too
    snapshot_milestones: dict = dataclasses.field(
        default_factory=lambda: {"easy": 0.0, "mid": 0.25, "hard": 1.0}
    )


@dataclasses.dataclass(frozen=True)
class GridOptions:
    episodes_per_cell: int = 100        # greedy evaluation episodes per grid cell
    fixed_train_episodes: int = 4000    # training length for fixed-env agents


@dataclasses.dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    total_episodes: int = 2000
    reward: RewardConfig = RewardConfig()
    env: EnvParams = EnvParams()
    agent: AgentConfig = AgentConfig()
    generator: GeneratorConfig = GeneratorConfig()
    training: TrainingOptions = TrainingOptions()
    grid: GridOptions = GridOptions()


_SECTIONS = {
    "reward": RewardConfig,
    "env": EnvParams,
    "agent": AgentConfig,
    "generator": GeneratorConfig,
    "training": TrainingOptions,
    "grid": GridOptions,
}
_TOP_LEVEL_SCALARS = ("seed", "total_episodes")


def _build_section(cls, data, where):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError("unknown key(s) in %r: %s" % (where, ", ".join(sorted(unknown))))
    return cls(**data)


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config document must be a JSON object")
    unknown = set(data) - set(_SECTIONS) - set(_TOP_LEVEL_SCALARS)
    if unknown:
        raise ConfigError("unknown top-level key(s): %s" % ", ".join(sorted(unknown)))
    kwargs = {}
    for key in _TOP_LEVEL_SCALARS:
        if key in data:
            kwargs[key] = data[key]
    for name, cls in _SECTIONS.items():
        section = data.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError("section %r must be an object" % name)
        kwargs[name] = _build_section(cls, section, name)
    cfg = RunConfig(**kwargs)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig):
    validate_reward_config(cfg.reward)
    if cfg.total_episodes < 0:
        raise ConfigError("total_episodes must be >= 0")
    if not (0.0 <= cfg.generator.boundary_probability <= 1.0):
        raise ConfigError("boundary_probability must lie in [0, 1]")
    if cfg.generator.performance_metric not in ("episode_return", "step_reward"):
        raise ConfigError("performance_metric must be 'episode_return' or 'step_reward'")
    if not (cfg.generator.min_value <= cfg.generator.initial_lower
            <= cfg.generator.initial_upper <= cfg.generator.max_value):
        raise ConfigError("initial bounds must satisfy min <= lower <= upper <= max")
    if cfg.generator.decrease_threshold >= cfg.generator.increase_threshold:
        raise ConfigError("decrease_threshold must be below increase_threshold")
    if cfg.agent.epsilon_min > cfg.agent.epsilon_start:
        raise ConfigError("epsilon_min must not exceed epsilon_start")
    for tag, frac in cfg.training.snapshot_milestones.items():
        if not (0.0 <= frac <= 1.0):
            raise ConfigError("snapshot milestone %r fraction %r outside [0, 1]" % (tag, frac))


def load_config(path) -> RunConfig:
    with open(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError("config %s is not valid JSON: %s" % (path, e))
    return config_from_dict(data)


def config_to_dict(cfg: RunConfig) -> dict:
    out = {"seed": cfg.seed, "total_episodes": cfg.total_episodes}
    for name in _SECTIONS:
        out[name] = dataclasses.asdict(getattr(cfg, name))
    return out


def save_resolved_config(cfg: RunConfig, path):
    """Write the fully resolved config (all defaults applied) next to the outputs."""
    with open(path, "w") as f:
        json.dump(config_to_dict(cfg), f, indent=2, sort_keys=True)
        f.write("\n")
