"""DQN training mechanics: epsilon-greedy exploration with linear decay,
uniform experience replay in a fixed-size ring buffer, squared-TD-error
updates against a periodically synchronized target network.
"""

from dataclasses import dataclass, field

import numpy as np

from . import qnet
from .env import N_ACTIONS


@dataclass
class Transition:
    obs: np.ndarray
    action: int
    reward: float
    next_obs: np.ndarray
    terminal: bool


class ReplayPool:
    """Ring buffer of transitions; once full, the oldest entry is overwritten."""

    def __init__(self, capacity: int = 2000):
        self.capacity = capacity
        self._items = []
        self._cursor = 0

    def __len__(self):
        return len(self._items)

    def push(self, t: Transition):
        if len(self._items) < self.capacity:
            self._items.append(t)
        else:
            self._items[self._cursor] = t
            self._cursor = (self._cursor + 1) % self.capacity

    def sample(self, batch_size: int, rng) -> list:
        idx = rng.integers(0, len(self._items), size=batch_size)
        return [self._items[i] for i in idx]

    def items(self):
        """Transitions in insertion order (oldest first)."""
        return self._items[self._cursor:] + self._items[:self._cursor]


@dataclass
class AgentConfig:
    gamma: float = 0.9
    learning_rate: float = 0.001
    epsilon_start: float = 0.9
    epsilon_min: float = 0.1
    epsilon_decay: float = 4e-6        # per environment step
    batch_size: int = 32
    sync_every: int = 5000             # target refresh period, in train iterations
    pool_capacity: int = 2000
    grad_clip: float | None = 1.0      # elementwise clip limit; None disables
    train_every: int = 1               # env steps between train iterations


def select_action(q_values: np.ndarray, epsilon: float, rng) -> int:
    """Uniform random action with probability epsilon, else argmax
    (ties broken by lowest index)."""
    if epsilon > 0.0 and rng.uniform() < epsilon:
        return int(rng.integers(0, len(q_values)))
    return int(np.argmax(q_values))


def decay_epsilon(epsilon: float, rate: float = 4e-6, floor: float = 0.1) -> float:
    """One linear decay step, clamped at the floor."""
    return max(floor, epsilon - rate)


def td_targets(batch: list, target_params: qnet.NetworkParams, gamma: float) -> np.ndarray:
    """R for terminal transitions, else R + gamma * max_a Q(next_obs; target)."""
    next_obs = np.stack([t.next_obs for t in batch])
    bootstrap = qnet.forward_batch(target_params, next_obs).max(axis=1)
    targets = np.array([t.reward for t in batch], dtype=float)
    nonterminal = np.array([not t.terminal for t in batch])
    targets[nonterminal] += gamma * bootstrap[nonterminal]
    return targets


def train_iteration(online: qnet.NetworkParams, target: qnet.NetworkParams,
                    pool: ReplayPool, cfg: AgentConfig, rng):
    """One uniform-replay gradient step; returns (online', loss).

    An underfull pool is signaled by returning the parameters unchanged with
    loss None (no training happened).
    """
    if len(pool) < cfg.batch_size:
        return online, None
    batch = pool.sample(cfg.batch_size, rng)
    targets = td_targets(batch, target, cfg.gamma)
    obs = np.stack([t.obs for t in batch])
    actions = np.array([t.action for t in batch])
    loss, grads = qnet.backward_batch(online, obs, actions, targets)
    if cfg.grad_clip is not None:
        grads = qnet.clip_gradients(grads, cfg.grad_clip)
    return qnet.sgd_step(online, grads, cfg.learning_rate), loss


def maybe_sync_target(online: qnet.NetworkParams, target: qnet.NetworkParams,
                      iteration: int, sync_every: int = 5000) -> qnet.NetworkParams:
    """Exact copy of the online parameters every sync_every iterations."""
    if iteration % sync_every == 0:
        return online.copy()
    return target


class DqnAgent:
    """Holds the online/target networks, replay pool, and exploration state."""

    def __init__(self, cfg: AgentConfig, seed: int):
        self.cfg = cfg
        self.online = qnet.init_network(seed)
        self.target = self.online.copy()
        self.pool = ReplayPool(cfg.pool_capacity)
        self.epsilon = cfg.epsilon_start
        self.env_steps = 0
        self.train_iterations = 0

    def act(self, obs: np.ndarray, rng, training: bool = True) -> int:
        eps = self.epsilon if training else 0.0
        return select_action(qnet.forward(self.online, obs), eps, rng)

    def greedy_policy(self):
        """Stateless greedy policy over a frozen copy of the online network."""
        params = self.online.copy()
        return lambda obs: int(np.argmax(qnet.forward(params, obs)))

    def observe(self, transition: Transition, rng):
        """Record one transition, decay epsilon, maybe train; returns loss or None."""
        self.pool.push(transition)
        self.env_steps += 1
        self.epsilon = decay_epsilon(
            self.epsilon, self.cfg.epsilon_decay, self.cfg.epsilon_min
        )
        loss = None
        if self.env_steps % self.cfg.train_every == 0:
            loss = self.train_step(rng)
        return loss

    def train_step(self, rng):
        new_online, loss = train_iteration(
            self.online, self.target, self.pool, self.cfg, rng
        )
        if loss is None:
            return None
        self.online = new_online
        self.train_iterations += 1
        self.target = maybe_sync_target(
            self.online, self.target, self.train_iterations, self.cfg.sync_every
        )
        return loss
