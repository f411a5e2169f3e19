"""Replay-buffer Q-learning agent and its training loop."""
from __future__ import annotations

import dataclasses
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
import pandas as pd

from invlab.dqn.network import Adam, Network, build_network, clip_by_global_norm, forward, loss_and_grad


@dataclass(frozen=True)
class AgentConfig:
    state_size: int
    action_size: int
    memory_capacity: int = 5000
    gamma: float = 0.9
    epsilon_start: float = 1.0
    epsilon_min: float = 0.01
    epsilon_decay: float = 0.995
    learning_rate: float = 0.001
    hidden_sizes: tuple[int, ...] = (64, 64)
    dropout_rate: float = 0.1
    grad_clip_norm: float = 1.0
    episodes: int = 100
    batch_size: int = 10

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if not 0 < self.epsilon_min <= self.epsilon_start <= 1:
            raise ValueError("need 0 < epsilon_min <= epsilon_start <= 1")
        if not 0 < self.epsilon_decay < 1:
            raise ValueError("epsilon_decay must lie in (0, 1)")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.learning_rate <= 0 or self.grad_clip_norm <= 0:
            raise ValueError("learning_rate and grad_clip_norm must be positive")
        if min(self.state_size, self.action_size, self.memory_capacity, self.batch_size) < 1:
            raise ValueError("sizes, memory_capacity and batch_size must be >= 1")
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["hidden_sizes"] = list(self.hidden_sizes)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "AgentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown agent config field(s): {sorted(unknown)}")
        return cls(**data)


PRESET_OVERRIDES = {
    "lost_sales": {},
    "dual_sourcing": {},
    "multi_echelon": {"gamma": 0.95, "hidden_sizes": (128, 128)},
}
TUNED_OVERRIDES = {
    "lost_sales": {"epsilon_decay": 0.885, "learning_rate": 0.005, "hidden_sizes": (64, 128), "dropout_rate": 0.3},
    "dual_sourcing": {"epsilon_decay": 0.885, "learning_rate": 0.005, "hidden_sizes": (64, 128), "dropout_rate": 0.3},
    "multi_echelon": {"epsilon_decay": 0.885, "learning_rate": 0.005, "hidden_sizes": (128, 128), "dropout_rate": 0.3},
}


def preset_config(kind: str, state_size: int, action_size: int, tuned: bool = False, **overrides) -> AgentConfig:
    """Default (or tuned) agent settings for an environment kind."""
    if kind not in PRESET_OVERRIDES:
        raise ValueError(f"unknown preset {kind!r}")
    params = dict(PRESET_OVERRIDES[kind])
    if tuned:
        params.update(TUNED_OVERRIDES[kind])
    params.update(overrides)
    return AgentConfig(state_size=state_size, action_size=action_size, **params)


def _seed_sequence(seed) -> np.random.SeedSequence:
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


class Transition(NamedTuple):
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool


@dataclass
class TrainLog:
    total_rewards: list[float] = field(default_factory=list)
    epsilons: list[float] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "episode": np.arange(1, len(self.total_rewards) + 1),
            "total_reward": self.total_rewards,
            "epsilon": self.epsilons,
        })

    def to_csv(self, path: str | Path) -> None:
        self.to_frame().to_csv(path, index=False)


class Agent:
    def __init__(self, config: AgentConfig, seed=0):
        self.config = config
        init_seq, self._dropout_seq = _seed_sequence(seed).spawn(2)
        self.network: Network = build_network(
            config.state_size, config.action_size, config.hidden_sizes, config.dropout_rate, seed=init_seq
        )
        self.dropout_rng = np.random.default_rng(self._dropout_seq)
        self.optimizer = Adam(self.network.params(), config.learning_rate)
        self.memory: deque[Transition] = deque(maxlen=config.memory_capacity)
        self.replay_count = 0
        self.last_batch: list[Transition] = []
        self.last_targets: np.ndarray | None = None
        self.last_grad_norm: float | None = None
        self.last_clipped_norm: float | None = None

    @property
    def epsilon(self) -> float:
        c = self.config
        # closed form of the per-replay multiplicative decay, floored at epsilon_min
        return max(c.epsilon_min, c.epsilon_start * c.epsilon_decay ** self.replay_count)

    def q_values(self, state) -> np.ndarray:
        return forward(self.network, state, training=False)

    def act(self, state, rng: np.random.Generator) -> int:
        """Epsilon-greedy; greedy ties go to the lowest action index."""
        if rng.random() < self.epsilon:
            return int(rng.integers(self.config.action_size))
        return int(np.argmax(self.q_values(state)))

    def remember(self, state, action, reward, next_state, done) -> None:
        self.memory.append(Transition(
            np.array(state, dtype=float), int(action), float(reward), np.array(next_state, dtype=float), bool(done)
        ))

    def replay(self, batch_size: int, rng: np.random.Generator) -> float:
        """One Adam step on a minibatch drawn without replacement; returns the loss."""
        if len(self.memory) <= batch_size:
            raise ValueError(f"replay needs more than {batch_size} stored transitions, have {len(self.memory)}")
        idx = rng.choice(len(self.memory), size=batch_size, replace=False)
        batch = [self.memory[i] for i in idx]
        states = np.array([t.state for t in batch])
        next_states = np.array([t.next_state for t in batch])
        actions = np.array([t.action for t in batch])
        rewards = np.array([t.reward for t in batch])
        done = np.array([t.done for t in batch])

        targets = forward(self.network, states, training=False)
        next_q = forward(self.network, next_states, training=False).max(axis=1)
        bootstrap = rewards + self.config.gamma * next_q
        targets[np.arange(batch_size), actions] = np.where(done, rewards, bootstrap)

        loss, grads = loss_and_grad(self.network, states, targets, training=True, rng=self.dropout_rng)
        grads, norm = clip_by_global_norm(grads, self.config.grad_clip_norm)
        self.optimizer.step(self.network.params(), grads)

        self.last_batch = batch
        self.last_targets = targets
        self.last_grad_norm = norm
        self.last_clipped_norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
        self.replay_count += 1
        return loss


def train(env, config: AgentConfig, seed=0, agent: Agent | None = None) -> tuple[Agent, TrainLog]:
    """Run ``config.episodes`` full passes over the environment.

    Every step is act, step, remember, and then a replay once the buffer holds
    more than ``batch_size`` transitions.  An episode ends at the last row of
    the frame, in wraparound mode too.
    """
    if env.n_actions != config.action_size:
        raise ValueError(f"environment has {env.n_actions} actions, config expects {config.action_size}")
    agent_seq, policy_seq = _seed_sequence(seed).spawn(2)
    agent = agent or Agent(config, seed=agent_seq)
    rng = np.random.default_rng(policy_seq)
    log = TrainLog()
    for _ in range(config.episodes):
        state = env.reset()
        total = 0.0
        losses = []
        while True:
            action = agent.act(state, rng)
            next_state, reward, done, _info = env.step(action)
            agent.remember(state, action, reward, next_state, done)
            total += reward
            state = next_state
            if len(agent.memory) > config.batch_size:
                losses.append(agent.replay(config.batch_size, rng))
            # wraparound environments never report done; one pass is one episode
            if done or env.cursor == 0:
                break
        log.total_rewards.append(total)
        log.epsilons.append(agent.epsilon)
        log.losses.append(float(np.mean(losses)) if losses else float("nan"))
    return agent, log
