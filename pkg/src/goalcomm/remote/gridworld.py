"""Remote MDP: a guide that sees the grid steers a blind agent over a noisy channel."""

from __future__ import annotations

import logging
import sys
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import networkx as nx
import numpy as np
import tomli_w

from goalcomm.channels.discrete import (
    DiscreteChannel,
    message_to_symbols,
    qsc_transmit,
    symbols_to_message,
)
from goalcomm.constants import EPISODE_STEP_CAP, STEP_REWARD, TARGET_REWARD
from goalcomm.output import Provenance, write_table
from goalcomm.sim.rng import RngStream

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

Cell = tuple[int, int]

# y grows downwards
ACTIONS: tuple[str, ...] = ("N", "S", "E", "W")
_MOVES: tuple[Cell, ...] = ((0, -1), (0, 1), (1, 0), (-1, 0))


@dataclass(frozen=True)
class GridWorld:
    """Rectangular grid with obstacles and one absorbing target.

    States are cell indices ``y * width + x``. Every step costs
    ``step_reward``; the step that enters the target additionally earns
    ``target_reward``, so an episode finished in ``n`` steps returns
    ``target_reward - n`` with the default unit step cost.
    """

    width: int
    height: int
    target: Cell
    obstacles: frozenset[Cell] = frozenset()
    starts: tuple[Cell, ...] = ()
    target_reward: float = TARGET_REWARD
    step_reward: float = STEP_REWARD

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"Grid must be at least 1x1, got {self.width}x{self.height}")
        if self.target_reward <= 0:
            raise ValueError(f"Target reward must be positive, got {self.target_reward}")
        if not self._inside(self.target) or self.target in self.obstacles:
            raise ValueError(f"Target {self.target} is not a free cell")
        for cell in self.starts:
            if not self._inside(cell) or cell in self.obstacles:
                raise ValueError(f"Start {cell} is not a free cell")
        stranded = [c for c in self.free_cells if self.index(c) not in self._distances]
        if stranded:
            raise ValueError(f"Target {self.target} is unreachable from {stranded}")

    def _inside(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    @property
    def n_states(self) -> int:
        return self.width * self.height

    @property
    def free_cells(self) -> list[Cell]:
        return [
            (x, y)
            for y in range(self.height)
            for x in range(self.width)
            if (x, y) not in self.obstacles
        ]

    def index(self, cell: Cell) -> int:
        return cell[1] * self.width + cell[0]

    def cell(self, state: int) -> Cell:
        y, x = divmod(state, self.width)
        return x, y

    @property
    def target_state(self) -> int:
        return self.index(self.target)

    def is_terminal(self, state: int) -> bool:
        return state == self.target_state

    @cached_property
    def _moves(self) -> nx.Graph:
        graph = nx.Graph()
        free = self.free_cells
        graph.add_nodes_from(self.index(c) for c in free)
        for x, y in free:
            for dx, dy in _MOVES:
                neighbour = (x + dx, y + dy)
                if self._inside(neighbour) and neighbour not in self.obstacles:
                    graph.add_edge(self.index((x, y)), self.index(neighbour))
        return graph

    @cached_property
    def _distances(self) -> dict[int, int]:
        return dict(nx.single_source_shortest_path_length(self._moves, self.target_state))

    def distance(self, state: int) -> int:
        """Fewest steps from ``state`` to the target."""
        return self._distances[state]

    @cached_property
    def start_states(self) -> list[int]:
        if self.starts:
            return [self.index(c) for c in self.starts]
        return [self.index(c) for c in self.free_cells if c != self.target]

    def sample_start(self, rng: RngStream) -> int:
        states = self.start_states
        return states[int(rng.integers(len(states)))]

    def step(self, state: int, action: int) -> tuple[int, float, bool]:
        """Apply ``action``; moves into walls or obstacles leave the agent in place."""
        if not 0 <= action < len(ACTIONS):
            raise ValueError(f"Action must lie in [0, {len(ACTIONS)}), got {action}")
        if self.is_terminal(state):
            raise ValueError(f"State {state} is terminal")
        x, y = self.cell(state)
        dx, dy = _MOVES[action]
        moved = (x + dx, y + dy)
        if self._inside(moved) and moved not in self.obstacles:
            state = self.index(moved)
        if self.is_terminal(state):
            return state, self.step_reward + self.target_reward, True
        return state, self.step_reward, False


@dataclass(frozen=True)
class MessagePolicy:
    """Guide map (state -> message) and agent map (received message -> action)."""

    guide: tuple[int, ...]
    agent: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.agent:
            raise ValueError("Agent map needs at least one message")
        if any(not 0 <= m < self.messages for m in self.guide):
            raise ValueError(f"Guide messages must lie in [0, {self.messages})")
        if any(not 0 <= a < len(ACTIONS) for a in self.agent):
            raise ValueError(f"Agent actions must lie in [0, {len(ACTIONS)})")

    @property
    def messages(self) -> int:
        return len(self.agent)

    def dump(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        data = {
            "policy": {
                "messages": self.messages,
                "actions": list(ACTIONS),
                "guide": list(self.guide),
                "agent": list(self.agent),
            }
        }
        with open(path, "wb") as f:
            tomli_w.dump(data, f)
        logger.info("Saved message policy to %s", path)
        return path

    @classmethod
    def load(cls, path: Path) -> MessagePolicy:
        with open(path, "rb") as f:
            data = tomllib.load(f)["policy"]
        return cls(guide=tuple(data["guide"]), agent=tuple(data["agent"]))


def greedy_policy(env: GridWorld, messages: int = len(ACTIONS)) -> MessagePolicy:
    """Guide names the first action that shortens the distance; agent obeys literally."""
    if messages < len(ACTIONS):
        raise ValueError(f"A literal guide needs at least {len(ACTIONS)} messages")
    guide = []
    for state in range(env.n_states):
        choice = 0
        if state in env._distances and not env.is_terminal(state):
            for action in range(len(ACTIONS)):
                nxt, _, _ = env.step(state, action)
                if env.distance(nxt) < env.distance(state):
                    choice = action
                    break
        guide.append(choice)
    agent = tuple(m % len(ACTIONS) for m in range(messages))
    return MessagePolicy(guide=tuple(guide), agent=agent)


@dataclass
class GuidanceStats:
    """Per-episode outcomes of one evaluation."""

    starts: list[int] = field(default_factory=list)
    steps: list[int] = field(default_factory=list)
    returns: list[float] = field(default_factory=list)
    successes: list[bool] = field(default_factory=list)

    @property
    def episodes(self) -> int:
        return len(self.steps)

    @property
    def mean_return(self) -> float:
        return float(np.mean(self.returns))

    @property
    def mean_steps(self) -> float:
        return float(np.mean(self.steps))

    @property
    def success_rate(self) -> float:
        return float(np.mean(self.successes))

    def add(self, start: int, steps: int, ret: float, success: bool) -> None:
        self.starts.append(start)
        self.steps.append(steps)
        self.returns.append(ret)
        self.successes.append(success)

    def rows(self) -> list[tuple[int, int, int, float, int]]:
        return [
            (i, s, n, r, int(ok))
            for i, (s, n, r, ok) in enumerate(
                zip(self.starts, self.steps, self.returns, self.successes)
            )
        ]

    def write_csv(self, path: Path, provenance: Provenance | None = None) -> Path:
        header = ["episode", "start", "steps", "return", "success"]
        return write_table(path, header, self.rows(), provenance)


def _guided_action(
    policy: MessagePolicy, state: int, channel: DiscreteChannel, rng: RngStream
) -> int:
    sent = message_to_symbols(policy.guide[state], channel.q, channel.uses)
    received = symbols_to_message(qsc_transmit(channel, sent, rng), channel.q)
    return policy.agent[received % policy.messages]


def evaluate_guidance(
    env: GridWorld,
    policy: MessagePolicy,
    channel: DiscreteChannel,
    episodes: int,
    rng: RngStream,
    step_cap: int = EPISODE_STEP_CAP,
) -> GuidanceStats:
    """Run closed-loop episodes: the guide re-observes the true state every step.

    Episode ``i`` draws from its own child stream, so evaluations that differ
    only in the channel or the policy start from the same cells and share
    their channel noise.
    """
    if episodes < 1:
        raise ValueError(f"Need at least one episode, got {episodes}")
    if policy.messages > channel.message_capacity:
        raise ValueError(
            f"{policy.messages} messages do not fit in {channel.uses} symbols of base {channel.q}"
        )
    stats = GuidanceStats()
    for i in range(episodes):
        episode_rng = rng.spawn(f"episode{i}")
        start = state = env.sample_start(episode_rng)
        total = 0.0
        steps = 0
        done = env.is_terminal(state)
        while not done and steps < step_cap:
            action = _guided_action(policy, state, channel, episode_rng)
            state, reward, done = env.step(state, action)
            total += reward
            steps += 1
        stats.add(start, steps, total, done)
    logger.debug(
        "Guidance over eps=%.3f: mean steps %.2f, success %.3f",
        channel.epsilon,
        stats.mean_steps,
        stats.success_rate,
    )
    return stats


def random_walk_stats(
    env: GridWorld, episodes: int, rng: RngStream, step_cap: int = EPISODE_STEP_CAP
) -> GuidanceStats:
    """Baseline with uniformly random actions and the same per-episode starts."""
    stats = GuidanceStats()
    for i in range(episodes):
        episode_rng = rng.spawn(f"episode{i}")
        start = state = env.sample_start(episode_rng)
        total = 0.0
        steps = 0
        done = env.is_terminal(state)
        while not done and steps < step_cap:
            state, reward, done = env.step(state, int(episode_rng.integers(len(ACTIONS))))
            total += reward
            steps += 1
        stats.add(start, steps, total, done)
    return stats
