"""Alternating tabular Q-learning of the guide and agent maps."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from goalcomm.channels.discrete import (
    DiscreteChannel,
    message_to_symbols,
    qsc_transmit,
    symbols_to_message,
)
from goalcomm.constants import DEFAULT_MESSAGES
from goalcomm.output import Provenance, write_table
from goalcomm.remote.gridworld import (
    ACTIONS,
    GridWorld,
    GuidanceStats,
    MessagePolicy,
    evaluate_guidance,
)
from goalcomm.sim.rng import RngStream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QLearningParams:
    rounds: int = 6
    episodes: int = 300  # per phase
    alpha: float = 0.2
    gamma: float = 0.95
    epsilon: float = 0.2
    step_cap: int = 50
    eval_episodes: int = 200
    messages: int = DEFAULT_MESSAGES

    def __post_init__(self) -> None:
        if self.rounds < 1 or self.episodes < 1 or self.eval_episodes < 1:
            raise ValueError("rounds, episodes and eval_episodes must be >= 1")
        if not 0 < self.alpha <= 1 or not 0 <= self.gamma <= 1:
            raise ValueError(
                f"Need 0 < alpha <= 1 and 0 <= gamma <= 1, got {self.alpha}, {self.gamma}"
            )
        if not 0 <= self.epsilon <= 1:
            raise ValueError(f"Exploration rate must lie in [0, 1], got {self.epsilon}")
        if self.messages < 1:
            raise ValueError(f"Need at least one message, got {self.messages}")


@dataclass(frozen=True)
class CurvePoint:
    round: int
    phase: str
    mean_return: float
    mean_steps: float
    success_rate: float


@dataclass
class JointLearningResult:
    policy: MessagePolicy
    best: GuidanceStats
    curve: list[CurvePoint] = field(default_factory=list)

    def write_curve(self, path: Path, provenance: Provenance | None = None) -> Path:
        header = ["round", "phase", "mean_return", "mean_steps", "success_rate"]
        rows = [
            (p.round, p.phase, p.mean_return, p.mean_steps, p.success_rate) for p in self.curve
        ]
        return write_table(path, header, rows, provenance)


def _epsilon_greedy(values: np.ndarray, epsilon: float, rng: RngStream) -> int:
    if rng.random() < epsilon:
        return int(rng.integers(len(values)))
    return int(np.argmax(values))


def _receive(message: int, channel: DiscreteChannel, messages: int, rng: RngStream) -> int:
    sent = message_to_symbols(message, channel.q, channel.uses)
    return symbols_to_message(qsc_transmit(channel, sent, rng), channel.q) % messages


def _train_guide(
    env: GridWorld,
    channel: DiscreteChannel,
    agent: tuple[int, ...],
    q: np.ndarray,
    params: QLearningParams,
    rng: RngStream,
) -> None:
    for _ in range(params.episodes):
        state = env.sample_start(rng)
        for _ in range(params.step_cap):
            message = _epsilon_greedy(q[state], params.epsilon, rng)
            action = agent[_receive(message, channel, params.messages, rng)]
            nxt, reward, done = env.step(state, action)
            target = reward if done else reward + params.gamma * q[nxt].max()
            q[state, message] += params.alpha * (target - q[state, message])
            state = nxt
            if done:
                break


def _train_agent(
    env: GridWorld,
    channel: DiscreteChannel,
    guide: tuple[int, ...],
    q: np.ndarray,
    params: QLearningParams,
    rng: RngStream,
) -> None:
    for _ in range(params.episodes):
        state = env.sample_start(rng)
        heard = _receive(guide[state], channel, params.messages, rng)
        for _ in range(params.step_cap):
            action = _epsilon_greedy(q[heard], params.epsilon, rng)
            state, reward, done = env.step(state, action)
            if done:
                q[heard, action] += params.alpha * (reward - q[heard, action])
                break
            nxt = _receive(guide[state], channel, params.messages, rng)
            target = reward + params.gamma * q[nxt].max()
            q[heard, action] += params.alpha * (target - q[heard, action])
            heard = nxt


def q_learn_joint(
    env: GridWorld,
    channel: DiscreteChannel,
    params: QLearningParams,
    rng: RngStream,
) -> JointLearningResult:
    """Alternate guide and agent phases, keeping the best joint policy seen.

    Each phase fixes one map and learns the other with tabular Q-learning.
    The agent starts by reading message ``m`` as action ``m mod 4``. After
    every phase the greedy joint policy is scored on one fixed evaluation
    stream, so scores across phases are paired.
    """
    if params.messages > channel.message_capacity:
        raise ValueError(
            f"{params.messages} messages do not fit in {channel.uses} symbols of base {channel.q}"
        )
    q_guide = np.zeros((env.n_states, params.messages))
    q_agent = np.zeros((params.messages, len(ACTIONS)))
    guide = tuple([0] * env.n_states)
    agent = tuple(m % len(ACTIONS) for m in range(params.messages))
    train_rng = rng.spawn("train")
    eval_rng = rng.spawn("eval")

    best: tuple[MessagePolicy, GuidanceStats] | None = None
    curve: list[CurvePoint] = []
    for round_ in range(params.rounds):
        for phase in ("guide", "agent"):
            if phase == "guide":
                _train_guide(env, channel, agent, q_guide, params, train_rng)
                guide = tuple(int(m) for m in q_guide.argmax(axis=1))
            else:
                _train_agent(env, channel, guide, q_agent, params, train_rng)
                agent = tuple(int(a) for a in q_agent.argmax(axis=1))
            policy = MessagePolicy(guide=guide, agent=agent)
            stats = evaluate_guidance(
                env, policy, channel, params.eval_episodes, eval_rng, params.step_cap
            )
            curve.append(
                CurvePoint(round_, phase, stats.mean_return, stats.mean_steps, stats.success_rate)
            )
            logger.debug(
                "Round %d %s phase: mean return %.2f, mean steps %.2f",
                round_,
                phase,
                stats.mean_return,
                stats.mean_steps,
            )
            if best is None or stats.mean_return > best[1].mean_return:
                best = (policy, stats)

    assert best is not None
    logger.info(
        "Joint Q-learning finished: best mean return %.2f over %d episodes",
        best[1].mean_return,
        params.eval_episodes,
    )
    return JointLearningResult(policy=best[0], best=best[1], curve=curve)
