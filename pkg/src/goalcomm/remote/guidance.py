"""Pragmatic source coding: guiding an agent along a state graph over a bit pipe.

All schemes share one channel timeline. The guide may send ``bits_per_step``
bits per environment step. An instruction of ``l`` bits covering ``m`` moves
can start executing in the step its last bit arrives; bits sent ahead of
time are banked as credit for the next instruction. Steps the agent spends
waiting for bits are charged ``idle_cost`` each, on top of the transition
costs of the moves it makes.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Literal, Mapping, Sequence

from goalcomm.constants import ORACLE_MAX_BLOCK, ORACLE_MAX_VERTICES
from goalcomm.remote.graphs import GraphError, StateGraph

logger = logging.getLogger(__name__)

Scheme = Literal["per_step", "goal_only", "horizon_k"]
SCHEMES: tuple[str, ...] = ("per_step", "goal_only", "horizon_k")


def ceil_log2(n: int) -> int:
    """Bits needed to index ``n`` alternatives (0 for a single one)."""
    if n < 1:
        raise ValueError(f"Cannot index {n} alternatives")
    return (n - 1).bit_length()


def huffman_lengths(probs: Sequence[float]) -> list[int]:
    """Codeword lengths of a binary Huffman code for ``probs``."""
    if not probs:
        return []
    if len(probs) == 1:
        return [0]
    lengths = [0] * len(probs)
    counter = itertools.count()
    heap = [(float(p), next(counter), [i]) for i, p in enumerate(probs)]
    heapq.heapify(heap)
    while len(heap) > 1:
        p1, _, a = heapq.heappop(heap)
        p2, _, b = heapq.heappop(heap)
        for i in a + b:
            lengths[i] += 1
        heapq.heappush(heap, (p1 + p2, next(counter), a + b))
    return lengths


@dataclass(frozen=True)
class ChannelTimeline:
    bits_per_step: int
    credit_cap: int
    idle_cost: float = 1.0

    def __post_init__(self) -> None:
        if self.bits_per_step < 1:
            raise ValueError(f"bits_per_step must be >= 1, got {self.bits_per_step}")

    def advance(self, credit: int, bits: int, moves: int) -> tuple[int, int, int]:
        """Execute one instruction: returns ``(steps, idle_steps, new_credit)``."""
        wait = max(1, -(-(bits - credit) // self.bits_per_step))
        steps = wait + moves - 1
        idle = steps - moves
        new_credit = min(self.credit_cap, credit + self.bits_per_step * steps - bits)
        return steps, idle, new_credit


def credit_cap(graph: StateGraph, max_block: int = ORACLE_MAX_BLOCK) -> int:
    """Credit bound shared by every scheme and the oracle: ``|V|`` longest instructions."""
    longest = ceil_log2(len(graph))
    for v in graph.graph.nodes:
        longest = max(longest, *huffman_lengths(_uniform(graph.out_degree(v))))
        for k in range(1, max_block + 1):
            longest = max(longest, ceil_log2(graph.walks_from(v, k)))
    return len(graph) * longest


def _uniform(n: int) -> list[float]:
    return [1.0 / n] * n if n else []


@dataclass(frozen=True)
class GuidanceCost:
    scheme: str
    cost: float
    transition_cost: float
    idle_steps: int
    total_bits: int
    bits_before_first_action: int
    transitions: int


def _instructions(
    graph: StateGraph,
    path: list[int],
    scheme: str,
    k: int,
    edge_probs: Mapping[int, Sequence[float]] | None,
) -> list[tuple[int, int]]:
    moves = len(path) - 1
    if scheme == "goal_only":
        return [(ceil_log2(len(graph)), moves)]
    if scheme == "per_step":
        out = []
        for u, v in zip(path, path[1:]):
            successors = graph.successors(u)
            probs = edge_probs.get(u) if edge_probs else None
            lengths = huffman_lengths(probs if probs is not None else _uniform(len(successors)))
            out.append((lengths[successors.index(v)], 1))
        return out
    if scheme == "horizon_k":
        if k < 1:
            raise ValueError(f"Horizon k must be >= 1, got {k}")
        out = []
        for i in range(0, moves, k):
            block = min(k, moves - i)
            out.append((ceil_log2(graph.walks_from(path[i], block)), block))
        return out
    raise ValueError(f"Unknown guidance scheme '{scheme}'")


def guidance_code_cost(
    graph: StateGraph,
    start: int,
    scheme: str,
    bits_per_step: int = 1,
    k: int = 2,
    idle_cost: float = 1.0,
    edge_probs: Mapping[int, Sequence[float]] | None = None,
) -> GuidanceCost:
    """Cost of guiding the agent from ``start`` to the goal along the min-cost path.

    ``per_step`` Huffman-codes each transition among the out-edges of the
    current vertex (uniform unless ``edge_probs`` is given); ``goal_only``
    sends the goal index once and lets the agent plan; ``horizon_k`` indexes
    the next ``k`` transitions among all length-``k`` walks.
    """
    if start not in graph.cost_to_goal:
        raise GraphError(f"Goal {graph.goal} is unreachable from {start}")
    name = f"horizon_{k}" if scheme == "horizon_k" else scheme
    if start == graph.goal:
        return GuidanceCost(name, 0.0, 0.0, 0, 0, 0, 0)

    path = graph.min_cost_path(start)
    timeline = ChannelTimeline(bits_per_step, credit_cap(graph), idle_cost)
    credit = 0
    idle_total = 0
    instructions = _instructions(graph, path, scheme, k, edge_probs)
    for bits, moves in instructions:
        _, idle, credit = timeline.advance(credit, bits, moves)
        idle_total += idle
    transition_cost = graph.path_cost(path)
    return GuidanceCost(
        scheme=name,
        cost=transition_cost + idle_cost * idle_total,
        transition_cost=transition_cost,
        idle_steps=idle_total,
        total_bits=sum(bits for bits, _ in instructions),
        bits_before_first_action=instructions[0][0],
        transitions=len(path) - 1,
    )


def _options(
    graph: StateGraph, v: int, max_block: int
) -> list[tuple[int, int, float, int]]:
    """``(bits, moves, transition_cost, end_vertex)`` for every instruction available at ``v``."""
    best: dict[tuple[int, int, int], float] = {}

    def offer(bits: int, moves: int, cost: float, end: int) -> None:
        key = (bits, moves, end)
        if cost < best.get(key, math.inf):
            best[key] = cost

    successors = graph.successors(v)
    for w, length in zip(successors, huffman_lengths(_uniform(len(successors)))):
        offer(length, 1, graph.cost(v, w), w)

    stack: list[tuple[int, int, float]] = [(v, 0, 0.0)]
    while stack:
        u, depth, cost = stack.pop()
        if depth > 0:
            offer(ceil_log2(graph.walks_from(v, depth)), depth, cost, u)
        if depth == max_block or (depth > 0 and u == graph.goal):
            continue
        for w in graph.successors(u):
            stack.append((w, depth + 1, cost + graph.cost(u, w)))

    hops = len(graph.min_cost_path(v)) - 1
    offer(ceil_log2(len(graph)), hops, graph.cost_to_goal[v], graph.goal)
    return [(bits, moves, cost, end) for (bits, moves, end), cost in best.items()]


def guidance_oracle(
    graph: StateGraph,
    start: int,
    bits_per_step: int = 1,
    idle_cost: float = 1.0,
    max_block: int = ORACLE_MAX_BLOCK,
) -> float:
    """Minimal total cost over every mix of per-step, block and goal instructions.

    Exact shortest path over ``(vertex, banked credit)`` states; limited to
    graphs of at most a dozen vertices.
    """
    if len(graph) > ORACLE_MAX_VERTICES:
        raise GraphError(
            f"Oracle is limited to {ORACLE_MAX_VERTICES} vertices, graph has {len(graph)}"
        )
    if start not in graph.cost_to_goal:
        raise GraphError(f"Goal {graph.goal} is unreachable from {start}")
    timeline = ChannelTimeline(bits_per_step, credit_cap(graph, max_block), idle_cost)
    options = {v: _options(graph, v, max_block) for v in graph.graph.nodes if v != graph.goal}

    settled: dict[tuple[int, int], float] = {}
    heap: list[tuple[float, int, int]] = [(0.0, start, 0)]
    while heap:
        cost, v, credit = heapq.heappop(heap)
        if (v, credit) in settled:
            continue
        settled[(v, credit)] = cost
        if v == graph.goal:
            logger.debug(
                "Oracle for %s from %d: %.3f (%d states)", graph.name, start, cost, len(settled)
            )
            return cost
        for bits, moves, transition, end in options[v]:
            _, idle, new_credit = timeline.advance(credit, bits, moves)
            if (end, new_credit) not in settled:
                heapq.heappush(heap, (cost + transition + idle_cost * idle, end, new_credit))
    raise GraphError(f"Goal {graph.goal} is unreachable from {start}")
