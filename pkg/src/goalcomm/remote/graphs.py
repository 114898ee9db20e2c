"""State graphs with transition costs and the generated test suite."""

from __future__ import annotations

import logging
from functools import cached_property
from typing import Iterable

import networkx as nx
import numpy as np

from goalcomm.sim.rng import RngStream

logger = logging.getLogger(__name__)


class GraphError(ValueError):
    """Unreachable goal, negative cost, or an instance too large to solve exactly."""


class StateGraph:
    """Directed graph over vertices ``0..|V|-1`` with a ``cost`` on every edge."""

    def __init__(self, graph: nx.DiGraph, goal: int, name: str = "") -> None:
        nodes = sorted(graph.nodes)
        if nodes != list(range(len(nodes))):
            raise GraphError("Vertices must be labelled 0..|V|-1")
        if goal not in graph:
            raise GraphError(f"Goal {goal} is not a vertex")
        for u, v, data in graph.edges(data=True):
            data.setdefault("cost", 1.0)
            if data["cost"] < 0:
                raise GraphError(f"Edge {u}->{v} has negative cost {data['cost']}")
        reaching = nx.ancestors(graph, goal) | {goal}
        stranded = sorted(set(nodes) - reaching)
        if stranded:
            raise GraphError(f"Goal {goal} is unreachable from vertices {stranded}")
        self.graph = graph
        self.goal = goal
        self.name = name or f"graph{len(nodes)}"

    @classmethod
    def from_edges(
        cls, edges: Iterable[tuple[int, int, float]], goal: int, name: str = ""
    ) -> StateGraph:
        graph = nx.DiGraph()
        for u, v, cost in edges:
            graph.add_edge(u, v, cost=float(cost))
        return cls(graph, goal, name)

    def __len__(self) -> int:
        return self.graph.number_of_nodes()

    def __repr__(self) -> str:
        return f"StateGraph({self.name!r}, |V|={len(self)}, goal={self.goal})"

    def successors(self, v: int) -> list[int]:
        return sorted(self.graph.successors(v))

    def out_degree(self, v: int) -> int:
        return int(self.graph.out_degree(v))

    def cost(self, u: int, v: int) -> float:
        return float(self.graph.edges[u, v]["cost"])

    @property
    def max_out_degree(self) -> int:
        return max(self.out_degree(v) for v in self.graph.nodes)

    @cached_property
    def cost_to_goal(self) -> dict[int, float]:
        reverse = self.graph.reverse()
        return dict(nx.single_source_dijkstra_path_length(reverse, self.goal, weight="cost"))

    @cached_property
    def _adjacency(self) -> np.ndarray:
        dense = nx.to_numpy_array(self.graph, nodelist=range(len(self)), weight=None)
        return dense.astype(int).astype(object)

    @cached_property
    def _walk_counts(self) -> list[np.ndarray]:
        return [np.ones(len(self), dtype=int).astype(object)]

    def walks_from(self, v: int, k: int) -> int:
        """Number of length-``k`` walks leaving ``v`` (exact integers)."""
        counts = self._walk_counts
        while len(counts) <= k:
            counts.append(self._adjacency.dot(counts[-1]))
        return int(counts[k][v])

    def min_cost_path(self, start: int) -> list[int]:
        """Cheapest path to the goal; among equal costs, fewest hops, then lowest successor."""
        path = [start]
        while path[-1] != self.goal:
            path.append(self.next_hop(path[-1]))
            if len(path) > len(self):
                raise GraphError(f"Min-cost walk from {start} cycles through zero-cost edges")
        return path

    def next_hop(self, v: int) -> int:
        dist = self.cost_to_goal
        hops = self.hops_to_goal
        candidates = [w for w in self.successors(v) if w in dist]
        return min(candidates, key=lambda w: (self.cost(v, w) + dist[w], hops[w], w))

    @cached_property
    def hops_to_goal(self) -> dict[int, int]:
        return dict(nx.single_source_shortest_path_length(self.graph.reverse(), self.goal))

    def path_cost(self, path: list[int]) -> float:
        return sum(self.cost(u, v) for u, v in zip(path, path[1:]))

    def cost_optimal_paths(self, start: int) -> set[tuple[int, ...]]:
        paths = nx.all_shortest_paths(self.graph, start, self.goal, weight="cost")
        return {tuple(p) for p in paths}

    def time_optimal_paths(self, start: int) -> set[tuple[int, ...]]:
        return {tuple(p) for p in nx.all_shortest_paths(self.graph, start, self.goal)}


def line_graph(n: int, cost: float = 1.0) -> StateGraph:
    """Vertices ``0..n-1``, goal ``n-1``; every vertex can step forward or back.

    The two ends carry a self-loop so every vertex has out-degree 2.
    """
    if n < 2:
        raise GraphError(f"A line graph needs at least 2 vertices, got {n}")
    edges = [(i, i + 1, cost) for i in range(n - 1)] + [(i + 1, i, cost) for i in range(n - 1)]
    edges += [(0, 0, cost), (n - 1, n - 1, cost)]
    return StateGraph.from_edges(edges, goal=n - 1, name=f"line{n}")


def ring_graph(n: int, cost: float = 1.0) -> StateGraph:
    edges = [(i, (i + 1) % n, cost) for i in range(n)]
    edges += [((i + 1) % n, i, cost) for i in range(n)]
    return StateGraph.from_edges(edges, goal=0, name=f"ring{n}")


def grid_graph(width: int, height: int, rng: RngStream | None = None) -> StateGraph:
    """Four-neighbour grid, goal in the far corner; random integer costs 1..3 with ``rng``."""
    graph = nx.DiGraph()
    for y in range(height):
        for x in range(width):
            v = y * width + x
            graph.add_node(v)
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                x2, y2 = x + dx, y + dy
                if 0 <= x2 < width and 0 <= y2 < height:
                    cost = 1.0 if rng is None else float(rng.integers(1, 4))
                    graph.add_edge(v, y2 * width + x2, cost=cost)
    suffix = "" if rng is None else "-costed"
    return StateGraph(graph, goal=width * height - 1, name=f"grid{width}x{height}{suffix}")


def random_graph(n: int, rng: RngStream, extra_edges: int | None = None) -> StateGraph:
    """Seeded random digraph on a Hamiltonian cycle (so the goal is always reachable)."""
    graph = nx.DiGraph()
    order = [int(v) for v in rng.permutation(n)]
    for i in range(n):
        graph.add_edge(order[i], order[(i + 1) % n], cost=float(rng.integers(1, 4)))
    extra = n if extra_edges is None else extra_edges
    for _ in range(extra):
        u, v = (int(a) for a in rng.integers(0, n, size=2))
        if u != v and not graph.has_edge(u, v):
            graph.add_edge(u, v, cost=float(rng.integers(1, 4)))
    return StateGraph(graph, goal=n - 1, name=f"random{n}-{rng.name.rsplit('/', 1)[-1]}")


def graph_suite(seed: int = 0, max_vertices: int = 12) -> list[StateGraph]:
    """Line, ring, grid and seeded random instances with at most ``max_vertices`` vertices."""
    suite = [line_graph(n) for n in range(2, 7)]
    suite += [ring_graph(n) for n in (3, 5, 8)]
    suite += [grid_graph(w, h) for w, h in ((2, 2), (2, 3), (3, 3), (3, 4))]
    root = RngStream(seed, "graph_suite")
    suite += [grid_graph(3, 3, root.spawn("grid3x3")), grid_graph(3, 4, root.spawn("grid3x4"))]
    for n in (5, 7, 9, 12):
        for i in range(2):
            suite.append(random_graph(n, root.spawn(f"random{n}/{i}")))
    suite = [g for g in suite if len(g) <= max_vertices]
    logger.debug("Graph suite: %s", ", ".join(g.name for g in suite))
    return suite
