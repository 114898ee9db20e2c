"""Guiding an agent over a rate-limited or noisy channel."""

from goalcomm.remote.graphs import (
    GraphError,
    StateGraph,
    graph_suite,
    grid_graph,
    line_graph,
    random_graph,
    ring_graph,
)
from goalcomm.remote.gridworld import (
    ACTIONS,
    GridWorld,
    GuidanceStats,
    MessagePolicy,
    evaluate_guidance,
    greedy_policy,
    random_walk_stats,
)
from goalcomm.remote.guidance import (
    SCHEMES,
    GuidanceCost,
    guidance_code_cost,
    guidance_oracle,
    huffman_lengths,
)
from goalcomm.remote.learning import JointLearningResult, QLearningParams, q_learn_joint

__all__ = [
    "ACTIONS",
    "GraphError",
    "GridWorld",
    "GuidanceCost",
    "GuidanceStats",
    "JointLearningResult",
    "MessagePolicy",
    "QLearningParams",
    "SCHEMES",
    "StateGraph",
    "evaluate_guidance",
    "graph_suite",
    "greedy_policy",
    "grid_graph",
    "guidance_code_cost",
    "guidance_oracle",
    "huffman_lengths",
    "line_graph",
    "q_learn_joint",
    "random_graph",
    "random_walk_stats",
    "ring_graph",
]
