"""Finite-state Markov chain source with a symmetric observation channel."""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np

from goalcomm.processes.base import Belief, CategoricalBelief, ProcessError, ProcessModel
from goalcomm.sim.kernel import SimTime, TimeBase
from goalcomm.sim.rng import RngStream

_ROW_TOLERANCE = 1e-12


class FiniteMarkov(ProcessModel):
    """Discrete-time chain stepping once every ``step_seconds``.

    Observations pass through a symmetric confusion channel: the reported
    state is wrong with probability ``noise_var`` (uniform over the other
    states). The estimate is the MAP state and the loss is 0/1.
    """

    value_dtype = np.int64

    def __init__(
        self,
        transition: Sequence[Sequence[float]] | np.ndarray,
        labels: Sequence[str] | None = None,
        initial: Sequence[float] | None = None,
        step_seconds: float = 1.0,
    ) -> None:
        matrix = np.asarray(transition, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 1:
            raise ProcessError(f"Transition matrix must be square, got shape {matrix.shape}")
        if np.any(matrix < 0):
            raise ProcessError("Transition matrix has negative entries")
        if np.any(np.abs(matrix.sum(axis=1) - 1.0) > _ROW_TOLERANCE):
            raise ProcessError("Transition matrix rows must sum to 1")
        n = matrix.shape[0]
        if labels is None:
            labels = [str(i) for i in range(n)]
        if len(labels) != n:
            raise ProcessError(f"Expected {n} state labels, got {len(labels)}")
        if initial is None:
            start = np.full(n, 1.0 / n)
        else:
            start = np.asarray(initial, dtype=float)
            if start.shape != (n,) or np.any(start < 0) or abs(start.sum() - 1.0) > 1e-9:
                raise ProcessError("Initial distribution must be a probability vector")
        if step_seconds <= 0:
            raise ProcessError(f"step_seconds must be > 0, got {step_seconds}")
        self.matrix = matrix
        self.labels = tuple(labels)
        self.initial = start
        self.step_seconds = float(step_seconds)

    @property
    def n_states(self) -> int:
        return int(self.matrix.shape[0])

    def steps_between(self, t_from: SimTime, t_to: SimTime, timebase: TimeBase) -> int:
        """Chain transitions that occur in ``(t_from, t_to]``."""
        step = max(1, timebase.ticks(self.step_seconds))
        return t_to // step - t_from // step

    def prior(self) -> CategoricalBelief:
        return CategoricalBelief(tuple(self.initial.tolist()))

    def predict(
        self, belief: Belief, t_from: SimTime, t_to: SimTime, timebase: TimeBase
    ) -> CategoricalBelief:
        if not isinstance(belief, CategoricalBelief):
            raise TypeError(f"Expected a CategoricalBelief, got {type(belief).__name__}")
        if t_to < t_from:
            raise ProcessError(f"Cannot predict backwards from t={t_from} to t={t_to}")
        steps = self.steps_between(t_from, t_to, timebase)
        if steps == 0:
            return belief
        probs = belief.vector @ np.linalg.matrix_power(self.matrix, steps)
        return CategoricalBelief(tuple(_normalize(probs).tolist()))

    def likelihood(self, y: int, noise_var: float) -> np.ndarray:
        """``P(y | x = j)`` for every state ``j``."""
        if not 0.0 <= noise_var < 1.0:
            raise ProcessError(f"Confusion probability must lie in [0, 1), got {noise_var}")
        n = self.n_states
        if n == 1:
            return np.ones(1)
        lik = np.full(n, noise_var / (n - 1))
        lik[int(y)] = 1.0 - noise_var
        return lik

    def update(self, belief: Belief, y: Any, noise_var: float) -> CategoricalBelief:
        if not isinstance(belief, CategoricalBelief):
            raise TypeError(f"Expected a CategoricalBelief, got {type(belief).__name__}")
        y = int(y)
        if not 0 <= y < self.n_states:
            raise ProcessError(f"Observed state {y} outside [0, {self.n_states})")
        if noise_var == 0.0:
            onehot = np.zeros(self.n_states)
            onehot[y] = 1.0
            return CategoricalBelief(tuple(onehot.tolist()))
        joint = belief.vector * self.likelihood(y, noise_var)
        if joint.sum() <= 0.0:
            return belief
        return CategoricalBelief(tuple(_normalize(joint).tolist()))

    def observe(self, x: Any, noise_var: float, rng: RngStream) -> int:
        x = int(x)
        if noise_var == 0.0 or self.n_states == 1 or rng.random() >= noise_var:
            return x
        return (x + int(rng.integers(1, self.n_states))) % self.n_states

    def voi(self, belief: Belief, noise_var: float) -> float:
        """Expected drop in MAP error probability from one fresh observation."""
        if not isinstance(belief, CategoricalBelief):
            raise TypeError(f"Expected a CategoricalBelief, got {type(belief).__name__}")
        probs = belief.vector
        if noise_var == 0.0:
            return float(1.0 - probs.max())
        correct = sum(
            float(np.max(probs * self.likelihood(y, noise_var))) for y in range(self.n_states)
        )
        return max(0.0, correct - float(probs.max()))

    def advance(
        self, x: np.ndarray, t_from: SimTime, t_to: SimTime, rng: RngStream, timebase: TimeBase
    ) -> np.ndarray:
        steps = self.steps_between(t_from, t_to, timebase)
        if steps == 0:
            return x
        kernel = np.linalg.matrix_power(self.matrix, steps)
        return _draw(kernel[np.asarray(x, dtype=np.int64)], rng)

    def __repr__(self) -> str:
        return f"FiniteMarkov(states={self.labels}, step_seconds={self.step_seconds})"


def _normalize(probs: np.ndarray) -> np.ndarray:
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def _draw(rows: np.ndarray, rng: RngStream) -> np.ndarray:
    cdf = np.cumsum(rows, axis=1)
    cdf[:, -1] = 1.0
    u = rng.random(rows.shape[0])
    return (cdf < u[:, None]).sum(axis=1).astype(np.int64)
