"""Scalar Gauss-Markov processes: Wiener and Ornstein-Uhlenbeck.

Both are linear-Gaussian, so the posterior given any set of (possibly noisy)
samples stays Gaussian and is tracked exactly by a scalar Kalman recursion.
"""

from __future__ import annotations

import abc
import math
from typing import Any

import numpy as np

from goalcomm.processes.base import Belief, GaussianBelief, ProcessError, ProcessModel
from goalcomm.sim.kernel import SimTime, TimeBase
from goalcomm.sim.rng import RngStream


class GaussMarkovProcess(ProcessModel):
    """Common filtering code for ``dx = -theta (x - mu) dt + sqrt(sigma2) dW``."""

    mu: float = 0.0
    sigma2: float = 1.0

    def __init__(self, x0: float | None, p0: float) -> None:
        if p0 < 0:
            raise ProcessError(f"Prior variance must be >= 0, got {p0}")
        self.x0 = x0
        self.p0 = float(p0)

    @abc.abstractmethod
    def transition(self, dt: float) -> tuple[float, float]:
        """Gain ``a`` and process-noise variance ``q`` over ``dt`` seconds."""
        ...

    def prior(self) -> GaussianBelief:
        mean = self.mu if self.x0 is None else float(self.x0)
        return GaussianBelief(mean, self.p0)

    def predict(
        self, belief: Belief, t_from: SimTime, t_to: SimTime, timebase: TimeBase
    ) -> GaussianBelief:
        if not isinstance(belief, GaussianBelief):
            raise TypeError(f"Expected a GaussianBelief, got {type(belief).__name__}")
        if t_to < t_from:
            raise ProcessError(f"Cannot predict backwards from t={t_from} to t={t_to}")
        if t_to == t_from:
            return belief
        a, q = self.transition(timebase.seconds(t_to - t_from))
        return GaussianBelief(a * belief.mean + (1.0 - a) * self.mu, a * a * belief.var + q)

    def update(self, belief: Belief, y: Any, noise_var: float) -> GaussianBelief:
        if not isinstance(belief, GaussianBelief):
            raise TypeError(f"Expected a GaussianBelief, got {type(belief).__name__}")
        y = float(y)
        if noise_var == 0.0:
            return GaussianBelief(y, 0.0)
        total = belief.var + noise_var
        if total == 0.0:
            return belief
        gain = belief.var / total
        return GaussianBelief(belief.mean + gain * (y - belief.mean), (1.0 - gain) * belief.var)

    def observe(self, x: Any, noise_var: float, rng: RngStream) -> float:
        if noise_var == 0.0:
            return float(x)
        return float(x + math.sqrt(noise_var) * rng.standard_normal())

    def voi(self, belief: Belief, noise_var: float) -> float:
        if not isinstance(belief, GaussianBelief):
            raise TypeError(f"Expected a GaussianBelief, got {type(belief).__name__}")
        if noise_var == 0.0:
            return belief.var
        if belief.var == 0.0:
            return 0.0
        return belief.var * belief.var / (belief.var + noise_var)

    def advance(
        self, x: np.ndarray, t_from: SimTime, t_to: SimTime, rng: RngStream, timebase: TimeBase
    ) -> np.ndarray:
        if t_to == t_from:
            return x
        a, q = self.transition(timebase.seconds(t_to - t_from))
        noise = math.sqrt(q) * rng.standard_normal(np.shape(x))
        return a * x + (1.0 - a) * self.mu + noise


class Wiener(GaussMarkovProcess):
    """Brownian motion with variance rate ``sigma2`` per second (a martingale)."""

    def __init__(self, sigma2: float = 1.0, x0: float = 0.0, p0: float = 0.0) -> None:
        if sigma2 < 0:
            raise ProcessError(f"sigma2 must be >= 0, got {sigma2}")
        super().__init__(x0, p0)
        self.sigma2 = float(sigma2)
        self.mu = 0.0

    def transition(self, dt: float) -> tuple[float, float]:
        return 1.0, self.sigma2 * dt

    def __repr__(self) -> str:
        return f"Wiener(sigma2={self.sigma2}, x0={self.x0}, p0={self.p0})"


class OrnsteinUhlenbeck(GaussMarkovProcess):
    """Mean-reverting Gauss-Markov process.

    With ``x0=None`` the prior is the stationary law ``N(mu, sigma2 / (2 theta))``.
    """

    def __init__(
        self,
        theta: float = 1.0,
        mu: float = 0.0,
        sigma2: float = 1.0,
        x0: float | None = None,
        p0: float | None = None,
    ) -> None:
        if theta <= 0:
            raise ProcessError(f"theta must be > 0, got {theta}")
        if sigma2 < 0:
            raise ProcessError(f"sigma2 must be >= 0, got {sigma2}")
        stationary = sigma2 / (2.0 * theta)
        if p0 is None:
            p0 = stationary if x0 is None else 0.0
        super().__init__(x0, p0)
        self.theta = float(theta)
        self.mu = float(mu)
        self.sigma2 = float(sigma2)

    @property
    def stationary_var(self) -> float:
        return self.sigma2 / (2.0 * self.theta)

    def transition(self, dt: float) -> tuple[float, float]:
        a = math.exp(-self.theta * dt)
        q = self.sigma2 * -math.expm1(-2.0 * self.theta * dt) / (2.0 * self.theta)
        return a, q

    def __repr__(self) -> str:
        return (
            f"OrnsteinUhlenbeck(theta={self.theta}, mu={self.mu}, sigma2={self.sigma2}, "
            f"x0={self.x0}, p0={self.p0})"
        )
