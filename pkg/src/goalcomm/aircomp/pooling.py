"""Over-the-air pooling of device features with the generalized p-norm.

Devices pre-process each feature with ``x ** p``, the multiple-access
channel adds the transmissions up, and the server post-processes the noisy
sum with ``(.) ** (1 / p)``. ``p = 1`` followed by a ``1 / N`` scale gives
the average; large ``p`` approaches the maximum.

Every device scales its features by the same known ``bound`` before the
power, so ``(x / bound) ** p`` stays within the peak power for any ``p``.
Features well below the bound shrink towards zero as ``p`` grows, and the
receiver noise takes over the pooled output.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from goalcomm.channels.mac import GaussianMAC, mac_superpose
from goalcomm.sim.rng import RngStream

logger = logging.getLogger(__name__)

PoolingMode = Literal["average", "max_approx"]
NomographicFunction = Literal["arithmetic_mean", "geometric_mean", "p_norm"]
P_GRID: tuple[float, ...] = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)


@dataclass(frozen=True)
class PoolingConfig:
    p: float = 1.0
    mode: PoolingMode = "max_approx"
    noise_var: float = 0.0
    power: float = 1.0  # peak transmit power P
    bound: float = 1.0  # largest feature any device may hold

    def __post_init__(self) -> None:
        if not self.p >= 1.0:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.mode not in ("average", "max_approx"):
            raise ValueError(f"Unknown pooling mode '{self.mode}'")
        if self.noise_var < 0:
            raise ValueError(f"noise_var must be >= 0, got {self.noise_var}")
        if self.power <= 0:
            raise ValueError(f"power must be > 0, got {self.power}")
        if not self.bound > 0:
            raise ValueError(f"bound must be > 0, got {self.bound}")


@dataclass(frozen=True)
class FeatureBatch:
    """One nonnegative feature vector per device, stacked as an ``(N, d)`` array."""

    features: np.ndarray

    def __post_init__(self) -> None:
        x = np.atleast_2d(np.asarray(self.features, dtype=float))
        if x.size == 0:
            raise ValueError("Feature batch is empty")
        if np.any(x < 0) or not np.all(np.isfinite(x)):
            raise ValueError("Features must be finite and nonnegative")
        object.__setattr__(self, "features", x)

    @classmethod
    def of(cls, vectors: Sequence[Sequence[float]]) -> FeatureBatch:
        return cls(np.asarray(vectors, dtype=float))

    @classmethod
    def column(cls, values: Sequence[float]) -> FeatureBatch:
        """``N`` devices holding one scalar feature each."""
        return cls(np.asarray(values, dtype=float).reshape(-1, 1))

    @property
    def n_devices(self) -> int:
        return int(self.features.shape[0])

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])


def _normalized_powers(batch: FeatureBatch, p: float) -> tuple[np.ndarray, np.ndarray]:
    """Column peaks ``M`` and ``(x / M) ** p`` (zero columns stay zero)."""
    peak = batch.features.max(axis=0)
    scale = np.where(peak > 0, peak, 1.0)
    return peak, (batch.features / scale) ** p


def _pool(
    batch: FeatureBatch,
    cfg: PoolingConfig,
    rng: RngStream,
    mac: GaussianMAC | None,
    trials: int | None,
) -> np.ndarray:
    if cfg.mode == "max_approx" and math.isinf(cfg.p):
        top = batch.features.max(axis=0)
        return top if trials is None else np.tile(top, (trials, 1))
    if batch.features.max() > cfg.bound:
        raise ValueError(
            f"Feature {batch.features.max():.4g} exceeds the pooling bound {cfg.bound:.4g}"
        )
    p = 1.0 if cfg.mode == "average" else cfg.p
    channel = (mac or GaussianMAC(batch.n_devices)).with_noise(cfg.noise_var)
    amplitude = math.sqrt(cfg.power)
    signals = (batch.features / cfg.bound) ** p * amplitude
    if trials is not None:
        signals = np.repeat(signals[:, np.newaxis, :], trials, axis=1)
    received = mac_superpose(channel, signals, rng).received / amplitude
    total = np.maximum(received, 0.0)
    if cfg.mode == "average":
        return cfg.bound * total / batch.n_devices
    return cfg.bound * total ** (1.0 / p)


def air_pool(
    batch: FeatureBatch,
    cfg: PoolingConfig,
    rng: RngStream,
    mac: GaussianMAC | None = None,
) -> np.ndarray:
    """Pool ``batch`` over the air, one channel use per feature component.

    Devices transmit ``(x / bound) ** p`` at the peak amplitude and the
    server rescales the root of the noisy sum by the same ``bound``. A
    negative noisy sum is clamped to zero before the root. ``p = inf`` is
    the noiseless limit and returns the componentwise maximum.

    Raises:
        ValueError: a feature exceeds ``cfg.bound``.
    """
    return _pool(batch, cfg, rng, mac, None)


def pooled_trials(
    batch: FeatureBatch,
    cfg: PoolingConfig,
    rng: RngStream,
    trials: int,
    mac: GaussianMAC | None = None,
) -> np.ndarray:
    """``trials`` independent channel uses of :func:`air_pool`, shape ``(trials, d)``.

    All noise comes from one draw on ``rng``: streams with the same name
    give the same noise for every ``p``.
    """
    if trials < 1:
        raise ValueError(f"Need at least one trial, got {trials}")
    return _pool(batch, cfg, rng, mac, trials)


def p_norm(batch: FeatureBatch, p: float) -> np.ndarray:
    """Noiseless componentwise ``||x||_p`` over devices."""
    if math.isinf(p):
        return batch.features.max(axis=0)
    peak, powers = _normalized_powers(batch, p)
    return peak * powers.sum(axis=0) ** (1.0 / p)


def max_approx_error(batch: FeatureBatch, p: float) -> float:
    """Mean over components of ``|p_norm - max|``; never increases with ``p``."""
    return float(np.mean(np.abs(p_norm(batch, p) - batch.features.max(axis=0))))


def pooled_variance(
    batch: FeatureBatch,
    cfg: PoolingConfig,
    rng: RngStream,
    trials: int = 1000,
    mac: GaussianMAC | None = None,
) -> float:
    """Variance of the pooled output over noise draws, averaged over components."""
    return float(np.mean(np.var(pooled_trials(batch, cfg, rng, trials, mac), axis=0)))


def aircomp_error(
    batch: FeatureBatch,
    cfg: PoolingConfig,
    rng: RngStream,
    trials: int = 1000,
    mac: GaussianMAC | None = None,
) -> float:
    """Mean squared error of the pooled output against its target.

    The target is the componentwise maximum in ``max_approx`` mode and the
    mean in ``average`` mode, so the error counts both the approximation gap
    and the channel noise.
    """
    if cfg.mode == "average":
        target = batch.features.mean(axis=0)
    else:
        target = batch.features.max(axis=0)
    out = pooled_trials(batch, cfg, rng, trials, mac)
    return float(np.mean((out - target) ** 2))


def air_nomographic(
    batch: FeatureBatch,
    function: NomographicFunction,
    rng: RngStream,
    mac: GaussianMAC | None = None,
    p: float = 2.0,
) -> np.ndarray:
    """Compute a nomographic function ``post(sum pre(x_n))`` over the air.

    ``geometric_mean`` transmits ``log x`` and needs strictly positive features.
    """
    x = batch.features
    n = batch.n_devices
    channel = mac or GaussianMAC(n)
    if function == "arithmetic_mean":
        return mac_superpose(channel, x, rng).received / n
    if function == "geometric_mean":
        if np.any(x <= 0):
            raise ValueError("Geometric mean needs strictly positive features")
        return np.exp(mac_superpose(channel, np.log(x), rng).received / n)
    if function == "p_norm":
        if p < 1:
            raise ValueError(f"p must be >= 1, got {p}")
        received = mac_superpose(channel, x**p, rng).received
        return np.maximum(received, 0.0) ** (1.0 / p)
    raise ValueError(f"Unknown nomographic function '{function}'")
