"""Federated training of a synthetic logistic-regression task over the air."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
from scipy.special import expit

from goalcomm.aircomp.codebook import Codebook, ErrorFeedback, quantize_vq, train_codebook
from goalcomm.aircomp.feel import (
    Detector,
    SignatureKind,
    feel_round_analog,
    feel_round_obda,
    feel_round_pa,
    gdoac_round,
    obda_learning_rate,
)
from goalcomm.channels.mac import GaussianMAC
from goalcomm.constants import GDOAC_BLOCK, GDOAC_CODEBOOK_BITS
from goalcomm.output import Provenance, write_table
from goalcomm.sim.rng import RngStream

logger = logging.getLogger(__name__)

SchemeName = Literal["pa", "obda", "analog", "gdoac"]
FEEL_SCHEMES: tuple[str, ...] = ("pa", "obda", "analog", "gdoac")


class LogisticTask:
    """Heterogeneous binary classification split across devices.

    Every device draws features around its own shifted mean, labels follow
    a shared logistic model ``w*``. The global loss is the device-average
    logistic loss plus ``l2 / 2 * ||w||^2``.
    """

    def __init__(
        self,
        rng: RngStream,
        dim: int = 20,
        devices: int = 20,
        samples_per_device: int = 50,
        shift_std: float = 0.5,
        l2: float = 0.01,
    ) -> None:
        self.dim = dim
        self.devices = devices
        self.l2 = l2
        self.w_star = rng.standard_normal(dim)
        shifts = rng.normal(0.0, shift_std, size=(devices, dim))
        self.features = shifts[:, None, :] + rng.standard_normal((devices, samples_per_device, dim))
        logits = self.features @ self.w_star
        self.labels = np.where(rng.random(logits.shape) < expit(logits), 1.0, -1.0)

    def device_loss(self, w: np.ndarray, device: int) -> float:
        margins = self.labels[device] * (self.features[device] @ w)
        return float(np.mean(np.logaddexp(0.0, -margins)) + 0.5 * self.l2 * w @ w)

    def device_gradient(self, w: np.ndarray, device: int) -> np.ndarray:
        x, y = self.features[device], self.labels[device]
        weights = -y * expit(-y * (x @ w))
        return (weights @ x) / len(y) + self.l2 * w

    def loss(self, w: np.ndarray) -> float:
        return float(np.mean([self.device_loss(w, n) for n in range(self.devices)]))

    def gradient(self, w: np.ndarray) -> np.ndarray:
        return np.mean([self.device_gradient(w, n) for n in range(self.devices)], axis=0)

    def accuracy(self, w: np.ndarray) -> float:
        predictions = np.where(self.features @ w >= 0, 1.0, -1.0)
        return float(np.mean(predictions == self.labels))


@dataclass(frozen=True)
class FeelScheme:
    name: SchemeName = "pa"
    noise_var: float = 0.0
    block: int = GDOAC_BLOCK
    bits: int = GDOAC_CODEBOOK_BITS
    detector: Detector = "genie"
    signatures: SignatureKind = "gaussian"
    error_feedback: bool = True

    def __post_init__(self) -> None:
        if self.name not in FEEL_SCHEMES:
            raise ValueError(f"Unknown FEEL scheme '{self.name}'")
        if self.noise_var < 0:
            raise ValueError(f"noise_var must be >= 0, got {self.noise_var}")

    @property
    def label(self) -> str:
        if self.name == "gdoac":
            return f"gdoac(Q={self.block},J={self.bits},{self.detector})"
        return self.name


@dataclass
class FeelCurve:
    scheme: str
    losses: list[float] = field(default_factory=list)
    accuracies: list[float] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.losses[-1]

    def rows(self) -> list[tuple[int, str, float, float]]:
        return [
            (t, self.scheme, loss, acc)
            for t, (loss, acc) in enumerate(zip(self.losses, self.accuracies))
        ]

    def write_csv(self, path: Path, provenance: Provenance | None = None) -> Path:
        return write_table(path, ["round", "scheme", "loss", "accuracy"], self.rows(), provenance)


def local_updates(
    task: LogisticTask, w: np.ndarray, lr: float, local_steps: int
) -> np.ndarray:
    """Model change after ``local_steps`` gradient steps on every device."""
    updates = np.empty((task.devices, task.dim))
    for n in range(task.devices):
        local = w.copy()
        for _ in range(local_steps):
            local -= lr * task.device_gradient(local, n)
        updates[n] = local - w
    return updates


def warmup_codebook(
    task: LogisticTask,
    block: int,
    bits: int,
    seed: int,
    rounds: int = 50,
    lr: float = 0.2,
    local_steps: int = 1,
) -> Codebook:
    """Train the shared codebook on device updates seen along a short noise-free run."""
    w = np.zeros(task.dim)
    samples = []
    for _ in range(rounds):
        updates = local_updates(task, w, lr, local_steps)
        samples.append(updates)
        w = w + feel_round_pa(updates)
    return train_codebook(np.concatenate(samples), block, bits, seed)


def train_feel(
    task: LogisticTask,
    scheme: FeelScheme,
    rounds: int,
    rng: RngStream,
    lr: float = 0.2,
    local_steps: int = 1,
    codebook: Codebook | None = None,
) -> FeelCurve:
    """Run ``rounds`` of local training plus over-the-air aggregation.

    The curve holds the loss and accuracy of the initial model and after
    every round.
    """
    if rounds < 1:
        raise ValueError(f"Need at least one round, got {rounds}")
    mac = GaussianMAC(task.devices, noise_var=scheme.noise_var)
    if scheme.name == "gdoac" and codebook is None:
        codebook = warmup_codebook(
            task, scheme.block, scheme.bits, seed=int(rng.integers(2**31)), lr=lr
        )
    feedback = ErrorFeedback(task.devices, task.dim)
    channel_rng = rng.spawn("channel")

    w = np.zeros(task.dim)
    curve = FeelCurve(scheme.label, [task.loss(w)], [task.accuracy(w)])
    for t in range(rounds):
        updates = local_updates(task, w, lr, local_steps)
        if scheme.name == "pa":
            step = feel_round_pa(updates)
        elif scheme.name == "analog":
            step = feel_round_analog(updates, mac, channel_rng)
        elif scheme.name == "obda":
            step = feel_round_obda(updates, mac, channel_rng, obda_learning_rate(t))
        else:
            assert codebook is not None
            if scheme.error_feedback:
                indices = [feedback.quantize(n, u, codebook) for n, u in enumerate(updates)]
            else:
                indices = [quantize_vq(u, codebook) for u in updates]
            result = gdoac_round(
                indices,
                codebook,
                scheme.detector,
                mac,
                channel_rng.spawn(f"round{t}"),
                scheme.signatures,
            )
            step = result.aggregate
        w = w + step
        curve.losses.append(task.loss(w))
        curve.accuracies.append(task.accuracy(w))
    logger.info("FEEL %s: final loss %.4f after %d rounds", scheme.label, curve.final_loss, rounds)
    return curve


def centralized_gd(task: LogisticTask, rounds: int, lr: float = 0.2) -> FeelCurve:
    """Full-batch gradient descent on the pooled data; the reference curve."""
    w = np.zeros(task.dim)
    curve = FeelCurve("centralized", [task.loss(w)], [task.accuracy(w)])
    for _ in range(rounds):
        w = w - lr * task.gradient(w)
        curve.losses.append(task.loss(w))
        curve.accuracies.append(task.accuracy(w))
    return curve
