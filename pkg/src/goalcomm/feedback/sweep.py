"""Message length and false-alarm rate across K for every feedback scheme."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from goalcomm.constants import FEEDBACK_PROBES, K_MAX, POPULATION
from goalcomm.feedback.codecs import AckSet, FeedbackError, bounds, decode_membership, encode
from goalcomm.output import Provenance, write_table
from goalcomm.sim.rng import RngStream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepRow:
    k: int
    scheme: str
    bits: int
    fa_rate: float


def random_ack_set(rng: RngStream, k: int, population: int = POPULATION) -> AckSet:
    ids: set[int] = set()
    while len(ids) < k:
        ids.update(int(u) for u in rng.integers(0, population, size=k - len(ids)))
    return AckSet(tuple(sorted(ids)), population, max(K_MAX, k))


def random_outsiders(
    rng: RngStream, ack: AckSet, count: int, population: int = POPULATION
) -> list[int]:
    """``count`` IDs drawn uniformly from users outside ``ack``."""
    if population - ack.k < 1:
        return []
    out: list[int] = []
    while len(out) < count:
        drawn = (int(u) for u in rng.integers(0, population, size=count - len(out)))
        out.extend(u for u in drawn if u not in ack)
    return out


def parse_k_range(text: str) -> list[int]:
    """``"20:500:20"`` (inclusive stop) or a comma list ``"20,40,60"``."""
    try:
        if ":" in text:
            start, stop, step = (int(part) for part in text.split(":"))
            if step < 1:
                raise ValueError
            values = list(range(start, stop + 1, step))
        else:
            values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise FeedbackError(f"Cannot parse K range '{text}'") from None
    if not values or min(values) < 1 or max(values) > K_MAX:
        raise FeedbackError(f"K range must lie within [1, {K_MAX}], got '{text}'")
    return values


def sweep(
    k_values: Sequence[int],
    eps_values: Sequence[float],
    seed: int,
    population: int = POPULATION,
    probes: int = FEEDBACK_PROBES,
) -> list[SweepRow]:
    """One row per ``(K, scheme)``: encoded length and empirical false-alarm rate.

    Alongside the four codecs, ``fa_bound`` rows carry the idealized
    ``K log2(1/eps)`` length at the design rate.
    """
    if not k_values:
        raise FeedbackError("Empty K range")
    if any(k < 1 or k > K_MAX for k in k_values):
        raise FeedbackError(f"K values must lie within [1, {K_MAX}]")
    root = RngStream(seed, "feedback")
    rows: list[SweepRow] = []
    for k in k_values:
        rng = root.spawn(f"K{k}")
        ack = random_ack_set(rng.spawn("acked"), k, population)
        outsiders = random_outsiders(rng.spawn("probes"), ack, probes, population)
        configs: list[tuple[str, str, float | None]] = [
            ("concat", "concat", None),
            ("enumerative", "enumerative", None),
        ]
        for eps in eps_values:
            configs.append((f"hashsig({eps:g})", "hashsig", eps))
            configs.append((f"bloom({eps:g})", "bloom", eps))
        for label, scheme, eps in configs:
            feedback = encode(scheme, ack, seed=seed, eps=eps)
            if not all(decode_membership(feedback, u) for u in ack.ids):
                raise FeedbackError(f"{label} missed an acknowledged user at K={k}")
            alarms = sum(decode_membership(feedback, u) for u in outsiders)
            rows.append(SweepRow(k, label, feedback.length, alarms / max(1, len(outsiders))))
        for eps in eps_values:
            bound = bounds(population, k, eps)["B_fa"]
            rows.append(SweepRow(k, f"fa_bound({eps:g})", bound, eps))
        logger.debug("Feedback sweep K=%d done", k)
    return rows


def write_sweep_csv(
    rows: Sequence[SweepRow], path: Path, provenance: Provenance | None = None
) -> Path:
    header = ["K", "scheme", "B_bits", "fa_rate"]
    table = [(r.k, r.scheme, r.bits, r.fa_rate) for r in rows]
    return write_table(path, header, table, provenance)
