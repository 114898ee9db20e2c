"""Massive downlink acknowledgment feedback."""

from goalcomm.feedback.codecs import (
    FEEDBACK_SCHEMES,
    AckSet,
    EncodedFeedback,
    FeedbackError,
    bloom_parameters,
    bounds,
    decode_ack_set,
    decode_membership,
    encode,
    enumerative_bits,
    fingerprint_bits,
    rank_subset,
    unrank_subset,
)
from goalcomm.feedback.sweep import SweepRow, parse_k_range, random_ack_set, sweep, write_sweep_csv

__all__ = [
    "FEEDBACK_SCHEMES",
    "AckSet",
    "EncodedFeedback",
    "FeedbackError",
    "SweepRow",
    "bloom_parameters",
    "bounds",
    "decode_ack_set",
    "decode_membership",
    "encode",
    "enumerative_bits",
    "fingerprint_bits",
    "parse_k_range",
    "random_ack_set",
    "rank_subset",
    "sweep",
    "unrank_subset",
    "write_sweep_csv",
]
