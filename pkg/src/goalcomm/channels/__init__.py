"""Link, discrete and multiple-access channel models."""

from goalcomm.channels.discrete import (
    DiscreteChannel,
    message_to_symbols,
    qsc_transmit,
    symbols_to_message,
)
from goalcomm.channels.link import (
    DeterministicDelay,
    Delivery,
    LinkModel,
    ShiftedExponential,
    transmit,
)
from goalcomm.channels.mac import GaussianMAC, MacOutput, PowerLimitError, mac_superpose

__all__ = [
    "Delivery",
    "DeterministicDelay",
    "DiscreteChannel",
    "GaussianMAC",
    "LinkModel",
    "MacOutput",
    "PowerLimitError",
    "ShiftedExponential",
    "mac_superpose",
    "message_to_symbols",
    "qsc_transmit",
    "symbols_to_message",
    "transmit",
]
