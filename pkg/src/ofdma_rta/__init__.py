"""Slotted simulator of trigger-based uplink OFDMA with random access and
cyclic deterministic resource assignment."""

from .model import (
    Algorithm,
    ConfigError,
    FrameRecord,
    SimConfig,
    SlotOutcome,
    SlotSchedule,
    TransmissionIntent,
    resolve_slot,
    validate_config,
)
from .engine import run
from .stats import RunMetrics, aggregate, binomial_ci, merge, merge_all

__all__ = [
    "Algorithm",
    "ConfigError",
    "FrameRecord",
    "RunMetrics",
    "SimConfig",
    "SlotOutcome",
    "SlotSchedule",
    "TransmissionIntent",
    "aggregate",
    "binomial_ci",
    "merge",
    "merge_all",
    "resolve_slot",
    "run",
    "validate_config",
]

__version__ = "0.1.0"
