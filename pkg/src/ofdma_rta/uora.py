"""Per-station OFDMA back-off (OBO) state machine for uplink random access.

This is the standard contention behaviour: the back-off counter is drawn
uniformly from {0, ..., OCW-1}; on each trigger frame it is compared with the
number of random-access RUs; the contention window doubles on collision (as
2*ocw + 1, keeping values of the form 2^k - 1) and resets on success.

With ocw_min = ocw_max = 0 every trigger yields an immediate transmission,
which is exactly the random-access behaviour the cyclic scheduler relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass
class BackoffState:
    obo: int
    ocw: int
    ocw_min: int
    ocw_max: int


def draw_obo(ocw: int, rng: np.random.Generator) -> int:
    """Uniform draw from {0, ..., ocw-1}; degenerate windows (ocw <= 1) give 0."""
    if ocw < 0:
        raise ValueError("ocw must be >= 0")
    if ocw <= 1:
        return 0
    return int(rng.integers(0, ocw))


def on_trigger(
    state: BackoffState, num_ra_rus: int, rng: np.random.Generator
) -> Optional[int]:
    """React to a trigger frame while holding a pending frame.

    Returns the chosen position among the ``num_ra_rus`` random-access RUs
    (uniform), or None to defer.  Deferring decreases the counter by
    ``num_ra_rus``; equality transmits ("greater than" is strict).
    """
    if num_ra_rus < 1:
        raise ValueError("num_ra_rus must be >= 1")
    if state.obo > num_ra_rus:
        state.obo -= num_ra_rus
        return None
    state.obo = 0
    return int(rng.integers(0, num_ra_rus))


def on_result(state: BackoffState, success: bool, rng: np.random.Generator) -> BackoffState:
    """Update the window after a transmission.

    Success resets the window to ocw_min; the next OBO is drawn when the next
    frame arrives.  Collision doubles the window (clamped to ocw_max) and
    redraws OBO immediately so it is ready at the very next trigger frame.
    """
    if success:
        state.ocw = state.ocw_min
    else:
        state.ocw = min(2 * state.ocw + 1, state.ocw_max)
        state.obo = draw_obo(state.ocw, rng)
    return state
