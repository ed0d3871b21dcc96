"""Closed-loop frame generation: each station regenerates a frame an
exponentially distributed time after its previous frame was delivered.

At most one frame is outstanding per station at any time.  A frame generated
at time t becomes eligible at the first slot boundary strictly after t.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np


@dataclass
class ArrivalState:
    """Per-station arrival bookkeeping.

    Exactly one of the two fields is active: either the next frame is still
    in the future (``next_arrival_at``) or an undelivered frame is pending
    (``pending_since`` holds its generation timestamp).
    """

    next_arrival_at: Optional[float] = None
    pending_since: Optional[float] = None

    @property
    def has_pending(self) -> bool:
        return self.pending_since is not None


def station_rng(seed: int, station: int) -> np.random.Generator:
    """Independent per-station random sub-stream derived from (seed, station)."""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(station + 1)[-1])


def schedule_next_arrival(
    now: float, rate: float, rng: np.random.Generator
) -> float:
    """Time of the next frame generation: now + Exp(mean 1/rate), strictly > now."""
    if not rate > 0:
        raise ValueError("rate must be > 0")
    draw = 0.0
    while draw <= 0.0:
        draw = rng.exponential(1.0 / rate)
    return now + draw


def frames_becoming_pending(
    states: List[ArrivalState], slot_start: float
) -> List[int]:
    """Promote due arrivals and return the station ids that became pending.

    A frame whose generation time is strictly before ``slot_start`` can first
    be advertised by the trigger frame at ``slot_start``; a frame generated
    exactly at the boundary waits for the following one.
    """
    promoted = []
    for station, st in enumerate(states):
        if st.next_arrival_at is not None and st.next_arrival_at < slot_start:
            st.pending_since = st.next_arrival_at
            st.next_arrival_at = None
            promoted.append(station)
    return promoted
