"""AP-side cyclic resource assignment scheduler.

Every slot carries f_ra always-on random-access RUs.  While the previous
slot was collision-free the scheduler stays quiet.  A random-access
collision starts a cycle: station ids are shuffled and served in groups of
f_max - f_ra deterministic RUs per slot, one group per slot, for as long as
collisions keep occurring.  A collision-free slot stops the cycle; running
past the last station wraps with a fresh shuffle.

Stations without a deterministic RU in the current slot still contend in
random access (contention window forced to 0), so a cycle can be cut short
by an early success.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from .model import (
    IntentKind,
    SlotOutcome,
    SlotSchedule,
    TransmissionIntent,
)


class CraMode(Enum):
    QUIET = "quiet"
    CYCLING = "cycling"


@dataclass(frozen=True)
class CraState:
    n_stations: int
    f_ra: int
    f_max: int
    mode: CraMode = CraMode.QUIET
    order: Tuple[int, ...] = ()   # permutation of station ids, valid in CYCLING
    cursor: int = 0               # next unserved index into order

    @property
    def group_capacity(self) -> int:
        return self.f_max - self.f_ra


def shuffle_order(n: int, rng: np.random.Generator) -> List[int]:
    """Uniformly random permutation of 0..n-1 (all n! outcomes equiprobable)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return rng.permutation(n).tolist()


def next_schedule(
    state: CraState,
    prev: Optional[SlotOutcome],
    rng: np.random.Generator,
    slot_index: int = 0,
) -> Tuple[SlotSchedule, CraState]:
    """Build the next slot's schedule from the previous slot's outcome.

    Mode transitions depend only on whether the previous slot had a
    random-access collision; deterministic RUs cannot collide.
    """
    ra_rus = tuple(range(state.f_ra))
    collided = prev is not None and prev.had_ra_collision

    if not collided or state.n_stations == 0:
        # Quiet (or back to quiet): random access only.
        new_state = replace(state, mode=CraMode.QUIET)
        return SlotSchedule(ra_rus=ra_rus, det_assignments={}, slot_index=slot_index), new_state

    if state.mode is CraMode.QUIET or state.cursor >= state.n_stations:
        # Start of a cycle, or wrap after exhausting all stations: reshuffle.
        order = tuple(shuffle_order(state.n_stations, rng))
        cursor = 0
    else:
        order = state.order
        cursor = state.cursor

    group_size = min(state.group_capacity, state.n_stations - cursor)
    det = {
        state.f_ra + i: order[cursor + i]
        for i in range(group_size)
    }
    new_state = replace(
        state, mode=CraMode.CYCLING, order=order, cursor=cursor + group_size
    )
    return SlotSchedule(ra_rus=ra_rus, det_assignments=det, slot_index=slot_index), new_state


def cra_station_intent(
    station: int,
    schedule: SlotSchedule,
    has_pending: bool,
    rng: np.random.Generator,
) -> Optional[TransmissionIntent]:
    """One station's transmission decision under the cyclic scheduler.

    A station with a deterministic RU uses it exclusively; one without
    contends in a uniformly chosen random-access RU (window forced to 0).
    """
    if not has_pending:
        return None
    ru = schedule.station_ru(station)
    if ru is not None:
        return TransmissionIntent(station=station, ru=ru, kind=IntentKind.DETERMINISTIC)
    pos = int(rng.integers(0, len(schedule.ra_rus)))
    return TransmissionIntent(
        station=station, ru=schedule.ra_rus[pos], kind=IntentKind.RANDOM_ACCESS
    )
