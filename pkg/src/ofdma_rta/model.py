"""Shared domain vocabulary: configuration, schedules, intents and outcomes.

Conventions used throughout the package:
  * station ids are dense integers 0..N-1,
  * RU indices are 0..f_max-1; the first f_ra of them are the random-access
    RUs, deterministic assignments use indices from f_ra upwards,
  * a slot is an opaque fixed-duration period (trigger frame + uplink
    transmissions + block ack); its internal timing is not modelled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple


class Algorithm(Enum):
    UORA = "uora"
    CRA = "cra"


class ConfigError(ValueError):
    """A simulation configuration violates an invariant."""


@dataclass(frozen=True)
class SimConfig:
    """Full parameterization of one simulation run."""

    n_stations: int
    f_ra: int = 6
    f_max: int = 18
    arrival_rate: float = 200.0      # regeneration rate, 1/s
    slot_duration: float = 250e-6    # s
    algorithm: Algorithm = Algorithm.CRA
    ocw_min: int = 7                 # 2**3 - 1
    ocw_max: int = 31                # 2**5 - 1
    deadline: float = 1e-3           # s
    horizon_slots: int = 40_000_000
    warmup_slots: int = 10_000
    seed: int = 1


def validate_config(cfg: SimConfig) -> SimConfig:
    """Return ``cfg`` unchanged if every invariant holds, raise ConfigError otherwise."""
    if cfg.n_stations < 0:
        raise ConfigError("n_stations must be >= 0")
    if cfg.f_ra < 1:
        raise ConfigError("f_ra must be >= 1")
    if cfg.f_ra > cfg.f_max:
        raise ConfigError("f_ra exceeds f_max")
    if not cfg.arrival_rate > 0:
        raise ConfigError("arrival_rate must be > 0")
    if not cfg.slot_duration > 0:
        raise ConfigError("slot_duration must be > 0")
    if not cfg.deadline > 0:
        raise ConfigError("deadline must be > 0")
    if cfg.ocw_min < 0:
        raise ConfigError("ocw_min must be >= 0")
    if cfg.ocw_min > cfg.ocw_max:
        raise ConfigError("ocw_min exceeds ocw_max")
    if cfg.horizon_slots < 1:
        raise ConfigError("horizon_slots must be >= 1")
    if not cfg.warmup_slots < cfg.horizon_slots:
        raise ConfigError("warmup_slots must be < horizon_slots")
    if cfg.warmup_slots < 0:
        raise ConfigError("warmup_slots must be >= 0")
    return cfg


@dataclass(frozen=True)
class SlotSchedule:
    """The AP's RU allocation for one slot."""

    ra_rus: Tuple[int, ...]
    det_assignments: Dict[int, int]  # RU index -> station id
    slot_index: int = 0

    def __post_init__(self):
        ra = set(self.ra_rus)
        det = set(self.det_assignments)
        if ra & det:
            raise ValueError("RA RUs and deterministic RUs must be disjoint")
        stations = list(self.det_assignments.values())
        if len(stations) != len(set(stations)):
            raise ValueError("a station may hold at most one deterministic RU")

    @property
    def n_allocated(self) -> int:
        return len(self.ra_rus) + len(self.det_assignments)

    def station_ru(self, station: int) -> Optional[int]:
        """Deterministic RU assigned to ``station`` in this slot, if any."""
        for ru, sta in self.det_assignments.items():
            if sta == station:
                return ru
        return None


class IntentKind(Enum):
    RANDOM_ACCESS = "ra"
    DETERMINISTIC = "det"


@dataclass(frozen=True)
class TransmissionIntent:
    station: int
    ru: int
    kind: IntentKind


class RuState(Enum):
    IDLE = "idle"
    SUCCESS = "success"
    COLLISION = "collision"


@dataclass(frozen=True)
class SlotOutcome:
    """Per-RU result of a slot as observed by the AP (tri-state per RU)."""

    per_ru: Dict[int, Tuple[RuState, Optional[int]]]
    had_ra_collision: bool

    def successes(self) -> List[Tuple[int, int]]:
        """(ru, station) pairs delivered in this slot."""
        return [
            (ru, sta)
            for ru, (state, sta) in self.per_ru.items()
            if state is RuState.SUCCESS
        ]


@dataclass(frozen=True)
class FrameRecord:
    station: int
    generated_at: float
    delivered_at: float
    attempts: int


def resolve_slot(
    schedule: SlotSchedule, intents: Sequence[TransmissionIntent]
) -> SlotOutcome:
    """Resolve one slot: 0 intents on an RU -> idle, 1 -> success, >=2 -> collision.

    Violated preconditions (duplicate station, intent on an RU the station is
    not entitled to) are programming errors and raise ValueError.
    """
    seen = set()
    per_ru_stations: Dict[int, List[int]] = {ru: [] for ru in schedule.ra_rus}
    for ru in schedule.det_assignments:
        per_ru_stations[ru] = []

    for intent in intents:
        if intent.station in seen:
            raise ValueError(f"station {intent.station} appears in two intents")
        seen.add(intent.station)
        if intent.kind is IntentKind.RANDOM_ACCESS:
            if intent.ru not in schedule.ra_rus:
                raise ValueError(f"RU {intent.ru} is not a random-access RU")
        else:
            if schedule.det_assignments.get(intent.ru) != intent.station:
                raise ValueError(
                    f"RU {intent.ru} is not assigned to station {intent.station}"
                )
        per_ru_stations[intent.ru].append(intent.station)

    per_ru: Dict[int, Tuple[RuState, Optional[int]]] = {}
    had_ra_collision = False
    ra_set = set(schedule.ra_rus)
    for ru, stations in per_ru_stations.items():
        if not stations:
            per_ru[ru] = (RuState.IDLE, None)
        elif len(stations) == 1:
            per_ru[ru] = (RuState.SUCCESS, stations[0])
        else:
            per_ru[ru] = (RuState.COLLISION, None)
            if ru in ra_set:
                had_ra_collision = True
    return SlotOutcome(per_ru=per_ru, had_ra_collision=had_ra_collision)
