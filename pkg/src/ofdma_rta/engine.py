"""Slotted simulation loop.

Two interchangeable backends:

* ``fast`` (default) — the JIT-compiled array kernel in ``_kernel``, meant
  for production-length horizons;
* ``reference`` — a direct, per-slot composition of the model / traffic /
  uora / cra operations, used by unit and property tests and for
  cross-checking the kernel on small configurations.

Both are fully deterministic given the configuration seed; they consume
randomness differently, so they agree statistically, not sample-by-sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import _kernel, traffic, uora
from .cra import CraMode, CraState, cra_station_intent, next_schedule
from .model import (
    Algorithm,
    FrameRecord,
    IntentKind,
    SimConfig,
    SlotOutcome,
    SlotSchedule,
    TransmissionIntent,
    RuState,
    resolve_slot,
    validate_config,
)
from .stats import RunMetrics, aggregate


@dataclass
class EngineState:
    """Mutable state of one reference-backend run."""

    cfg: SimConfig
    now_slot: int = 0
    arrivals: List[traffic.ArrivalState] = field(default_factory=list)
    backoff: List[uora.BackoffState] = field(default_factory=list)  # UORA only
    frame_attempts: List[int] = field(default_factory=list)
    cra_state: Optional[CraState] = None
    prev_outcome: Optional[SlotOutcome] = None
    delivered: List[FrameRecord] = field(default_factory=list)
    slot_log: List[Tuple[int, int, bool]] = field(default_factory=list)
    n_generated: int = 0
    station_rngs: List[np.random.Generator] = field(default_factory=list)
    sched_rng: Optional[np.random.Generator] = None


def make_engine_state(cfg: SimConfig) -> EngineState:
    cfg = validate_config(cfg)
    root = np.random.SeedSequence(cfg.seed)
    children = root.spawn(cfg.n_stations + 1)
    station_rngs = [np.random.default_rng(ss) for ss in children[: cfg.n_stations]]
    sched_rng = np.random.default_rng(children[-1])

    state = EngineState(cfg=cfg)
    state.station_rngs = station_rngs
    state.sched_rng = sched_rng
    for s in range(cfg.n_stations):
        # First arrival behaves as if a delivery happened at t = 0.
        first = traffic.schedule_next_arrival(0.0, cfg.arrival_rate, station_rngs[s])
        state.arrivals.append(traffic.ArrivalState(next_arrival_at=first))
        state.backoff.append(
            uora.BackoffState(obo=0, ocw=cfg.ocw_min, ocw_min=cfg.ocw_min, ocw_max=cfg.ocw_max)
        )
        state.frame_attempts.append(0)
    if cfg.algorithm is Algorithm.CRA:
        state.cra_state = CraState(
            n_stations=cfg.n_stations, f_ra=cfg.f_ra, f_max=cfg.f_max
        )
    return state


def step_slot(state: EngineState) -> EngineState:
    """Execute exactly one slot of the reference backend."""
    cfg = state.cfg
    k = state.now_slot
    t0 = k * cfg.slot_duration
    t1 = t0 + cfg.slot_duration

    # 1. promote due arrivals
    promoted = traffic.frames_becoming_pending(state.arrivals, t0)
    state.n_generated += len(promoted)
    for s in promoted:
        state.frame_attempts[s] = 0
        if cfg.algorithm is Algorithm.UORA:
            state.backoff[s].obo = uora.draw_obo(
                state.backoff[s].ocw, state.station_rngs[s]
            )

    # 2. schedule
    if cfg.algorithm is Algorithm.CRA:
        schedule, state.cra_state = next_schedule(
            state.cra_state, state.prev_outcome, state.sched_rng, slot_index=k
        )
    else:
        schedule = SlotSchedule(
            ra_rus=tuple(range(cfg.f_ra)), det_assignments={}, slot_index=k
        )

    # 3. gather intents (at most one per station, enforced by resolve_slot)
    intents: List[TransmissionIntent] = []
    for s in range(cfg.n_stations):
        if not state.arrivals[s].has_pending:
            continue
        if cfg.algorithm is Algorithm.CRA:
            intent = cra_station_intent(s, schedule, True, state.station_rngs[s])
            if intent is not None:
                intents.append(intent)
        else:
            pos = uora.on_trigger(state.backoff[s], cfg.f_ra, state.station_rngs[s])
            if pos is not None:
                intents.append(
                    TransmissionIntent(
                        station=s, ru=schedule.ra_rus[pos], kind=IntentKind.RANDOM_ACCESS
                    )
                )

    # 4. resolve
    outcome = resolve_slot(schedule, intents)

    # 5. apply per-station results
    transmitted = {i.station for i in intents} | {
        sta
        for ru, sta in schedule.det_assignments.items()
        if state.arrivals[sta].has_pending
    }
    succeeded = {sta for _ru, sta in outcome.successes()}
    for s in transmitted:
        state.frame_attempts[s] += 1
        if s in succeeded:
            state.delivered.append(
                FrameRecord(
                    station=s,
                    generated_at=state.arrivals[s].pending_since,
                    delivered_at=t1,
                    attempts=state.frame_attempts[s],
                )
            )
            state.arrivals[s].pending_since = None
            state.arrivals[s].next_arrival_at = traffic.schedule_next_arrival(
                t1, cfg.arrival_rate, state.station_rngs[s]
            )
            if cfg.algorithm is Algorithm.UORA:
                uora.on_result(state.backoff[s], True, state.station_rngs[s])
        else:
            if cfg.algorithm is Algorithm.UORA:
                uora.on_result(state.backoff[s], False, state.station_rngs[s])

    # 6. log
    state.slot_log.append(
        (len(schedule.ra_rus), len(schedule.det_assignments), outcome.had_ra_collision)
    )
    state.prev_outcome = outcome
    state.now_slot += 1
    return state


def run_reference(cfg: SimConfig) -> RunMetrics:
    """Run the pure-Python backend over the full horizon and aggregate."""
    state = make_engine_state(cfg)
    for _ in range(cfg.horizon_slots):
        step_slot(state)
    warmup_end = cfg.warmup_slots * cfg.slot_duration
    records = [r for r in state.delivered if r.delivered_at > warmup_end]
    metrics = aggregate(records, state.slot_log[cfg.warmup_slots :], cfg)
    metrics.n_generated = state.n_generated
    metrics.n_delivered_total = len(state.delivered)
    metrics.n_pending_end = sum(a.has_pending for a in state.arrivals)
    return metrics


def run_fast(cfg: SimConfig) -> RunMetrics:
    """Run the JIT kernel backend over the full horizon."""
    cfg = validate_config(cfg)
    alg = _kernel.ALG_CRA if cfg.algorithm is Algorithm.CRA else _kernel.ALG_UORA
    (
        n_delivered,
        sum_delay,
        n_late,
        hist,
        free_ru_total,
        cycle_slots,
        n_slots,
        n_generated,
        n_delivered_total,
        n_pending_end,
    ) = _kernel.run_kernel(
        cfg.n_stations,
        cfg.f_ra,
        cfg.f_max,
        cfg.arrival_rate,
        cfg.slot_duration,
        alg,
        cfg.ocw_min,
        cfg.ocw_max,
        cfg.deadline,
        cfg.horizon_slots,
        cfg.warmup_slots,
        cfg.seed & 0xFFFFFFFF,
    )
    last = int(np.max(np.nonzero(hist)[0])) if hist.any() else 0
    return RunMetrics(
        n_delivered=int(n_delivered),
        sum_delay=Fraction(sum_delay),
        n_late=int(n_late),
        delay_histogram=hist[: last + 1].copy(),
        free_ru_total=int(free_ru_total),
        cycle_slots=int(cycle_slots),
        n_slots=int(n_slots),
        f_max=cfg.f_max,
        slot_duration=cfg.slot_duration,
        deadline=cfg.deadline,
        n_generated=int(n_generated),
        n_delivered_total=int(n_delivered_total),
        n_pending_end=int(n_pending_end),
    )


def run(cfg: SimConfig, backend: str = "fast") -> RunMetrics:
    """Simulate one configured run and return its aggregated metrics."""
    if backend == "fast":
        return run_fast(cfg)
    if backend == "reference":
        return run_reference(cfg)
    raise ValueError(f"unknown backend: {backend!r}")
