"""Independent reference models used only by tests.

Two routes that never touch the simulation loop:

* a delay law for the single-station case, evaluated by numeric
  quadrature of the arrival-offset distribution;
* an exact finite Markov chain over per-slot states for two-station
  micro-configurations, solved for its stationary distribution.  The mean
  number of slots a frame stays pending follows from the ratio of the
  stationary pending population to the delivery rate (Little's law); the
  sub-slot part of the delay is added analytically.

Both exploit the same structural fact: regeneration clocks always start at
slot boundaries, so the offset of an arrival inside its slot is a truncated
exponential independent of everything the protocol does afterwards.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np
from scipy import integrate

from .model import Algorithm, SimConfig, validate_config


class ReducibleChainError(ValueError):
    """The transition matrix has no unique stationary distribution."""


def mean_eligibility_residual(rate: float, slot: float) -> float:
    """Mean time from a frame's generation to the next slot boundary.

    The generation clock starts at a slot boundary, so the offset within the
    arrival slot is Exp(rate) truncated to [0, slot); the residual is the
    complement to the slot length.
    """
    # algebraically slot / (1 - exp(-a)) - 1/rate with a = rate * slot,
    # rearranged through expm1 to avoid cancellation at small a
    a = rate * slot
    return (a + math.expm1(-a)) / (rate * -math.expm1(-a))


def single_station_delay_law(cfg: SimConfig) -> Tuple[float, str]:
    """Exact mean delay for one station under the cyclic scheduler.

    With a single station there is never contention: a frame generated at
    offset x inside a slot is delivered at the end of the next slot, after
    slot - x + slot seconds.  The offset density is the truncated
    exponential; the mean is evaluated by quadrature.
    """
    cfg = validate_config(cfg)
    if cfg.n_stations != 1 or cfg.algorithm is not Algorithm.CRA or cfg.f_ra < 1:
        raise ValueError("the single-station law requires N=1 under the cyclic scheduler")
    lam = cfg.arrival_rate
    T = cfg.slot_duration
    norm = 1.0 - math.exp(-lam * T)

    def offset_density(x: float) -> float:
        return lam * math.exp(-lam * x) / norm

    mean_offset, _err = integrate.quad(lambda x: x * offset_density(x), 0.0, T)
    mean = 2.0 * T - mean_offset
    law = (
        "delay = 2*slot - X with X the generation offset inside its slot, "
        "X ~ Exp(rate) truncated to [0, slot)"
    )
    return mean, law


@dataclass
class ChainSpec:
    """Finite slot-to-slot chain with the rewards needed for mean delay."""

    states: List[tuple]
    transition: np.ndarray       # row-stochastic
    pending_counts: np.ndarray   # frames pending at the trigger frame, per state
    delivery_rates: np.ndarray   # expected deliveries in the slot, per state
    slot_duration: float
    mean_residual: float         # analytic sub-slot delay component


def stationary_distribution(transition: np.ndarray) -> np.ndarray:
    """Stationary row vector of a row-stochastic matrix; unique or error."""
    P = np.asarray(transition, dtype=float)
    m = P.shape[0]
    if P.shape != (m, m):
        raise ValueError("transition matrix must be square")
    if np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-12:
        raise ValueError("transition matrix rows must sum to 1")
    A = P.T - np.eye(m)
    if np.linalg.matrix_rank(A, tol=1e-10) < m - 1:
        raise ReducibleChainError("chain has no unique stationary distribution")
    A[-1, :] = 1.0
    b = np.zeros(m)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    if np.min(pi) < -1e-9:
        raise ReducibleChainError("stationary solve produced negative mass")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def solve_chain(spec: ChainSpec) -> float:
    """Stationary mean frame delay (seconds) implied by the chain."""
    pi = stationary_distribution(spec.transition)
    pending = float(pi @ spec.pending_counts)
    deliveries = float(pi @ spec.delivery_rates)
    if deliveries <= 0:
        raise ReducibleChainError("chain never delivers frames")
    mean_slots = pending / deliveries
    return mean_slots * spec.slot_duration + spec.mean_residual


# --- two-station chain construction -------------------------------------
#
# Station status at a trigger frame (after arrival promotion):
#   cyclic scheduler: 'W' (waiting for a frame) or 'P' (frame pending)
#   random access:    ('W', ocw) or ('P', obo, ocw)
# Scheduler status for the cyclic algorithm:
#   ('Q',)            quiet, no collision in the previous slot
#   ('S',)            a (re)shuffle happens before this slot's group
#   ('C', order, c)   cycle in progress, next group starts at index c

_QUIET = ("Q",)
_SHUFFLE = ("S",)


def _cra_sched_branches(sched, n: int, group_cap: int):
    """Enumerate (prob, det_group, next_sched_of_collision_flag) for a slot."""
    branches = []
    if sched == _QUIET:
        branches.append((1.0, (), lambda col: _SHUFFLE if col else _QUIET))
    else:
        if sched == _SHUFFLE:
            orders = list(itertools.permutations(range(n)))
            weight = 1.0 / len(orders)
            starts = [(weight, o, 0) for o in orders]
        else:
            _, order, cursor = sched
            starts = [(1.0, order, cursor)]
        for prob, order, cursor in starts:
            size = min(group_cap, n - cursor)
            group = order[cursor : cursor + size]
            new_cursor = cursor + size

            def nxt(col, order=order, new_cursor=new_cursor):
                if not col:
                    return _QUIET
                if new_cursor >= n:
                    return _SHUFFLE
                return ("C", order, new_cursor)

            branches.append((prob, group, nxt))
    return branches


def build_cra_chain(cfg: SimConfig) -> ChainSpec:
    """Exact slot chain for two stations under the cyclic scheduler."""
    cfg = validate_config(cfg)
    if cfg.n_stations != 2 or cfg.algorithm is not Algorithm.CRA:
        raise ValueError("chain oracle covers exactly two stations")
    if cfg.f_max - cfg.f_ra < 1:
        raise ValueError("cyclic scheduler needs at least one deterministic RU")
    n = 2
    p_arrival = 1.0 - math.exp(-cfg.arrival_rate * cfg.slot_duration)
    collide = 1.0 / cfg.f_ra

    transitions: Dict[tuple, Dict[tuple, float]] = {}
    deliveries: Dict[tuple, float] = {}
    initial = (("W", "W"), _QUIET)
    frontier = [initial]
    while frontier:
        state = frontier.pop()
        if state in transitions:
            continue
        row: Dict[tuple, float] = {}
        transitions[state] = row
        deliveries[state] = 0.0
        statuses, sched = state
        pending = [statuses[s] == "P" for s in range(n)]

        for prob_s, group, nxt in _cra_sched_branches(sched, n, cfg.f_max - cfg.f_ra):
            det_success = [s for s in group if pending[s]]
            ra = [s for s in range(n) if pending[s] and s not in group]
            if len(ra) == 2:
                ra_branches = [(collide, [], True), (1.0 - collide, ra, False)]
            elif len(ra) == 1:
                ra_branches = [(1.0, ra, False)]
            else:
                ra_branches = [(1.0, [], False)]
            for prob_ra, ra_success, col in ra_branches:
                delivered = set(det_success) | set(ra_success)
                prob_slot = prob_s * prob_ra
                deliveries[state] += prob_slot * len(delivered)
                next_sched = nxt(col)
                # arrival branches per station
                per_station = []
                for s in range(n):
                    if s in delivered:
                        per_station.append([(1.0, "W")])
                    elif pending[s]:
                        per_station.append([(1.0, "P")])
                    else:
                        per_station.append([(p_arrival, "P"), (1.0 - p_arrival, "W")])
                for combo in itertools.product(*per_station):
                    prob = prob_slot
                    new_status = []
                    for q, st in combo:
                        prob *= q
                        new_status.append(st)
                    if prob == 0.0:
                        continue
                    nstate = (tuple(new_status), next_sched)
                    row[nstate] = row.get(nstate, 0.0) + prob
                    if nstate not in transitions:
                        frontier.append(nstate)

    return _finish_chain(transitions, deliveries, cfg, pending_marker="P")


def build_uora_chain(cfg: SimConfig) -> ChainSpec:
    """Exact slot chain for two stations under plain random-access back-off."""
    cfg = validate_config(cfg)
    if cfg.n_stations != 2 or cfg.algorithm is not Algorithm.UORA:
        raise ValueError("chain oracle covers exactly two stations")
    n = 2
    p_arrival = 1.0 - math.exp(-cfg.arrival_rate * cfg.slot_duration)
    collide = 1.0 / cfg.f_ra

    def obo_draws(ocw: int):
        if ocw <= 1:
            return [(1.0, 0)]
        return [(1.0 / ocw, v) for v in range(ocw)]

    transitions: Dict[tuple, Dict[tuple, float]] = {}
    deliveries: Dict[tuple, float] = {}
    initial = ((("W", cfg.ocw_min), ("W", cfg.ocw_min)), None)
    frontier = [initial]
    while frontier:
        state = frontier.pop()
        if state in transitions:
            continue
        row: Dict[tuple, float] = {}
        transitions[state] = row
        deliveries[state] = 0.0
        statuses, _ = state

        # trigger-frame reaction: defer or transmit
        reacted = []
        transmitters = []
        for s in range(n):
            st = statuses[s]
            if st[0] == "W":
                reacted.append(st)
            else:
                _, obo, ocw = st
                if obo > cfg.f_ra:
                    reacted.append(("P", obo - cfg.f_ra, ocw))
                else:
                    transmitters.append(s)
                    reacted.append(("P", 0, ocw))

        if len(transmitters) == 2:
            slot_branches = [(collide, [], True), (1.0 - collide, transmitters, False)]
        elif len(transmitters) == 1:
            slot_branches = [(1.0, transmitters, False)]
        else:
            slot_branches = [(1.0, [], False)]

        for prob_slot, delivered, collided in slot_branches:
            deliveries[state] += prob_slot * len(delivered)
            per_station = []
            for s in range(n):
                st = reacted[s]
                if s in delivered:
                    per_station.append([(1.0, ("W", cfg.ocw_min))])
                elif s in transmitters and collided:
                    new_ocw = min(2 * st[2] + 1, cfg.ocw_max)
                    per_station.append(
                        [(q, ("P", obo, new_ocw)) for q, obo in obo_draws(new_ocw)]
                    )
                elif st[0] == "P":
                    per_station.append([(1.0, st)])
                else:
                    _, ocw = st
                    arrivals = [
                        (p_arrival * q, ("P", obo, ocw)) for q, obo in obo_draws(ocw)
                    ]
                    arrivals.append((1.0 - p_arrival, ("W", ocw)))
                    per_station.append(arrivals)
            for combo in itertools.product(*per_station):
                prob = prob_slot
                new_status = []
                for q, st in combo:
                    prob *= q
                    new_status.append(st)
                if prob == 0.0:
                    continue
                nstate = (tuple(new_status), None)
                row[nstate] = row.get(nstate, 0.0) + prob
                if nstate not in transitions:
                    frontier.append(nstate)

    return _finish_chain(transitions, deliveries, cfg, pending_marker="P")


def _finish_chain(
    transitions: Dict[tuple, Dict[tuple, float]],
    deliveries: Dict[tuple, float],
    cfg: SimConfig,
    pending_marker: str,
) -> ChainSpec:
    states = sorted(transitions, key=repr)
    index = {s: i for i, s in enumerate(states)}
    m = len(states)
    P = np.zeros((m, m))
    pend = np.zeros(m)
    deliv = np.zeros(m)
    for s, row in transitions.items():
        i = index[s]
        for t, q in row.items():
            P[i, index[t]] += q
        statuses = s[0]
        pend[i] = sum(1 for st in statuses if st[0] == pending_marker)
        deliv[i] = deliveries[s]
    return ChainSpec(
        states=states,
        transition=P,
        pending_counts=pend,
        delivery_rates=deliv,
        slot_duration=cfg.slot_duration,
        mean_residual=mean_eligibility_residual(cfg.arrival_rate, cfg.slot_duration),
    )
