"""JIT-compiled slot loop used for production-length runs.

Semantically identical to the reference engine in :mod:`ofdma_rta.engine`
but operates on flat arrays and a single seeded random stream, which makes
simulating 10^7..10^8 slots per run practical.  Compiled code is cached on
disk, so only the first call in a fresh environment pays for compilation.
"""

from __future__ import annotations

import numpy as np
from numba import njit

ALG_UORA = 0
ALG_CRA = 1

HIST_BINS = 1 << 16  # delays above HIST_BINS slots land in the last bin


@njit(cache=True, inline="always")
def _draw_obo(ocw):
    if ocw <= 1:
        return 0
    return np.random.randint(0, ocw)


@njit(cache=True)
def run_kernel(
    n,
    f_ra,
    f_max,
    rate,
    slot,
    algorithm,
    ocw_min,
    ocw_max,
    deadline,
    horizon,
    warmup,
    seed,
):
    """Simulate ``horizon`` slots; returns raw accumulators.

    Returns (n_delivered, sum_delay, n_late, hist, free_ru_total,
    cycle_slots, n_slots, n_generated, n_delivered_total, n_pending_end).
    """
    np.random.seed(seed)
    inv_rate = 1.0 / rate

    next_arrival = np.empty(n, np.float64)
    for s in range(n):
        e = np.random.exponential(inv_rate)
        while e <= 0.0:
            e = np.random.exponential(inv_rate)
        next_arrival[s] = e
    pending = np.zeros(n, np.bool_)
    gen_time = np.zeros(n, np.float64)
    obo = np.zeros(n, np.int64)
    ocw = np.full(n, ocw_min, np.int64)
    order = np.arange(n)
    cursor = 0
    cycling = False
    prev_collision = False

    ru_count = np.zeros(f_ra, np.int64)
    chosen = np.full(n, -1, np.int64)
    in_det = np.zeros(n, np.bool_)

    hist = np.zeros(HIST_BINS, np.int64)
    n_delivered = 0
    sum_delay = 0.0
    n_late = 0
    free_ru_total = 0
    cycle_slots = 0
    n_slots = 0
    n_generated = 0
    n_delivered_total = 0

    for k in range(horizon):
        t0 = k * slot
        t1 = t0 + slot

        # 1. promote due arrivals to pending
        for s in range(n):
            if not pending[s] and next_arrival[s] < t0:
                pending[s] = True
                gen_time[s] = next_arrival[s]
                n_generated += 1
                if algorithm == ALG_UORA:
                    obo[s] = _draw_obo(ocw[s])

        # 2. schedule: deterministic group is order[det_lo:det_hi]
        det_lo = 0
        det_hi = 0
        if algorithm == ALG_CRA and n > 0:
            if prev_collision:
                if not cycling or cursor >= n:
                    # cycle start or wrap: fresh Fisher-Yates shuffle
                    for i in range(n - 1, 0, -1):
                        j = np.random.randint(0, i + 1)
                        tmp = order[i]
                        order[i] = order[j]
                        order[j] = tmp
                    cursor = 0
                    cycling = True
                g = f_max - f_ra
                if g > n - cursor:
                    g = n - cursor
                det_lo = cursor
                det_hi = cursor + g
                cursor += g
                for i in range(det_lo, det_hi):
                    in_det[order[i]] = True
            else:
                cycling = False

        # 3. gather intents
        for r in range(f_ra):
            ru_count[r] = 0
        for s in range(n):
            chosen[s] = -1
            if not pending[s]:
                continue
            if algorithm == ALG_CRA:
                if in_det[s]:
                    continue  # transmits in its deterministic RU only
                c = np.random.randint(0, f_ra)
                chosen[s] = c
                ru_count[c] += 1
            else:
                if obo[s] > f_ra:
                    obo[s] -= f_ra
                else:
                    obo[s] = 0
                    c = np.random.randint(0, f_ra)
                    chosen[s] = c
                    ru_count[c] += 1

        # 4. resolve
        ra_collision = False
        for r in range(f_ra):
            if ru_count[r] >= 2:
                ra_collision = True
                break

        # 5. apply outcomes
        for s in range(n):
            if not pending[s]:
                continue
            success = False
            transmitted = False
            c = chosen[s]
            if c >= 0:
                transmitted = True
                success = ru_count[c] == 1
            elif in_det[s]:
                transmitted = True
                success = True  # deterministic RUs cannot collide
            if not transmitted:
                continue
            if success:
                delay = t1 - gen_time[s]
                n_delivered_total += 1
                if k >= warmup:
                    n_delivered += 1
                    sum_delay += delay
                    if delay > deadline:
                        n_late += 1
                    b = int(delay / slot)
                    if b >= HIST_BINS:
                        b = HIST_BINS - 1
                    hist[b] += 1
                pending[s] = False
                e = np.random.exponential(inv_rate)
                while e <= 0.0:
                    e = np.random.exponential(inv_rate)
                next_arrival[s] = t1 + e
                if algorithm == ALG_UORA:
                    ocw[s] = ocw_min
            else:
                if algorithm == ALG_UORA:
                    w = 2 * ocw[s] + 1
                    if w > ocw_max:
                        w = ocw_max
                    ocw[s] = w
                    obo[s] = _draw_obo(w)

        # 6. slot log
        det_count = det_hi - det_lo
        if k >= warmup:
            n_slots += 1
            free_ru_total += f_max - f_ra - det_count
            if det_count > 0:
                cycle_slots += 1
        for i in range(det_lo, det_hi):
            in_det[order[i]] = False
        prev_collision = ra_collision

    n_pending_end = 0
    for s in range(n):
        if pending[s]:
            n_pending_end += 1

    return (
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
    )
