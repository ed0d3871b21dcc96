"""Aggregation of frame records and slot logs into run-level metrics.

Three headline quantities per run: average delay, the fraction of frames
later than the deadline, and the share of RUs left to non-real-time
traffic.  Delay sums are kept as exact rationals so that merging partial
results from independent runs is associative and agrees exactly with
aggregating the concatenated streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .model import FrameRecord, SimConfig

_Z95 = 1.959963984540054  # two-sided 95% normal quantile


def wilson_interval(successes: int, trials: int) -> Tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes must be in [0, trials]")
    z = _Z95
    n = trials
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n))
    return max(0.0, center - half), min(1.0, center + half)


def binomial_ci(successes: int, trials: int) -> float:
    """Half-width of the 95% Wilson score interval."""
    lo, hi = wilson_interval(successes, trials)
    return (hi - lo) / 2.0


@dataclass
class RunMetrics:
    """Aggregated result of one run (or of several merged runs)."""

    n_delivered: int
    sum_delay: Fraction              # exact sum of delay samples, seconds
    n_late: int                      # delay strictly greater than the deadline
    delay_histogram: np.ndarray      # int64 counts, bin width = slot_duration
    free_ru_total: int               # RUs left unallocated, summed over slots
    cycle_slots: int                 # slots carrying deterministic RUs
    n_slots: int                     # logged (post-warmup) slots
    f_max: int
    slot_duration: float
    deadline: float
    n_generated: int = 0             # frames promoted to pending, whole run
    n_delivered_total: int = 0       # deliveries including warm-up
    n_pending_end: int = 0           # frames still pending at the horizon

    @property
    def mean_delay(self) -> Optional[float]:
        if self.n_delivered == 0:
            return None
        return float(self.sum_delay / self.n_delivered)

    @property
    def p_late(self) -> Optional[float]:
        if self.n_delivered == 0:
            return None
        return self.n_late / self.n_delivered

    @property
    def p_late_ci95(self) -> Optional[float]:
        if self.n_delivered == 0:
            return None
        return binomial_ci(self.n_late, self.n_delivered)

    @property
    def p_late_upper95(self) -> Optional[float]:
        if self.n_delivered == 0:
            return None
        return wilson_interval(self.n_late, self.n_delivered)[1]

    @property
    def non_rta_share(self) -> float:
        if self.n_slots == 0:
            return 0.0
        return self.free_ru_total / (self.n_slots * self.f_max)

    @property
    def slots_in_cycle_fraction(self) -> float:
        if self.n_slots == 0:
            return 0.0
        return self.cycle_slots / self.n_slots

    def __eq__(self, other) -> bool:
        if not isinstance(other, RunMetrics):
            return NotImplemented
        return (
            self.n_delivered == other.n_delivered
            and self.sum_delay == other.sum_delay
            and self.n_late == other.n_late
            and np.array_equal(self.delay_histogram, other.delay_histogram)
            and self.free_ru_total == other.free_ru_total
            and self.cycle_slots == other.cycle_slots
            and self.n_slots == other.n_slots
            and self.f_max == other.f_max
            and self.slot_duration == other.slot_duration
            and self.deadline == other.deadline
            and self.n_generated == other.n_generated
            and self.n_delivered_total == other.n_delivered_total
            and self.n_pending_end == other.n_pending_end
        )


def aggregate(
    records: Iterable[FrameRecord],
    slot_log: Iterable[Tuple[int, int, bool]],
    cfg: SimConfig,
) -> RunMetrics:
    """Fold delivered frames and per-slot (ra, det, collision) entries.

    Both streams must come from one completed run with warm-up already
    excluded.  Delays are accumulated as exact rationals.
    """
    n_delivered = 0
    sum_delay = Fraction(0)
    n_late = 0
    hist_counts: dict[int, int] = {}
    slot = cfg.slot_duration

    for rec in records:
        delay = rec.delivered_at - rec.generated_at
        n_delivered += 1
        sum_delay += Fraction(delay)
        if delay > cfg.deadline:
            n_late += 1
        b = int(delay / slot)
        hist_counts[b] = hist_counts.get(b, 0) + 1

    n_slots = 0
    free_ru_total = 0
    cycle_slots = 0
    for ra_count, det_count, _collision in slot_log:
        n_slots += 1
        free_ru_total += cfg.f_max - ra_count - det_count
        if det_count > 0:
            cycle_slots += 1

    n_bins = max(hist_counts) + 1 if hist_counts else 1
    hist = np.zeros(n_bins, dtype=np.int64)
    for b, c in hist_counts.items():
        hist[b] = c

    return RunMetrics(
        n_delivered=n_delivered,
        sum_delay=sum_delay,
        n_late=n_late,
        delay_histogram=hist,
        free_ru_total=free_ru_total,
        cycle_slots=cycle_slots,
        n_slots=n_slots,
        f_max=cfg.f_max,
        slot_duration=cfg.slot_duration,
        deadline=cfg.deadline,
    )


def merge(a: RunMetrics, b: RunMetrics) -> RunMetrics:
    """Combine metrics of two disjoint runs; exact for counts and delay sums."""
    if (a.f_max, a.slot_duration, a.deadline) != (b.f_max, b.slot_duration, b.deadline):
        raise ValueError("cannot merge metrics with differing fixed parameters")
    n_bins = max(len(a.delay_histogram), len(b.delay_histogram))
    hist = np.zeros(n_bins, dtype=np.int64)
    hist[: len(a.delay_histogram)] += a.delay_histogram
    hist[: len(b.delay_histogram)] += b.delay_histogram
    return RunMetrics(
        n_delivered=a.n_delivered + b.n_delivered,
        sum_delay=a.sum_delay + b.sum_delay,
        n_late=a.n_late + b.n_late,
        delay_histogram=hist,
        free_ru_total=a.free_ru_total + b.free_ru_total,
        cycle_slots=a.cycle_slots + b.cycle_slots,
        n_slots=a.n_slots + b.n_slots,
        f_max=a.f_max,
        slot_duration=a.slot_duration,
        deadline=a.deadline,
        n_generated=a.n_generated + b.n_generated,
        n_delivered_total=a.n_delivered_total + b.n_delivered_total,
        n_pending_end=a.n_pending_end + b.n_pending_end,
    )


def merge_all(parts: Sequence[RunMetrics]) -> RunMetrics:
    if not parts:
        raise ValueError("nothing to merge")
    out = parts[0]
    for p in parts[1:]:
        out = merge(out, p)
    return out
