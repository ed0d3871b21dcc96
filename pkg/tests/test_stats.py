import dataclasses
import math

import numpy as np
import pytest

from ofdma_rta.model import Algorithm, FrameRecord, SimConfig
from ofdma_rta.stats import aggregate, binomial_ci, merge, merge_all, wilson_interval


def cfg(**kw):
    defaults = dict(
        n_stations=5, f_ra=6, f_max=18, horizon_slots=100, warmup_slots=0
    )
    defaults.update(kw)
    return SimConfig(**defaults)


def rec(delay, station=0, gen=1.0):
    return FrameRecord(station=station, generated_at=gen, delivered_at=gen + delay, attempts=1)


class TestAggregate:
    def test_hand_computed_example(self):
        c = cfg()
        m = aggregate([rec(0.5e-3), rec(1.5e-3)], [(6, 0, False)], c)
        assert m.p_late == 0.5
        assert m.mean_delay == pytest.approx(1.0e-3)

    def test_all_on_time(self):
        m = aggregate([rec(0.4e-3), rec(0.9e-3)], [], cfg())
        assert m.p_late == 0.0

    def test_empty_run_reports_undefined(self):
        m = aggregate([], [(6, 0, False)], cfg())
        assert m.n_delivered == 0
        assert m.mean_delay is None
        assert m.p_late is None
        assert m.p_late_ci95 is None

    def test_uora_share_is_exact(self):
        m = aggregate([], [(6, 0, False)] * 1000, cfg())
        assert m.non_rta_share == 12 / 18

    def test_cra_share_counts_deterministic_rus(self):
        m = aggregate([], [(6, 12, True), (6, 0, False)], cfg())
        assert m.non_rta_share == pytest.approx((0 + 12) / 36)
        assert m.slots_in_cycle_fraction == 0.5

    def test_histogram_totals_and_mean(self):
        c = cfg()
        delays = [0.3e-3, 0.6e-3, 0.61e-3, 2.2e-3]
        m = aggregate([rec(d) for d in delays], [], c)
        assert int(m.delay_histogram.sum()) == 4
        centers = (np.arange(len(m.delay_histogram)) + 0.5) * c.slot_duration
        hist_mean = float(centers @ m.delay_histogram) / 4
        assert abs(hist_mean - m.mean_delay) <= c.slot_duration


class TestBinomialCi:
    def test_zero_successes_rule_of_three_scale(self):
        n = 10**7
        lo, hi = wilson_interval(0, n)
        assert lo == 0.0
        # same order as the rule-of-three bound 3/n
        assert 3.0e-7 < hi < 4.0e-7

    def test_symmetric_at_half(self):
        lo, hi = wilson_interval(5, 10)
        assert lo + hi == pytest.approx(1.0)
        assert binomial_ci(5, 10) == pytest.approx((hi - lo) / 2)

    def test_zero_trials_rejected(self):
        with pytest.raises(ValueError):
            binomial_ci(0, 0)

    def test_halfwidth_positive(self):
        assert binomial_ci(1, 100) > 0


class TestMerge:
    def test_merge_equals_concatenated_aggregate(self):
        c = cfg()
        recs = [rec(0.0003 * (i % 7 + 1), station=i % 3) for i in range(50)]
        log = [(6, 12 if i % 4 == 0 else 0, False) for i in range(30)]
        a = aggregate(recs[:20], log[:10], c)
        b = aggregate(recs[20:], log[10:], c)
        whole = aggregate(recs, log, c)
        merged = merge(a, b)
        assert merged.sum_delay == whole.sum_delay
        assert merged.mean_delay == whole.mean_delay
        assert merged.p_late == whole.p_late
        assert merged.non_rta_share == whole.non_rta_share
        assert np.array_equal(merged.delay_histogram, whole.delay_histogram)

    def test_merge_rejects_mismatched_parameters(self):
        a = aggregate([rec(1e-4)], [], cfg())
        b = aggregate([rec(1e-4)], [], cfg(f_max=9))
        with pytest.raises(ValueError):
            merge(a, b)

    def test_merge_all_requires_parts(self):
        with pytest.raises(ValueError):
            merge_all([])

    def test_p_late_monotone_in_deadline(self):
        recs = [rec(d * 1e-4) for d in range(1, 40)]
        values = []
        for deadline in (0.5e-3, 1.0e-3, 2.0e-3, 5.0e-3):
            m = aggregate(recs, [], cfg(deadline=deadline))
            values.append(m.p_late)
        assert values == sorted(values, reverse=True)
