import math

import pytest
from hypothesis import given, strategies as st

from parkfusion.power import (
    CAMERA,
    INFERENCE,
    PowerAccountingError,
    PowerLedger,
    PowerModel,
    savings_vs_always_on,
)

MODEL = PowerModel()


class TestModel:
    def test_standby_figure(self):
        # base 0.8 + ranger 0.12
        assert MODEL.standby_w == pytest.approx(0.92)

    def test_full_active_figure(self):
        assert MODEL.full_active_w == pytest.approx(0.92 + 1.2 + 1.8)

    def test_always_on_reference_is_separate_figure(self):
        # The headline reference draw is 4.02 W; it is close to but not the
        # same number as standby + camera + inference (3.92 W). Both are kept.
        assert MODEL.always_on_w == pytest.approx(4.02)
        assert MODEL.always_on_w != pytest.approx(MODEL.full_active_w)


class TestLedger:
    def test_pure_standby_average(self):
        ledger = PowerLedger(MODEL, start_ms=0)
        ledger.advance(60_000)
        assert ledger.average_power() == pytest.approx(0.92)

    def test_one_detection_burst(self):
        # 700 ms of camera+inference inside 60 s: hand value 0.955 W
        ledger = PowerLedger(MODEL, start_ms=0)
        ledger.charge(CAMERA, 1_000, 1_700)
        ledger.charge(INFERENCE, 1_000, 1_700)
        ledger.advance(60_000)
        assert ledger.average_power() == pytest.approx(0.92 + 3.0 * 700 / 60_000)
        assert ledger.detector_duty() == pytest.approx(700 / 60_000)

    def test_energy_joules(self):
        ledger = PowerLedger(MODEL, start_ms=0)
        ledger.advance(10_000)
        assert ledger.energy_joules() == pytest.approx(9.2)

    def test_overlapping_charges_merge(self):
        ledger = PowerLedger(MODEL, start_ms=0)
        ledger.charge(CAMERA, 0, 1_000)
        ledger.charge(CAMERA, 500, 2_000)
        ledger.advance(2_000)
        assert ledger.active_time(CAMERA) == 2_000
        assert ledger.average_power() == pytest.approx(0.92 + 1.2)

    def test_windowed_average(self):
        ledger = PowerLedger(MODEL, start_ms=0)
        ledger.charge(INFERENCE, 0, 1_000)
        ledger.advance(4_000)
        assert ledger.average_power(0, 1_000) == pytest.approx(0.92 + 1.8)
        assert ledger.average_power(1_000, 4_000) == pytest.approx(0.92)

    def test_rejects_backdated_charge(self):
        ledger = PowerLedger(MODEL, start_ms=0)
        ledger.charge(CAMERA, 5_000, 6_000)
        with pytest.raises(PowerAccountingError):
            ledger.charge(CAMERA, 1_000, 2_000)

    def test_rejects_empty_interval(self):
        ledger = PowerLedger(MODEL, start_ms=0)
        with pytest.raises(PowerAccountingError):
            ledger.charge(CAMERA, 1_000, 1_000)

    def test_rejects_unknown_component(self):
        ledger = PowerLedger(MODEL, start_ms=0)
        with pytest.raises(PowerAccountingError):
            ledger.charge("heater", 0, 100)

    def test_average_outside_coverage_rejected(self):
        ledger = PowerLedger(MODEL, start_ms=0)
        ledger.advance(1_000)
        with pytest.raises(PowerAccountingError):
            ledger.average_power(0, 2_000)
        with pytest.raises(PowerAccountingError):
            ledger.average_power(500, 500)

    def test_segments_partition_coverage(self):
        ledger = PowerLedger(MODEL, start_ms=0)
        ledger.charge(CAMERA, 1_000, 2_000)
        ledger.charge(INFERENCE, 1_500, 2_500)
        ledger.advance(3_000)
        segs = ledger.segments()
        assert segs[0][0] == 0 and segs[-1][1] == 3_000
        for (_, e1, _), (s2, _, _) in zip(segs, segs[1:]):
            assert e1 == s2
        lookup = {s: active for s, _, active in segs}
        assert lookup[1_000] == {CAMERA}
        assert lookup[1_500] == {CAMERA, INFERENCE}
        assert lookup[2_000] == {INFERENCE}

    @given(
        st.lists(
            st.tuples(st.integers(0, 50), st.integers(1, 30)),
            max_size=20,
        )
    )
    def test_average_bounded_by_model_range(self, bursts):
        ledger = PowerLedger(MODEL, start_ms=0)
        t = 0
        for gap, dur in bursts:
            start = t + gap
            ledger.charge(CAMERA, start, start + dur)
            ledger.charge(INFERENCE, start, start + dur)
            t = start + dur
        ledger.advance(t + 10)
        avg = ledger.average_power()
        assert MODEL.standby_w <= avg <= MODEL.full_active_w


class TestSavings:
    def test_headline_figure(self):
        assert savings_vs_always_on(1.02, MODEL) == pytest.approx(0.746268656716, abs=1e-9)

    def test_zero_draw_saves_everything(self):
        assert savings_vs_always_on(0.0, MODEL) == 1.0

    def test_rejects_negative_or_nan(self):
        with pytest.raises(PowerAccountingError):
            savings_vs_always_on(-0.1, MODEL)
        with pytest.raises(PowerAccountingError):
            savings_vs_always_on(math.nan, MODEL)

    @given(st.floats(min_value=0.0, max_value=10.0))
    def test_monotone_in_average(self, avg):
        s = savings_vs_always_on(avg, MODEL)
        s_more = savings_vs_always_on(avg + 0.5, MODEL)
        assert s_more < s
