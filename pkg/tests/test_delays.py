"""Tests for the packet-delay classification pipeline."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slmarkov.delays import (
    DelayPipelineConfig,
    DelayRecord,
    DelayTraceError,
    ThresholdState,
    classify,
    pipeline,
    read_delay_csv,
    synthetic_delay_trace,
    update_thresholds,
    write_state_csv,
)


def records_from(delays, start=0):
    return [DelayRecord(packet_index=start + i, delay=d) for i, d in enumerate(delays)]


BORDERS = ThresholdState(baseline=20.0, margin=3.0, harq_offset=7.0)


# ── Classification ──────────────────────────────────────────────────


class TestClassify:
    def test_below_first_border(self):
        assert classify(DelayRecord(0, 21.0), BORDERS) == 1

    def test_between_borders(self):
        assert classify(DelayRecord(0, 26.0), BORDERS) == 2

    def test_far_above(self):
        assert classify(DelayRecord(0, 200.0), BORDERS) == 3

    def test_border_values_inclusive_below(self):
        assert classify(DelayRecord(0, 23.0), BORDERS) == 1
        assert classify(DelayRecord(0, 30.0), BORDERS) == 2

    @given(
        d1=st.floats(min_value=0.1, max_value=500, allow_nan=False),
        d2=st.floats(min_value=0.1, max_value=500, allow_nan=False),
    )
    def test_monotone_in_delay(self, d1, d2):
        lo, hi = sorted([d1, d2])
        assert classify(DelayRecord(0, lo), BORDERS) <= classify(DelayRecord(1, hi), BORDERS)

    def test_borders_strictly_ordered(self):
        assert BORDERS.t1 < BORDERS.t2
        assert BORDERS.t2 - BORDERS.t1 == pytest.approx(7.0)


class TestThresholdState:
    def test_positive_parameters_required(self):
        with pytest.raises(DelayTraceError):
            ThresholdState(baseline=0.0)
        with pytest.raises(DelayTraceError):
            ThresholdState(baseline=20.0, margin=-1.0)


class TestDelayRecord:
    def test_positive_delay_required(self):
        with pytest.raises(DelayTraceError):
            DelayRecord(packet_index=0, delay=0.0)


# ── Threshold adaptation ────────────────────────────────────────────


class TestUpdateThresholds:
    def test_constant_input_converges_exactly(self):
        cfg = DelayPipelineConfig(ma_window=50)
        th = ThresholdState.seeded(20.0, cfg)
        for rec in records_from([20.0] * 60):
            th = update_thresholds(th, rec)
        assert th.baseline == 20.0
        assert len(th.recent_inliers) == 50

    def test_outlier_excluded_from_baseline(self):
        cfg = DelayPipelineConfig()
        th = ThresholdState.seeded(20.0, cfg)
        for rec in records_from([20.0] * 100):
            th = update_thresholds(th, rec)
        before = th.baseline
        th = update_thresholds(th, DelayRecord(100, 200.0))
        assert th.baseline == before
        assert th.inliers_seen == 100  # the outlier was skipped

    def test_moving_average_lag_under_drift(self):
        # Inliers drifting at 0.01 ms per packet lag the truth by about
        # rate * (window - 1) / 2 once the window is full.
        cfg = DelayPipelineConfig(ma_window=500, margin=3.0)
        th = ThresholdState.seeded(20.0, cfg)
        delay = 20.0
        for i in range(3000):
            delay = 20.0 + 0.01 * i
            th = update_thresholds(th, DelayRecord(i, delay))
        lag = delay - th.baseline
        assert lag == pytest.approx(0.01 * 499 / 2, abs=0.1)

    def test_window_eviction(self):
        cfg = DelayPipelineConfig(ma_window=3)
        th = ThresholdState.seeded(10.0, cfg)
        for rec in records_from([10.0, 11.0, 12.0, 13.0]):
            th = update_thresholds(th, rec)
        assert th.recent_inliers == (11.0, 12.0, 13.0)
        assert th.baseline == pytest.approx(12.0)


class TestColdStart:
    def test_thresholds_frozen_until_enough_inliers(self):
        cfg = DelayPipelineConfig(freeze_inliers=50)
        th = ThresholdState.seeded(30.0, cfg)  # first packet was slow
        for rec in records_from([20.0] * 30):
            th = update_thresholds(th, rec)
        # Still within the freeze: classification uses the seed baseline.
        assert th.effective_baseline == 30.0
        assert classify(DelayRecord(31, 26.0), th) == 1
        for rec in records_from([20.0] * 30, start=40):
            th = update_thresholds(th, rec)
        # Freeze lifted: the running mean takes over and 26 ms is now slow.
        assert th.effective_baseline < 21.0
        assert classify(DelayRecord(100, 26.0), th) == 2


# ── Pipeline ────────────────────────────────────────────────────────


class TestPipeline:
    def test_all_fast_packets_are_state_one(self):
        states = pipeline(records_from([20.0, 20.2, 19.8, 20.1] * 10))
        assert states == [1] * 40

    def test_empty_trace(self):
        assert pipeline([]) == []

    def test_output_length_matches_input(self):
        records, _ = synthetic_delay_trace(500, seed=1)
        assert len(pipeline(records)) == 500

    def test_replay_determinism(self):
        records, _ = synthetic_delay_trace(400, seed=2)
        assert pipeline(records) == pipeline(records)

    def test_injected_offsets_recovered_exactly_without_noise(self):
        records, labels = synthetic_delay_trace(
            2000, seed=3, noise_std=0.01, drift_total=0.0
        )
        states = pipeline(records)
        assert np.array_equal(np.asarray(states), labels)
        rate = np.mean(np.asarray(states) == 2)
        assert rate == pytest.approx(np.mean(labels == 2))

    def test_well_separated_clusters_zero_errors(self):
        # Gaps of 7 and 40 ms against 0.5 ms jitter: far beyond 5 sigma.
        # Seed chosen so the trace starts with a fast packet; the first
        # delay seeds the thresholds, so a slow first packet shifts the
        # borders until enough inliers accumulate.
        records, labels = synthetic_delay_trace(5000, seed=5)
        states = pipeline(records)
        assert np.array_equal(np.asarray(states), labels)

    def test_non_monotonic_index_rejected(self):
        records = [DelayRecord(0, 20.0), DelayRecord(0, 20.0)]
        with pytest.raises(DelayTraceError, match="increasing"):
            pipeline(records)

    def test_classical_estimates_scatter_near_injected_rate(self):
        # Downstream check: per-window classical p_11 of the classified
        # 90/9/1 mixture stays near the injected 0.90.
        from slmarkov.identifier import IdentifierConfig, classical_estimate, run_with_stats

        records, _ = synthetic_delay_trace(10_000, seed=1)
        states = pipeline(records)
        cfg = IdentifierConfig(num_states=3, window_len=100)
        estimates = [classical_estimate(s)[0, 0] for s, _ in run_with_stats(states, cfg)]
        assert np.mean(estimates) == pytest.approx(0.90, abs=0.02)
        assert np.std(estimates) < 0.1


class TestSyntheticTrace:
    def test_deterministic(self):
        a, la = synthetic_delay_trace(300, seed=5)
        b, lb = synthetic_delay_trace(300, seed=5)
        assert [r.delay for r in a] == [r.delay for r in b]
        assert np.array_equal(la, lb)

    def test_rates_roughly_respected(self):
        _, labels = synthetic_delay_trace(20_000, seed=6)
        assert np.mean(labels == 2) == pytest.approx(0.09, abs=0.01)
        assert np.mean(labels == 3) == pytest.approx(0.01, abs=0.005)

    def test_bad_rates_rejected(self):
        with pytest.raises(DelayTraceError):
            synthetic_delay_trace(10, harq_rate=0.8, repair_rate=0.5)


# ── CSV round trips ─────────────────────────────────────────────────


class TestDelayCsv:
    def test_delay_shape(self, tmp_path):
        path = tmp_path / "delays.csv"
        path.write_text("packet_index,delay_ms\n0,20.5\n1,27.25\n")
        records = read_delay_csv(path)
        assert [r.delay for r in records] == [20.5, 27.25]

    def test_timestamp_shape(self, tmp_path):
        path = tmp_path / "delays.csv"
        path.write_text(
            "packet_index,t_send_us,t_recv_us\n0,1000,21500\n1,5000,32000\n"
        )
        records = read_delay_csv(path)
        assert [r.delay for r in records] == [20.5, 27.0]

    def test_unknown_header_rejected(self, tmp_path):
        path = tmp_path / "delays.csv"
        path.write_text("a,b\n0,1\n")
        with pytest.raises(DelayTraceError, match=":1"):
            read_delay_csv(path)

    def test_malformed_row_reports_line(self, tmp_path):
        path = tmp_path / "delays.csv"
        path.write_text("packet_index,delay_ms\n0,20.0\n1,slow\n")
        with pytest.raises(DelayTraceError, match=":3"):
            read_delay_csv(path)

    def test_field_count_checked(self, tmp_path):
        path = tmp_path / "delays.csv"
        path.write_text("packet_index,delay_ms\n0,20.0,extra\n")
        with pytest.raises(DelayTraceError, match=":2"):
            read_delay_csv(path)

    def test_state_csv_round_trip(self, tmp_path):
        records, _ = synthetic_delay_trace(50, seed=7)
        states = pipeline(records)
        path = tmp_path / "states.csv"
        write_state_csv(records, states, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "packet_index,delay_ms,state"
        assert len(lines) == 51
        assert lines[1].split(",")[2] in {"1", "2", "3"}

    def test_state_csv_length_mismatch(self, tmp_path):
        records, _ = synthetic_delay_trace(5, seed=8)
        with pytest.raises(DelayTraceError):
            write_state_csv(records, [1, 2], tmp_path / "states.csv")
