"""Classification of packet-delay traces into channel states.

Delays of packets that decode at the first attempt cluster around a
baseline that slowly wanders with network conditions.  A retransmission
adds a fixed extra delay (about 7 ms on the measured radio stack), and
packets needing further repair arrive much later still.  Each delay is
therefore mapped to one of three states by two thresholds,

    t1 = baseline + margin        (state 1: immediately decoded, <= t1)
    t2 = t1 + harq_offset         (state 2: one retransmission, <= t2)
                                  (state 3: anything slower)

where the baseline is a moving average over the most recent delays that
were themselves classified as state 1; outliers never contaminate it.
The resulting state stream feeds the Markov-chain identifier.

Also included: a synthetic trace generator producing the same delay
statistics (Gaussian jitter around a drifting baseline, offset clusters
for the slower states), used to exercise the pipeline end to end when no
recording is at hand.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "DelayTraceError",
    "DelayRecord",
    "ThresholdState",
    "DelayPipelineConfig",
    "classify",
    "update_thresholds",
    "pipeline",
    "synthetic_delay_trace",
    "read_delay_csv",
    "write_state_csv",
]


class DelayTraceError(ValueError):
    """Malformed or out-of-order delay trace data."""


@dataclass(frozen=True)
class DelayRecord:
    """One timestamped observation: packet index and one-way delay in ms."""

    packet_index: int
    delay: float

    def __post_init__(self):
        if not math.isfinite(self.delay) or self.delay <= 0.0:
            raise DelayTraceError(
                f"packet {self.packet_index}: delay must be positive, got {self.delay!r}"
            )


@dataclass(frozen=True)
class ThresholdState:
    """Snapshot of the adaptive decision borders.

    ``baseline`` is the current inlier moving average, ``margin`` the gap
    added on top of it for the first border, ``harq_offset`` the extra
    delay of a retransmitted packet.  ``recent_inliers`` keeps the last
    ``window`` inlier delays (plus their sum) so updates are pure
    functions of the state; ``seed_baseline`` holds the first observed
    delay, which anchors classification until ``freeze_inliers`` inliers
    have been collected.
    """

    baseline: float
    margin: float = 3.0
    harq_offset: float = 7.0
    window: int = 500
    freeze_inliers: int = 50
    recent_inliers: tuple[float, ...] = ()
    inlier_sum: float = 0.0
    inliers_seen: int = 0
    seed_baseline: float | None = None

    def __post_init__(self):
        if self.baseline <= 0.0 or self.margin <= 0.0 or self.harq_offset <= 0.0:
            raise DelayTraceError("baseline, margin and harq_offset must be positive")
        if self.window < 1:
            raise DelayTraceError(f"window must be >= 1, got {self.window}")

    @property
    def effective_baseline(self) -> float:
        """Baseline used for classification (frozen during cold start)."""
        if self.seed_baseline is not None and self.inliers_seen < self.freeze_inliers:
            return self.seed_baseline
        return self.baseline

    @property
    def t1(self) -> float:
        return self.effective_baseline + self.margin

    @property
    def t2(self) -> float:
        return self.t1 + self.harq_offset

    @classmethod
    def seeded(cls, first_delay: float, cfg: "DelayPipelineConfig") -> "ThresholdState":
        return cls(
            baseline=first_delay,
            margin=cfg.margin,
            harq_offset=cfg.harq_offset,
            window=cfg.ma_window,
            freeze_inliers=cfg.freeze_inliers,
            seed_baseline=first_delay,
        )


@dataclass(frozen=True)
class DelayPipelineConfig:
    margin: float = 3.0
    harq_offset: float = 7.0
    ma_window: int = 500
    freeze_inliers: int = 50


def classify(rec: DelayRecord, th: ThresholdState) -> int:
    """Map a delay to state 1, 2 or 3 by the current borders (monotone in delay)."""
    if rec.delay <= th.t1:
        return 1
    if rec.delay <= th.t2:
        return 2
    return 3


def update_thresholds(th: ThresholdState, rec: DelayRecord) -> ThresholdState:
    """Fold one record into the threshold state.

    Only delays classified as state 1 under the current borders enter the
    moving average; outliers leave the state unchanged.  Until the window
    is full the baseline is the mean of all inliers so far.
    """
    if classify(rec, th) != 1:
        return th

    inliers = th.recent_inliers + (rec.delay,)
    total = th.inlier_sum + rec.delay
    if len(inliers) > th.window:
        total -= inliers[0]
        inliers = inliers[1:]
    return replace(
        th,
        baseline=total / len(inliers),
        recent_inliers=inliers,
        inlier_sum=total,
        inliers_seen=th.inliers_seen + 1,
    )


def pipeline(
    trace: Iterable[DelayRecord],
    cfg: DelayPipelineConfig = DelayPipelineConfig(),
) -> list[int]:
    """Classify a delay trace record by record (classify, then update).

    Thresholds are seeded from the first delay and adapt online; the
    output has one state per input record, in order.  Packet indices must
    strictly increase.
    """
    states: list[int] = []
    th: ThresholdState | None = None
    last_index: int | None = None
    for rec in trace:
        if last_index is not None and rec.packet_index <= last_index:
            raise DelayTraceError(
                f"packet_index {rec.packet_index} after {last_index} is not increasing"
            )
        last_index = rec.packet_index
        if th is None:
            th = ThresholdState.seeded(rec.delay, cfg)
        states.append(classify(rec, th))
        th = update_thresholds(th, rec)
    return states


def synthetic_delay_trace(
    total_packets: int,
    seed: int = 0,
    base_delay: float = 20.0,
    noise_std: float = 0.5,
    harq_offset: float = 7.0,
    repair_offset: float = 40.0,
    harq_rate: float = 0.09,
    repair_rate: float = 0.01,
    drift_total: float = 2.0,
) -> tuple[list[DelayRecord], np.ndarray]:
    """Generate a delay trace with known per-packet states.

    Packets are independently good, retransmitted or repaired with the
    given rates; delays are Gaussian around a baseline that rises linearly
    by ``drift_total`` ms over the whole trace.  Returns the records and
    the generating state labels (the classification ground truth).
    """
    if total_packets < 1:
        raise DelayTraceError(f"total_packets must be positive, got {total_packets}")
    if harq_rate < 0 or repair_rate < 0 or harq_rate + repair_rate > 1:
        raise DelayTraceError("state rates must be nonnegative and sum below 1")

    rng = np.random.Generator(np.random.PCG64(seed))
    labels = rng.choice(
        [1, 2, 3],
        size=total_packets,
        p=[1.0 - harq_rate - repair_rate, harq_rate, repair_rate],
    )
    drift = drift_total * np.arange(total_packets) / max(1, total_packets - 1)
    delays = base_delay + drift + rng.normal(0.0, noise_std, size=total_packets)
    delays = delays + np.where(labels == 2, harq_offset, 0.0)
    delays = delays + np.where(labels == 3, repair_offset, 0.0)

    records = [
        DelayRecord(packet_index=i, delay=float(d)) for i, d in enumerate(delays)
    ]
    return records, labels.astype(np.int64)


_DELAY_HEADERS = ("packet_index", "delay_ms")
_TIMESTAMP_HEADERS = ("packet_index", "t_send_us", "t_recv_us")


def read_delay_csv(path: str | Path) -> list[DelayRecord]:
    """Read a delay trace CSV in either accepted shape.

    ``packet_index,delay_ms`` rows carry the delay directly;
    ``packet_index,t_send_us,t_recv_us`` rows are reduced to
    ``(t_recv - t_send) / 1000`` ms at ingestion.  Malformed rows are
    rejected with their line number.
    """
    records: list[DelayRecord] = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise DelayTraceError(f"{path}:1: empty file")
        header = tuple(h.strip() for h in header)
        if header == _DELAY_HEADERS:
            timestamps = False
        elif header == _TIMESTAMP_HEADERS:
            timestamps = True
        else:
            raise DelayTraceError(
                f"{path}:1: expected header {','.join(_DELAY_HEADERS)} or "
                f"{','.join(_TIMESTAMP_HEADERS)}"
            )
        expected = 3 if timestamps else 2
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != expected:
                raise DelayTraceError(
                    f"{path}:{lineno}: expected {expected} fields, got {len(row)}"
                )
            try:
                index = int(row[0])
                if timestamps:
                    delay = (float(row[2]) - float(row[1])) / 1000.0
                else:
                    delay = float(row[1])
                records.append(DelayRecord(packet_index=index, delay=delay))
            except ValueError as err:
                raise DelayTraceError(f"{path}:{lineno}: {err}") from err
    return records


def write_state_csv(
    records: Sequence[DelayRecord], states: Sequence[int], path: str | Path
) -> None:
    """Write ``packet_index,delay_ms,state`` rows."""
    if len(records) != len(states):
        raise DelayTraceError(
            f"{len(records)} records but {len(states)} states"
        )
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["packet_index", "delay_ms", "state"])
        for rec, state in zip(records, states):
            writer.writerow([rec.packet_index, f"{rec.delay:.6f}", int(state)])
