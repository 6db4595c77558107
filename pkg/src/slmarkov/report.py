"""Per-window run reports and comparison metrics.

A report row collects, for one window: the identifier's projected
transition matrix, per-row uncertainty, per-row conflict, reset flags,
row evidence totals, the classical per-window estimate, and (when the
generating scenario is known) the ground-truth matrix averaged over the
window's transitions.  Reports round-trip through a flat CSV whose
columns are named after the quantities usually plotted: ``p_ij`` for the
identified probabilities, ``c_ij`` for the classical baseline, ``gt_ij``
for ground truth, ``u_i``, ``dc_i``, ``reset_i`` and ``n_i`` per row.

Summaries quantify the comparison: RMSE of the identified and classical
estimates against ground truth (per matrix entry), and the reset latency
behind each parameter jump.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .channel import ScenarioSpec
from .identifier import IdentifierOutput, WindowStats, classical_estimate

__all__ = [
    "ReportFormatError",
    "WindowRow",
    "RunSummary",
    "RunReport",
    "build_report",
    "window_truth",
    "write_report_csv",
    "read_report_csv",
    "detect_jump_windows",
    "summarize",
]

# Windows scanned for a reset after a jump before declaring it undetected.
JUMP_SEARCH_HORIZON = 10


class ReportFormatError(ValueError):
    """Malformed report CSV."""


@dataclass(frozen=True)
class WindowRow:
    """Everything the report records about one window."""

    window_index: int
    transition: np.ndarray
    uncertainties: tuple[float, ...]
    conflicts: tuple[float, ...]
    reset_rows: frozenset[int]
    row_totals: tuple[int, ...]
    classical: np.ndarray
    truth: Optional[np.ndarray] = None


@dataclass(frozen=True)
class JumpLatency:
    """Reset latency behind one jump; ``latency`` is None when undetected."""

    jump_window: int
    latency: Optional[int]


@dataclass(frozen=True)
class RunSummary:
    """Aggregate comparison metrics; RMSE fields are None without ground truth."""

    rmse_identified: Optional[np.ndarray]
    rmse_classical: Optional[np.ndarray]
    jump_latencies: tuple[JumpLatency, ...]
    reset_windows: tuple[int, ...]


@dataclass(frozen=True)
class RunReport:
    rows: tuple[WindowRow, ...]
    num_states: int
    summary: Optional[RunSummary] = None


def build_report(
    outputs: Sequence[IdentifierOutput],
    stats: Sequence[WindowStats],
    truth: Optional[np.ndarray] = None,
    num_states: Optional[int] = None,
) -> RunReport:
    """Assemble report rows from identifier outputs and their window stats.

    ``truth`` is an optional (n_windows, N, N) array of per-window
    ground-truth matrices.  ``num_states`` keeps the report header
    well-formed when there are no complete windows.
    """
    if len(outputs) != len(stats):
        raise ValueError(f"{len(outputs)} outputs but {len(stats)} window stats")
    if not outputs:
        return RunReport(rows=(), num_states=num_states or 0)
    n = outputs[0].transition.shape[0]
    rows = []
    for m, (out, st) in enumerate(zip(outputs, stats)):
        rows.append(
            WindowRow(
                window_index=out.window_index,
                transition=out.transition,
                uncertainties=out.uncertainties,
                conflicts=out.conflicts,
                reset_rows=out.reset_rows,
                row_totals=tuple(int(c) for c in st.counts.sum(axis=1)),
                classical=classical_estimate(st),
                truth=None if truth is None else np.asarray(truth[m], dtype=float),
            )
        )
    return RunReport(rows=tuple(rows), num_states=n)


def window_truth(spec: ScenarioSpec, window_len: int, num_windows: int) -> np.ndarray:
    """Ground-truth matrix per window: mean over the window's transitions.

    Window m >= 1 covers the transitions into packets
    ``[m*window_len, (m+1)*window_len)``; the first window starts at
    packet 1 because packet 0 has no predecessor.
    """
    n = spec.num_states
    truth = np.empty((num_windows, n, n))
    for m in range(num_windows):
        start = max(1, m * window_len)
        end = (m + 1) * window_len
        if end > spec.total_packets:
            raise ValueError(
                f"window {m} needs packets up to {end}, scenario has {spec.total_packets}"
            )
        acc = np.zeros((n, n))
        for t in range(start, end):
            acc += spec.effective_matrix(t)
        truth[m] = acc / (end - start)
    return truth


def _matrix_columns(prefix: str, n: int) -> list[str]:
    return [f"{prefix}_{i + 1}{j + 1}" for i in range(n) for j in range(n)]


def _row_columns(prefix: str, n: int) -> list[str]:
    return [f"{prefix}_{i + 1}" for i in range(n)]


def report_columns(n: int, with_truth: bool) -> list[str]:
    cols = ["window"]
    cols += _matrix_columns("p", n)
    cols += _row_columns("u", n)
    cols += _row_columns("dc", n)
    cols += _row_columns("reset", n)
    cols += _row_columns("n", n)
    cols += _matrix_columns("c", n)
    if with_truth:
        cols += _matrix_columns("gt", n)
    return cols


def write_report_csv(report: RunReport, path: str | Path) -> None:
    """Write the per-window rows as flat CSV (one header row)."""
    n = report.num_states
    with_truth = bool(report.rows) and report.rows[0].truth is not None
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(report_columns(n, with_truth))
        for row in report.rows:
            values: list = [row.window_index]
            values += [f"{v:.9f}" for v in row.transition.ravel()]
            values += [f"{v:.9f}" for v in row.uncertainties]
            values += [f"{v:.9f}" for v in row.conflicts]
            values += [1 if i in row.reset_rows else 0 for i in range(n)]
            values += list(row.row_totals)
            values += [f"{v:.9f}" for v in row.classical.ravel()]
            if with_truth:
                values += [f"{v:.9f}" for v in row.truth.ravel()]
            writer.writerow(values)


def read_report_csv(path: str | Path) -> RunReport:
    """Read back a report CSV written by :func:`write_report_csv`."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise ReportFormatError(f"{path}:1: empty file")
        p_cols = [h for h in header if h.startswith("p_")]
        n = int(round(math.sqrt(len(p_cols))))
        if n < 2 or n * n != len(p_cols):
            raise ReportFormatError(f"{path}:1: cannot infer state count from header")
        with_truth = any(h.startswith("gt_") for h in header)
        expected = report_columns(n, with_truth)
        if header != expected:
            raise ReportFormatError(
                f"{path}:1: header does not match report layout for {n} states"
            )

        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw:
                continue
            if len(raw) != len(expected):
                raise ReportFormatError(
                    f"{path}:{lineno}: expected {len(expected)} fields, got {len(raw)}"
                )
            try:
                it = iter(raw)
                window = int(next(it))
                transition = np.array([float(next(it)) for _ in range(n * n)]).reshape(n, n)
                uncertainties = tuple(float(next(it)) for _ in range(n))
                conflicts = tuple(float(next(it)) for _ in range(n))
                resets = frozenset(i for i in range(n) if int(next(it)) == 1)
                totals = tuple(int(next(it)) for _ in range(n))
                classical = np.array([float(next(it)) for _ in range(n * n)]).reshape(n, n)
                truth = None
                if with_truth:
                    truth = np.array([float(next(it)) for _ in range(n * n)]).reshape(n, n)
            except ValueError as err:
                raise ReportFormatError(f"{path}:{lineno}: {err}") from err
            rows.append(
                WindowRow(
                    window_index=window,
                    transition=transition,
                    uncertainties=uncertainties,
                    conflicts=conflicts,
                    reset_rows=resets,
                    row_totals=totals,
                    classical=classical,
                    truth=truth,
                )
            )
    return RunReport(rows=tuple(rows), num_states=n)


def detect_jump_windows(truth_series: np.ndarray, threshold: float = 0.02) -> list[int]:
    """Window indices where the ground truth moves discontinuously.

    Looks at the largest entry change between consecutive windows;
    consecutive detections collapse to the first window of the group (a
    jump inside a window shifts two successive window means).
    """
    diffs = np.abs(np.diff(truth_series, axis=0)).reshape(len(truth_series) - 1, -1)
    hits = np.flatnonzero(diffs.max(axis=1) > threshold) + 1
    jumps: list[int] = []
    for w in hits:
        if jumps and w - jumps[-1] <= 1:
            continue
        jumps.append(int(w))
    return jumps


def _jump_windows_from_packets(jump_packets, window_len: int) -> list[int]:
    return [int(p) // int(window_len) for p in jump_packets]


def summarize(
    report: RunReport,
    jump_windows: Optional[Sequence[int]] = None,
    jump_packets: Optional[Sequence[int]] = None,
    window_len: Optional[int] = None,
) -> RunSummary:
    """Compute RMSE against ground truth and per-jump reset latencies.

    Jumps are taken from ``jump_windows``, or derived from
    ``jump_packets``/``window_len``, or detected from the ground-truth
    columns as a fallback.  Latency is the number of windows from the
    window containing the jump to the first window with any reset, or
    None (undetected) when nothing resets within the search horizon.
    """
    rows = report.rows
    have_truth = bool(rows) and rows[0].truth is not None

    rmse_sl = rmse_cl = None
    if have_truth:
        truth = np.stack([row.truth for row in rows])
        sl = np.stack([row.transition for row in rows])
        cl = np.stack([row.classical for row in rows])
        rmse_sl = np.sqrt(np.mean((sl - truth) ** 2, axis=0))
        rmse_cl = np.sqrt(np.mean((cl - truth) ** 2, axis=0))

    reset_windows = tuple(row.window_index for row in rows if row.reset_rows)

    if jump_windows is None:
        if jump_packets is not None and window_len is not None:
            jump_windows = _jump_windows_from_packets(jump_packets, window_len)
        elif have_truth:
            truth_series = np.stack([row.truth for row in rows])
            jump_windows = detect_jump_windows(truth_series)
        else:
            jump_windows = []

    by_index = {row.window_index: row for row in rows}
    latencies = []
    for jump in jump_windows:
        latency = None
        for offset in range(JUMP_SEARCH_HORIZON + 1):
            row = by_index.get(jump + offset)
            if row is not None and row.reset_rows:
                latency = offset
                break
        latencies.append(JumpLatency(jump_window=int(jump), latency=latency))

    return RunSummary(
        rmse_identified=rmse_sl,
        rmse_classical=rmse_cl,
        jump_latencies=tuple(latencies),
        reset_windows=reset_windows,
    )


def summary_lines(summary: RunSummary) -> list[str]:
    """Human-readable summary block for the CLI."""
    lines = []
    if summary.rmse_identified is not None:
        lines.append(
            "rmse identified p_11: "
            f"{summary.rmse_identified[0, 0]:.6f}"
        )
        lines.append(f"rmse classical  p_11: {summary.rmse_classical[0, 0]:.6f}")
        lines.append(
            "rmse identified (all entries): "
            f"{float(np.sqrt(np.mean(summary.rmse_identified ** 2))):.6f}"
        )
        lines.append(
            "rmse classical  (all entries): "
            f"{float(np.sqrt(np.mean(summary.rmse_classical ** 2))):.6f}"
        )
    else:
        lines.append("no ground truth available, RMSE skipped")
    lines.append(f"windows with resets: {len(summary.reset_windows)}")
    for jl in summary.jump_latencies:
        status = "undetected" if jl.latency is None else f"{jl.latency} window(s)"
        lines.append(f"jump at window {jl.jump_window}: reset latency {status}")
    return lines
