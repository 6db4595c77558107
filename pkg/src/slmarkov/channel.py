"""Seedable simulator for time-varying finite Markov chains.

A scenario is a piecewise schedule of transition matrices over a packet
index axis: each segment either holds a constant row-stochastic matrix
or drifts linearly from a start to an end matrix (convexity keeps every
interpolated matrix row stochastic).  Traces are generated with numpy's
PCG64 generator, so equal seeds give bit-identical state sequences.

The bundled two-state scenario models an LTE-style burst-error link
evaluated before HARQ correction: state 1 is "good" (packet decodes at
the first try), state 2 "bad".  The self-transition probability of the
good state starts at 0.90, jumps down at packet 19081, drifts slowly
upward, and jumps to 0.95 at packet 30851.  Only the two jump locations,
the 0.90 operating point, the packet count, and the presence of a drift
are fixed by design; the remaining numbers are reconstructed defaults
and can be overridden through a scenario file.
"""

from __future__ import annotations

import csv
import json
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

__all__ = [
    "ScenarioError",
    "TraceFormatError",
    "Segment",
    "ScenarioSpec",
    "ObservationTrace",
    "step_chain",
    "generate",
    "builtin_lte_scenario",
    "scenario_from_json",
    "scenario_to_json",
    "load_scenario",
    "write_trace_csv",
    "read_trace_csv",
]

_ROW_SUM_TOL = 1e-9

# Reconstructed defaults of the bundled scenario (the jump packet numbers
# and the 0.90 starting point are fixed; the targets and drift are not).
LTE_TOTAL_PACKETS = 100_000
LTE_JUMP_PACKETS = (19_081, 30_851)
LTE_GOOD_STAY_START = 0.90
LTE_GOOD_STAY_AFTER_JUMP1 = 0.60
LTE_GOOD_STAY_DRIFT_END = 0.65
LTE_GOOD_STAY_FINAL = 0.95
LTE_BAD_STAY = 0.20


class ScenarioError(ValueError):
    """Invalid scenario specification."""


class TraceFormatError(ValueError):
    """Malformed observation-trace file."""


def _validate_matrix(matrix, n: int, label: str) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if m.shape != (n, n):
        raise ScenarioError(f"{label} must be {n}x{n}, got shape {m.shape}")
    if (m < 0).any() or (m > 1).any():
        raise ScenarioError(f"{label} entries must lie in [0, 1]")
    bad = np.abs(m.sum(axis=1) - 1.0) > _ROW_SUM_TOL
    if bad.any():
        raise ScenarioError(
            f"{label} row {int(np.argmax(bad))} sums to {m.sum(axis=1)[np.argmax(bad)]!r}"
        )
    m = m.copy()
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class Segment:
    """One piece of the schedule, starting at packet ``start``.

    With ``end_matrix`` set, entries drift linearly from ``matrix`` at the
    segment's first packet to ``end_matrix`` at its last packet.
    """

    start: int
    matrix: np.ndarray
    end_matrix: Optional[np.ndarray] = None

    @property
    def is_drift(self) -> bool:
        return self.end_matrix is not None


@dataclass(frozen=True)
class ScenarioSpec:
    """Piecewise transition-matrix schedule plus generation parameters."""

    num_states: int
    segments: tuple[Segment, ...]
    total_packets: int
    initial_state: int = 1
    seed: int = 0

    def __post_init__(self):
        n = int(self.num_states)
        if n < 2:
            raise ScenarioError(f"num_states must be >= 2, got {n}")
        total = int(self.total_packets)
        if total < 1:
            raise ScenarioError(f"total_packets must be positive, got {total}")
        init = int(self.initial_state)
        if not 1 <= init <= n:
            raise ScenarioError(f"initial_state {init} outside 1..{n}")

        segments = tuple(self.segments)
        if not segments:
            raise ScenarioError("scenario needs at least one segment")
        if segments[0].start != 0:
            raise ScenarioError("first segment must start at packet 0")
        starts = [seg.start for seg in segments]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ScenarioError(f"segment starts must strictly increase, got {starts}")
        if starts[-1] >= total:
            raise ScenarioError("segment start beyond total_packets")

        checked = []
        for k, seg in enumerate(segments):
            matrix = _validate_matrix(seg.matrix, n, f"segment {k} matrix")
            end = (
                _validate_matrix(seg.end_matrix, n, f"segment {k} end_matrix")
                if seg.end_matrix is not None
                else None
            )
            checked.append(Segment(start=int(seg.start), matrix=matrix, end_matrix=end))

        object.__setattr__(self, "num_states", n)
        object.__setattr__(self, "segments", tuple(checked))
        object.__setattr__(self, "total_packets", total)
        object.__setattr__(self, "initial_state", init)
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(
            self, "_starts", tuple(seg.start for seg in checked)
        )

    def segment_index(self, packet: int) -> int:
        if not 0 <= packet < self.total_packets:
            raise ScenarioError(f"packet {packet} outside 0..{self.total_packets - 1}")
        return bisect_right(self._starts, packet) - 1

    def segment_bounds(self, index: int) -> tuple[int, int]:
        """Half-open packet range [start, end) covered by a segment."""
        start = self.segments[index].start
        end = (
            self.segments[index + 1].start
            if index + 1 < len(self.segments)
            else self.total_packets
        )
        return start, end

    def effective_matrix(self, packet: int) -> np.ndarray:
        """Transition matrix in force for the transition into ``packet``."""
        k = self.segment_index(packet)
        seg = self.segments[k]
        if not seg.is_drift:
            return seg.matrix
        start, end = self.segment_bounds(k)
        length = end - start
        frac = 0.0 if length <= 1 else (packet - start) / (length - 1)
        return (1.0 - frac) * seg.matrix + frac * seg.end_matrix

    def jump_packets(self, tol: float = 0.01) -> tuple[int, ...]:
        """Segment boundaries where the schedule changes discontinuously."""
        jumps = []
        for k in range(1, len(self.segments)):
            boundary = self.segments[k].start
            before = self.effective_matrix(boundary - 1)
            after = self.effective_matrix(boundary)
            if np.abs(after - before).max() > tol:
                jumps.append(boundary)
        return tuple(jumps)


@dataclass(frozen=True)
class ObservationTrace:
    """A realized state sequence together with its generating scenario."""

    states: np.ndarray
    scenario: ScenarioSpec

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.int64).copy()
        if states.shape != (self.scenario.total_packets,):
            raise ScenarioError(
                f"trace length {states.shape} does not match scenario "
                f"total_packets {self.scenario.total_packets}"
            )
        if (states < 1).any() or (states > self.scenario.num_states).any():
            raise ScenarioError("trace contains out-of-range state ids")
        states.setflags(write=False)
        object.__setattr__(self, "states", states)

    def effective_matrix(self, packet: int) -> np.ndarray:
        return self.scenario.effective_matrix(packet)


def step_chain(current: int, matrix: np.ndarray, rng: np.random.Generator) -> int:
    """Draw the next state from row ``current`` of a transition matrix.

    Deterministic given the generator state.  Walks the row's cumulative
    sum with a single uniform draw, so the number of variates consumed is
    always one per step.
    """
    row = matrix[current - 1]
    u = rng.random()
    acc = 0.0
    for j, p in enumerate(row):
        acc += p
        if u < acc:
            return j + 1
    return len(row)  # guard against rounding at u ~ 1


def generate(spec: ScenarioSpec) -> ObservationTrace:
    """Realize one state trace from a scenario, bit-reproducible per seed."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    states = np.empty(spec.total_packets, dtype=np.int64)
    states[0] = spec.initial_state

    current = spec.initial_state
    # Iterate segment by segment so constant segments reuse one matrix.
    for k, seg in enumerate(spec.segments):
        start, end = spec.segment_bounds(k)
        first = max(start, 1)
        if not seg.is_drift:
            matrix = seg.matrix
            for t in range(first, end):
                current = step_chain(current, matrix, rng)
                states[t] = current
        else:
            for t in range(first, end):
                current = step_chain(current, spec.effective_matrix(t), rng)
                states[t] = current
    return ObservationTrace(states=states, scenario=spec)


def _two_state(good_stay: float, bad_stay: float) -> list[list[float]]:
    return [[good_stay, 1.0 - good_stay], [1.0 - bad_stay, bad_stay]]


def builtin_lte_scenario(seed: int = 0) -> ScenarioSpec:
    """The bundled burst-error scenario: jump, drift, jump over 100 000 packets."""
    jump1, jump2 = LTE_JUMP_PACKETS
    return ScenarioSpec(
        num_states=2,
        total_packets=LTE_TOTAL_PACKETS,
        initial_state=1,
        seed=seed,
        segments=(
            Segment(start=0, matrix=_two_state(LTE_GOOD_STAY_START, LTE_BAD_STAY)),
            Segment(
                start=jump1,
                matrix=_two_state(LTE_GOOD_STAY_AFTER_JUMP1, LTE_BAD_STAY),
                end_matrix=_two_state(LTE_GOOD_STAY_DRIFT_END, LTE_BAD_STAY),
            ),
            Segment(start=jump2, matrix=_two_state(LTE_GOOD_STAY_FINAL, LTE_BAD_STAY)),
        ),
    )


def scenario_from_json(data: dict) -> ScenarioSpec:
    """Build a scenario from its JSON object form (see README for the schema)."""
    if not isinstance(data, dict):
        raise ScenarioError("scenario document must be a JSON object")
    try:
        num_states = data["num_states"]
        total_packets = data["total_packets"]
        raw_segments = data["segments"]
    except KeyError as err:
        raise ScenarioError(f"scenario is missing required key {err.args[0]!r}") from err
    if not isinstance(raw_segments, list) or not raw_segments:
        raise ScenarioError("segments must be a non-empty list")

    segments = []
    for k, raw in enumerate(raw_segments):
        if not isinstance(raw, dict) or "start" not in raw or "matrix" not in raw:
            raise ScenarioError(f"segment {k} needs 'start' and 'matrix' keys")
        segments.append(
            Segment(
                start=int(raw["start"]),
                matrix=raw["matrix"],
                end_matrix=raw.get("end_matrix"),
            )
        )
    return ScenarioSpec(
        num_states=int(num_states),
        segments=tuple(segments),
        total_packets=int(total_packets),
        initial_state=int(data.get("initial_state", 1)),
        seed=int(data.get("seed", 0)),
    )


def scenario_to_json(spec: ScenarioSpec) -> dict:
    """Inverse of :func:`scenario_from_json`."""
    segments = []
    for seg in spec.segments:
        entry = {"start": seg.start, "matrix": seg.matrix.tolist()}
        if seg.end_matrix is not None:
            entry["end_matrix"] = seg.end_matrix.tolist()
        segments.append(entry)
    return {
        "num_states": spec.num_states,
        "total_packets": spec.total_packets,
        "initial_state": spec.initial_state,
        "seed": spec.seed,
        "segments": segments,
    }


def load_scenario(path: str | Path) -> ScenarioSpec:
    """Read a scenario JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except json.JSONDecodeError as err:
        raise ScenarioError(f"{path}: invalid JSON ({err})") from err
    return scenario_from_json(data)


def write_trace_csv(states, path: str | Path) -> None:
    """Write a state trace as ``packet_index,state`` rows."""
    states = np.asarray(states, dtype=np.int64)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["packet_index", "state"])
        writer.writerows((int(i), int(s)) for i, s in enumerate(states))


def read_trace_csv(path: str | Path) -> np.ndarray:
    """Read a ``packet_index,state`` trace; rejects malformed rows by line number."""
    states = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["packet_index", "state"]:
            raise TraceFormatError(f"{path}:1: expected header 'packet_index,state'")
        last_index = -1
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise TraceFormatError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            try:
                index = int(row[0])
                state = int(row[1])
            except ValueError as err:
                raise TraceFormatError(f"{path}:{lineno}: {err}") from err
            if index <= last_index:
                raise TraceFormatError(
                    f"{path}:{lineno}: packet_index {index} not strictly increasing"
                )
            last_index = index
            states.append(state)
    return np.asarray(states, dtype=np.int64)
