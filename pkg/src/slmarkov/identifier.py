"""Online identification of a time-varying Markov transition matrix.

The identifier consumes a stream of state observations in fixed-length
windows.  Each window yields per-row transition counts, which map to one
opinion per state row.  The fresh window opinion is compared against the
running opinion through the degree of conflict; consistent rows are
fused (pooling evidence, shrinking uncertainty) while conflicting rows
reset to the window opinion, which is what makes the estimator respond
quickly to parameter jumps.  Trust discounting of both operands implements
slow forgetting, so drifts are tracked as well.

States are identified by 1-based ids ``1..num_states`` in observation
streams; arrays and per-row tuples in this module are 0-indexed, so row
``i`` describes transitions out of state ``i + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import islice
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .opinions import (
    Opinion,
    EvidenceVector,
    cumulative_fuse,
    degree_of_conflict,
    opinion_from_evidence,
    project,
    trust_discount,
)

__all__ = [
    "ObservationError",
    "ConfigurationError",
    "IdentifierConfig",
    "WindowStats",
    "OpinionMatrix",
    "IdentifierOutput",
    "accumulate_window",
    "window_opinions",
    "step",
    "run",
    "run_with_stats",
    "classical_estimate",
]

OpinionMatrix = tuple[Opinion, ...]


class ObservationError(ValueError):
    """An observation stream produced an invalid state id."""


class ConfigurationError(ValueError):
    """Inconsistent identifier configuration."""


def _per_row(value, n: int, label: str) -> tuple[float, ...]:
    """Broadcast a scalar to n rows, or validate an n-vector."""
    if np.isscalar(value):
        row = (float(value),) * n
    else:
        row = tuple(float(v) for v in value)
        if len(row) != n:
            raise ConfigurationError(f"{label} must have {n} entries, got {len(row)}")
    for v in row:
        if not 0.0 <= v <= 1.0:
            raise ConfigurationError(f"{label} entries must lie in [0, 1], got {v!r}")
    return row


@dataclass(frozen=True)
class IdentifierConfig:
    """Parameters of the windowed identifier.

    ``discount_prev`` weights the carried-over opinion, ``discount_new``
    the fresh window opinion; both accept a scalar (applied to every row)
    or one value per state row.  ``conflict_threshold`` may be ``inf`` to
    disable resets entirely.
    """

    num_states: int
    window_len: int = 100
    prior_weight: float = 2.0
    base_rates: tuple[tuple[float, ...], ...] | None = None
    discount_prev: float | Sequence[float] = 0.999
    discount_new: float | Sequence[float] = 0.999
    conflict_threshold: float = 0.15

    def __post_init__(self):
        n = int(self.num_states)
        if n < 2:
            raise ConfigurationError(f"num_states must be >= 2, got {n}")
        if int(self.window_len) < 1:
            raise ConfigurationError(f"window_len must be >= 1, got {self.window_len}")
        if not self.prior_weight > 0.0:
            raise ConfigurationError(
                f"prior_weight must be positive, got {self.prior_weight!r}"
            )
        if not self.conflict_threshold > 0.0:
            raise ConfigurationError(
                f"conflict_threshold must be positive, got {self.conflict_threshold!r}"
            )

        if self.base_rates is None:
            rates = tuple(((1.0 / n,) * n,) * n)
        else:
            rates = tuple(tuple(float(a) for a in row) for row in self.base_rates)
            if len(rates) != n or any(len(row) != n for row in rates):
                raise ConfigurationError(f"base_rates must be {n} rows of {n} entries")
            for row in rates:
                if abs(math.fsum(row) - 1.0) > 1e-9:
                    raise ConfigurationError(f"base-rate row {row} does not sum to 1")

        object.__setattr__(self, "num_states", n)
        object.__setattr__(self, "window_len", int(self.window_len))
        object.__setattr__(self, "prior_weight", float(self.prior_weight))
        object.__setattr__(self, "base_rates", rates)
        object.__setattr__(
            self, "discount_prev", _per_row(self.discount_prev, n, "discount_prev")
        )
        object.__setattr__(
            self, "discount_new", _per_row(self.discount_new, n, "discount_new")
        )
        object.__setattr__(self, "conflict_threshold", float(self.conflict_threshold))


@dataclass(frozen=True)
class WindowStats:
    """Transition counts observed in one window.

    ``counts[i][j]`` is the number of i+1 -> j+1 transitions.
    ``first_state`` records the state carried in from the previous window
    boundary (None for the first window of a stream) and ``last_state``
    the carry-out that the next window's first observation pairs with, so
    no boundary transition is dropped.
    """

    counts: np.ndarray
    window_index: int
    first_state: Optional[int] = None
    last_state: Optional[int] = None

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ObservationError(f"counts must be square, got shape {counts.shape}")
        if (counts < 0).any():
            raise ObservationError("transition counts must be nonnegative")
        counts = counts.copy()
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "window_index", int(self.window_index))

    @property
    def num_states(self) -> int:
        return self.counts.shape[0]


@dataclass(frozen=True)
class IdentifierOutput:
    """Result of one identification step.

    ``transition`` is the row-wise projection of ``opinions`` (row
    stochastic), ``conflicts`` the per-row degree of conflict against the
    carried opinion, and ``reset_rows`` the 0-based rows whose carried
    opinion was discarded by the consistency test.
    """

    transition: np.ndarray
    opinions: OpinionMatrix
    conflicts: tuple[float, ...]
    reset_rows: frozenset[int]
    window_index: int = 0

    def __post_init__(self):
        transition = np.asarray(self.transition, dtype=float).copy()
        transition.setflags(write=False)
        object.__setattr__(self, "transition", transition)

    @property
    def uncertainties(self) -> tuple[float, ...]:
        return tuple(op.uncertainty for op in self.opinions)


def _validated_states(window, num_states: int) -> np.ndarray:
    states = np.asarray(window)
    if not np.issubdtype(states.dtype, np.integer):
        rounded = np.rint(states)
        if not np.all(states == rounded):
            raise ObservationError("state observations must be integers")
        states = rounded
    states = states.astype(np.int64)
    bad = (states < 1) | (states > num_states)
    if bad.any():
        pos = int(np.argmax(bad))
        raise ObservationError(
            f"state id {states[pos]} at window offset {pos} outside 1..{num_states}"
        )
    return states


def accumulate_window(
    observations: Iterable[int],
    cfg: IdentifierConfig,
    carry: Optional[int] = None,
    window_index: int = 0,
) -> Optional[WindowStats]:
    """Consume one window of observations and count its transitions.

    Takes exactly ``cfg.window_len`` observations from the iterable;
    returns None if the stream ends first (end-of-stream signal).  With a
    carry state from the previous window the boundary transition is
    counted too, so a full window contributes ``window_len`` transitions
    and the first window ``window_len - 1``.
    """
    it = iter(observations)
    window = list(islice(it, cfg.window_len))
    if len(window) < cfg.window_len:
        return None

    states = _validated_states(window, cfg.num_states)
    if carry is not None:
        carry_state = _validated_states([carry], cfg.num_states)
        seq = np.concatenate([carry_state, states])
    else:
        seq = states

    counts = np.zeros((cfg.num_states, cfg.num_states), dtype=np.int64)
    np.add.at(counts, (seq[:-1] - 1, seq[1:] - 1), 1)
    return WindowStats(
        counts=counts,
        window_index=window_index,
        first_state=carry,
        last_state=int(states[-1]),
    )


def window_opinions(stats: WindowStats, cfg: IdentifierConfig) -> OpinionMatrix:
    """One opinion per state row from the window's transition counts.

    A row with no observed transitions maps to the vacuous opinion.
    """
    if stats.num_states != cfg.num_states:
        raise ConfigurationError(
            f"stats have {stats.num_states} states, config {cfg.num_states}"
        )
    return tuple(
        opinion_from_evidence(
            EvidenceVector(
                evidence=tuple(float(c) for c in stats.counts[i]),
                prior_weight=cfg.prior_weight,
                base_rate=cfg.base_rates[i],
            )
        )
        for i in range(cfg.num_states)
    )


def _fuse_with_vacuous_limit(a: Opinion, b: Opinion) -> Opinion:
    # A vacuous operand carries zero evidence; the fusion limit returns
    # the other operand.  Keeps rows with unvisited states well-defined.
    if a.is_vacuous:
        return b
    if b.is_vacuous:
        return a
    return cumulative_fuse(a, b)


def step(
    prev: Optional[OpinionMatrix],
    stats: WindowStats,
    cfg: IdentifierConfig,
) -> IdentifierOutput:
    """Combine one window of statistics with the carried opinion matrix.

    Both operands are trust-discounted per row, compared through the
    degree of conflict, and fused when the conflict stays at or below the
    threshold; otherwise the carried row is discarded (a reset).  With no
    previous matrix (first window) the window opinions pass through
    unchanged.
    """
    new_rows = window_opinions(stats, cfg)
    n = cfg.num_states

    if prev is None:
        rows = new_rows
        conflicts = (0.0,) * n
        resets: frozenset[int] = frozenset()
    else:
        if len(prev) != n or any(op.cardinality != n for op in prev):
            raise ConfigurationError(
                f"previous opinion matrix does not match {n} states"
            )
        fused_rows = []
        conflict_values = []
        reset_rows = set()
        for i in range(n):
            prev_i = trust_discount(prev[i], cfg.discount_prev[i])
            new_i = trust_discount(new_rows[i], cfg.discount_new[i])
            conflict = degree_of_conflict(prev_i, new_i)
            conflict_values.append(conflict)
            if conflict <= cfg.conflict_threshold:
                fused_rows.append(_fuse_with_vacuous_limit(new_i, prev_i))
            else:
                fused_rows.append(new_i)
                reset_rows.add(i)
        rows = tuple(fused_rows)
        conflicts = tuple(conflict_values)
        resets = frozenset(reset_rows)

    transition = np.array([project(op) for op in rows], dtype=float)
    return IdentifierOutput(
        transition=transition,
        opinions=rows,
        conflicts=conflicts,
        reset_rows=resets,
        window_index=stats.window_index,
    )


def run_with_stats(
    observations: Iterable[int],
    cfg: IdentifierConfig,
    prev: Optional[OpinionMatrix] = None,
) -> Iterator[tuple[WindowStats, IdentifierOutput]]:
    """Like :func:`run`, but also yields each window's transition counts."""
    it = iter(observations)
    carry: Optional[int] = None
    window_index = 0
    while True:
        try:
            stats = accumulate_window(it, cfg, carry=carry, window_index=window_index)
        except ObservationError as err:
            raise ObservationError(f"window {window_index}: {err}") from err
        if stats is None:
            return
        output = step(prev, stats, cfg)
        yield stats, output
        prev = output.opinions
        carry = stats.last_state
        window_index += 1


def run(
    observations: Iterable[int],
    cfg: IdentifierConfig,
    prev: Optional[OpinionMatrix] = None,
) -> Iterator[IdentifierOutput]:
    """Drive the identifier over consecutive windows of a stream.

    Yields one output per complete window; a trailing partial window is
    dropped.  Deterministic given the stream and configuration.
    """
    for _, output in run_with_stats(observations, cfg, prev):
        yield output


def classical_estimate(stats: WindowStats | np.ndarray) -> np.ndarray:
    """Per-window maximum-likelihood transition estimate: counts / row sums.

    Rows without any observed transition fall back to the uniform
    distribution; callers can detect them from the zero row sums.
    """
    counts = stats.counts if isinstance(stats, WindowStats) else np.asarray(stats)
    counts = counts.astype(float)
    n = counts.shape[0]
    row_sums = counts.sum(axis=1, keepdims=True)
    estimate = np.full((n, n), 1.0 / n)
    seen = row_sums[:, 0] > 0
    estimate[seen] = counts[seen] / row_sums[seen]
    return estimate
