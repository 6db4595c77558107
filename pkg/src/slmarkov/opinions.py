"""Multinomial subjective-logic opinions and their evidence algebra.

An opinion over a finite domain of k >= 2 outcomes is a triple
(belief, uncertainty, base_rate) with

    sum(belief) + uncertainty = 1,      sum(base_rate) = 1,

where every mass lies in [0, 1].  Opinions correspond one-to-one with
Dirichlet densities through the evidence mapping

    belief[x] = evidence[x] / (W + total_evidence)
    uncertainty = W / (W + total_evidence)

with W the non-informative prior weight (W = 2 gives the Beta family on
binary domains).  This module provides that mapping in both directions,
the projected (expected) probability, cumulative evidence fusion, trust
discounting, and the degree-of-conflict distance used for consistency
checks between opinions.

All values here are immutable; every operation is a pure function, so
opinions can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "SubjectiveLogicError",
    "DogmaticOpinionError",
    "FusionDomainError",
    "Opinion",
    "EvidenceVector",
    "project",
    "opinion_from_evidence",
    "evidence_from_opinion",
    "dirichlet_pdf",
    "cumulative_fuse",
    "trust_discount",
    "degree_of_conflict",
]

# Normalization policy: drift <= _DRIFT_KEEP is left alone, drift up to
# _DRIFT_FIX is silently renormalized (rounding), anything larger is a
# logic bug and rejected.
_DRIFT_KEEP = 1e-12
_DRIFT_FIX = 1e-6
_SHARED_BASE_RATE_TOL = 1e-9


class SubjectiveLogicError(ValueError):
    """Invalid input to a subjective-logic operation."""


class DogmaticOpinionError(SubjectiveLogicError):
    """Raised when a dogmatic opinion (uncertainty 0) has no finite evidence form."""


class FusionDomainError(SubjectiveLogicError):
    """Raised when an operand's uncertainty lies outside the open interval (0, 1)."""


def _as_mass_tuple(values, label: str) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    for v in out:
        if not math.isfinite(v):
            raise SubjectiveLogicError(f"{label} contains non-finite value {v!r}")
        if v < -_DRIFT_FIX or v > 1.0 + _DRIFT_FIX:
            raise SubjectiveLogicError(f"{label} component {v!r} outside [0, 1]")
    # Clip rounding residue so downstream arithmetic stays in range.
    return tuple(min(1.0, max(0.0, v)) for v in out)


def _renormalized(values: tuple[float, ...], total: float) -> tuple[float, ...]:
    return tuple(v / total for v in values)


@dataclass(frozen=True)
class Opinion:
    """A subjective-logic opinion (belief masses, uncertainty mass, base rates).

    ``belief`` and ``base_rate`` have equal length k >= 2; ``base_rate``
    sums to one and ``sum(belief) + uncertainty == 1``.  Construction
    validates both identities, repairs drift up to 1e-6 and rejects
    anything worse.
    """

    belief: tuple[float, ...]
    uncertainty: float
    base_rate: tuple[float, ...]

    def __post_init__(self):
        belief = _as_mass_tuple(self.belief, "belief")
        base_rate = _as_mass_tuple(self.base_rate, "base_rate")
        u = float(self.uncertainty)
        if not math.isfinite(u) or u < -_DRIFT_FIX or u > 1.0 + _DRIFT_FIX:
            raise SubjectiveLogicError(f"uncertainty {u!r} outside [0, 1]")
        u = min(1.0, max(0.0, u))

        k = len(belief)
        if k < 2:
            raise SubjectiveLogicError("opinion domain needs at least two outcomes")
        if len(base_rate) != k:
            raise SubjectiveLogicError(
                f"belief has {k} outcomes but base_rate has {len(base_rate)}"
            )

        mass = math.fsum(belief) + u
        drift = abs(mass - 1.0)
        if drift > _DRIFT_FIX:
            raise SubjectiveLogicError(
                f"belief plus uncertainty sums to {mass!r}, expected 1"
            )
        if drift > _DRIFT_KEEP:
            belief = _renormalized(belief, mass)
            u = u / mass

        rate_sum = math.fsum(base_rate)
        rate_drift = abs(rate_sum - 1.0)
        if rate_drift > _DRIFT_FIX:
            raise SubjectiveLogicError(f"base_rate sums to {rate_sum!r}, expected 1")
        if rate_drift > _DRIFT_KEEP:
            base_rate = _renormalized(base_rate, rate_sum)

        object.__setattr__(self, "belief", belief)
        object.__setattr__(self, "uncertainty", u)
        object.__setattr__(self, "base_rate", base_rate)

    @property
    def cardinality(self) -> int:
        return len(self.belief)

    @property
    def is_vacuous(self) -> bool:
        return self.uncertainty >= 1.0

    @classmethod
    def vacuous(cls, base_rate) -> "Opinion":
        """The total-ignorance opinion: no belief mass, uncertainty one."""
        rate = tuple(float(a) for a in base_rate)
        return cls(belief=(0.0,) * len(rate), uncertainty=1.0, base_rate=rate)


@dataclass(frozen=True)
class EvidenceVector:
    """Per-outcome observation counts plus the non-informative prior weight.

    ``evidence`` holds nonnegative (not necessarily integer) counts,
    ``prior_weight`` is the W > 0 shared by all outcomes, and
    ``base_rate`` the prior distribution.  Together they parameterize a
    Dirichlet density with concentration ``evidence + base_rate * W``.
    """

    evidence: tuple[float, ...]
    prior_weight: float = 2.0
    base_rate: tuple[float, ...] | None = None

    def __post_init__(self):
        evidence = tuple(float(r) for r in self.evidence)
        if len(evidence) < 2:
            raise SubjectiveLogicError("evidence needs at least two outcomes")
        for r in evidence:
            if not math.isfinite(r) or r < 0.0:
                raise SubjectiveLogicError(f"negative or non-finite evidence {r!r}")
        w = float(self.prior_weight)
        if not math.isfinite(w) or w <= 0.0:
            raise SubjectiveLogicError(f"prior_weight must be positive, got {w!r}")

        if self.base_rate is None:
            base_rate = (1.0 / len(evidence),) * len(evidence)
        else:
            base_rate = _as_mass_tuple(self.base_rate, "base_rate")
            if len(base_rate) != len(evidence):
                raise SubjectiveLogicError(
                    f"evidence has {len(evidence)} outcomes but base_rate has {len(base_rate)}"
                )
            rate_sum = math.fsum(base_rate)
            rate_drift = abs(rate_sum - 1.0)
            if rate_drift > _DRIFT_FIX:
                raise SubjectiveLogicError(
                    f"base_rate sums to {rate_sum!r}, expected 1"
                )
            if rate_drift > _DRIFT_KEEP:
                base_rate = _renormalized(base_rate, rate_sum)

        object.__setattr__(self, "evidence", evidence)
        object.__setattr__(self, "prior_weight", w)
        object.__setattr__(self, "base_rate", base_rate)

    @property
    def cardinality(self) -> int:
        return len(self.evidence)

    @property
    def total(self) -> float:
        return math.fsum(self.evidence)


def project(op: Opinion) -> tuple[float, ...]:
    """Projected probability of an opinion: belief + base_rate * uncertainty.

    The result is a probability vector (sums to one, components in [0, 1]).
    """
    return tuple(
        b + a * op.uncertainty for b, a in zip(op.belief, op.base_rate)
    )


def opinion_from_evidence(ev: EvidenceVector) -> Opinion:
    """Map evidence counts to the equivalent opinion.

    With total evidence S and prior weight W the mapping is
    ``belief = evidence / (W + S)`` and ``uncertainty = W / (W + S)``;
    zero evidence gives the vacuous opinion.
    """
    total = ev.prior_weight + ev.total
    return Opinion(
        belief=tuple(r / total for r in ev.evidence),
        uncertainty=ev.prior_weight / total,
        base_rate=ev.base_rate,
    )


def evidence_from_opinion(op: Opinion, prior_weight: float = 2.0) -> EvidenceVector:
    """Invert the evidence mapping: evidence = W * belief / uncertainty.

    Dogmatic opinions (uncertainty 0) have no finite evidence
    representation and are rejected.
    """
    w = float(prior_weight)
    if w <= 0.0:
        raise SubjectiveLogicError(f"prior_weight must be positive, got {w!r}")
    if op.uncertainty <= 0.0:
        raise DogmaticOpinionError(
            "dogmatic opinion (uncertainty 0) has unbounded evidence"
        )
    u = op.uncertainty
    return EvidenceVector(
        evidence=tuple(w * b / u for b in op.belief),
        prior_weight=w,
        base_rate=op.base_rate,
    )


def dirichlet_pdf(ev: EvidenceVector, probs) -> float:
    """Dirichlet density at a probability vector, parameterized by evidence.

    The concentration parameters are ``alpha = evidence + base_rate * W``;
    all must be strictly positive.  A zero probability component is only
    admissible where ``alpha >= 1`` (the density is then 0, or finite for
    alpha exactly 1).
    """
    p = tuple(float(x) for x in probs)
    if len(p) != ev.cardinality:
        raise SubjectiveLogicError(
            f"probability vector has {len(p)} components, evidence has {ev.cardinality}"
        )
    if any(x < 0.0 for x in p):
        raise SubjectiveLogicError("probability components must be nonnegative")
    if abs(math.fsum(p) - 1.0) > 1e-9:
        raise SubjectiveLogicError(f"probabilities sum to {math.fsum(p)!r}, expected 1")

    alphas = [r + a * ev.prior_weight for r, a in zip(ev.evidence, ev.base_rate)]
    if any(a <= 0.0 for a in alphas):
        raise SubjectiveLogicError(f"nonpositive Dirichlet parameter in {alphas}")

    log_density = math.lgamma(math.fsum(alphas)) - math.fsum(
        math.lgamma(a) for a in alphas
    )
    for x, a in zip(p, alphas):
        if x == 0.0:
            if a < 1.0:
                raise SubjectiveLogicError(
                    "zero probability where the Dirichlet exponent is negative"
                )
            if a == 1.0:
                continue  # factor x**0 == 1
            return 0.0  # factor x**(a-1) == 0 for a > 1
        log_density += (a - 1.0) * math.log(x)
    return math.exp(log_density)


def cumulative_fuse(a: Opinion, b: Opinion) -> Opinion:
    """Cumulative belief fusion: merge two opinions as if pooling their evidence.

    Defined for operands whose uncertainties both lie strictly inside
    (0, 1).  The operator is commutative, and for opinions derived from
    evidence with a shared base rate it equals the opinion of the summed
    evidence.  Equal operand base rates are passed through unchanged;
    unequal ones are combined with the uncertainty-weighted rule.
    """
    if a.cardinality != b.cardinality:
        raise SubjectiveLogicError(
            f"cannot fuse opinions of cardinality {a.cardinality} and {b.cardinality}"
        )
    for op in (a, b):
        if not 0.0 < op.uncertainty < 1.0:
            raise FusionDomainError(
                f"fusion requires uncertainty in (0, 1), got {op.uncertainty!r}"
            )

    ua, ub = a.uncertainty, b.uncertainty
    denom = ua + ub - ua * ub
    belief = tuple(
        (ba * ub + bb * ua) / denom for ba, bb in zip(a.belief, b.belief)
    )
    uncertainty = ua * ub / denom

    if all(
        abs(ra - rb) <= _SHARED_BASE_RATE_TOL
        for ra, rb in zip(a.base_rate, b.base_rate)
    ):
        base_rate = a.base_rate
    else:
        rate_denom = ua + ub - 2.0 * ua * ub
        base_rate = tuple(
            (ra * ub + rb * ua - (ra + rb) * ua * ub) / rate_denom
            for ra, rb in zip(a.base_rate, b.base_rate)
        )

    return Opinion(belief=belief, uncertainty=uncertainty, base_rate=base_rate)


def trust_discount(op: Opinion, discount: float) -> Opinion:
    """Scale belief mass by a discount probability, moving the rest to uncertainty.

    ``discount = 1`` returns the opinion unchanged, ``discount = 0`` the
    vacuous opinion.  Base rates are untouched.
    """
    d = float(discount)
    if not 0.0 <= d <= 1.0:
        raise SubjectiveLogicError(f"discount must lie in [0, 1], got {d!r}")
    belief = tuple(d * b for b in op.belief)
    uncertainty = 1.0 - d * math.fsum(op.belief)
    return Opinion(belief=belief, uncertainty=uncertainty, base_rate=op.base_rate)


def degree_of_conflict(prev: Opinion, new: Opinion) -> float:
    """Distance between two opinions' projected probabilities, damped by uncertainty.

    Half the L1 distance between the projections, multiplied by
    ``(1 - u_prev) * (1 - u_new)``, so conflict with a vacuous opinion is
    zero.  Symmetric and bounded in [0, 1].
    """
    if prev.cardinality != new.cardinality:
        raise SubjectiveLogicError(
            f"cannot compare opinions of cardinality {prev.cardinality} and {new.cardinality}"
        )
    p_prev = project(prev)
    p_new = project(new)
    distance = 0.5 * math.fsum(abs(x - y) for x, y in zip(p_prev, p_new))
    attenuation = (1.0 - prev.uncertainty) * (1.0 - new.uncertainty)
    return distance * attenuation
