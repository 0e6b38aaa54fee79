"""Phase bookkeeping for period-assisted p2p synchronization sessions.

A session exchanges a request and a reply between two peers that both
sense the same external periodic impulse train (period T).  Each of
the four packet timestamps carries the elapsed clock time since the
last impulse.  The round-trip time then decomposes as the two wrapped
phase gaps plus a whole number of periods, and only that whole number
is ambiguous: every admissible split of it into request/reply periods
yields one candidate clock offset, and all candidates differ by
integer multiples of T.  Picking the wrong candidate is exactly how a
session ends up with an offset error of a nonzero multiple of T, which
is the fault model the rest of this package corrects.

Also houses the measurement simulator that injects such faults into an
otherwise exact all-pairs measurement set, and the per-session
classifier that recovers the injected multiple.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .linalg import as_rational
from .model import (
    FaultAssignment,
    GroundTruth,
    MeasurementSet,
    ModelError,
    Pair,
    PairIndex,
    Topology,
)


class PhaseError(ValueError):
    """Inconsistent or malformed session trace data."""


@dataclass(frozen=True)
class SessionTrace:
    """Timestamps and impulse phases of one request/reply session.

    t1/t4 are the initiator's send/receive clock readings, t2/t3 the
    responder's receive/send readings; phi1..phi4 are the elapsed clock
    times since the last impulse at each of those four events, each in
    [0, T).
    """

    t1: Fraction
    t2: Fraction
    t3: Fraction
    t4: Fraction
    phi1: Fraction
    phi2: Fraction
    phi3: Fraction
    phi4: Fraction
    period: Fraction

    def __post_init__(self) -> None:
        if self.period <= 0:
            raise PhaseError(f"period must be positive, got {self.period}")
        for name in ("phi1", "phi2", "phi3", "phi4"):
            phi = getattr(self, name)
            if not 0 <= phi < self.period:
                raise PhaseError(f"{name}={phi} outside [0, {self.period})")
        if self.t4 < self.t1:
            raise PhaseError("t4 precedes t1 on the initiator clock")
        if self.t3 < self.t2:
            raise PhaseError("t3 precedes t2 on the responder clock")

    @property
    def rtt(self) -> Fraction:
        return (self.t4 - self.t1) - (self.t3 - self.t2)


@dataclass(frozen=True)
class AmbiguitySet:
    """All clock-offset candidates consistent with one session trace."""

    rtt: Fraction
    theta_q: Fraction
    theta_p: Fraction
    candidate_period_sums: tuple[int, ...]
    candidate_offsets: tuple[Fraction, ...]


def rounded_phase_differences(trace: SessionTrace) -> tuple[Fraction, Fraction]:
    """Phase gaps of the request and reply legs, wrapped into [0, T)."""
    t = trace.period
    theta_q = trace.phi2 - trace.phi1
    if theta_q < 0:
        theta_q += t
    theta_p = trace.phi4 - trace.phi3
    if theta_p < 0:
        theta_p += t
    return theta_q, theta_p


def candidate_offsets(
    trace: SessionTrace, slack: Fraction | int = 0
) -> AmbiguitySet:
    """Enumerate the clock offsets consistent with a session trace.

    The round trip must equal theta_q + theta_p plus a non-negative
    whole number of periods; with exact inputs at most one such number
    exists, and each way of splitting it between the two legs yields
    one offset candidate.  A nonzero ``slack`` admits near-misses
    within +/- slack, modeling the sub-period displacement of real
    signals without touching the exact core.
    """
    t = trace.period
    slack = as_rational(slack)
    if slack < 0:
        raise PhaseError(f"slack must be non-negative, got {slack}")
    rtt = trace.rtt
    if rtt < 0:
        raise PhaseError(f"negative round-trip time {rtt}")
    theta_q, theta_p = rounded_phase_differences(trace)
    sums = []
    s = 0
    while theta_q + theta_p + s * t <= rtt + slack:
        if abs(rtt - (theta_q + theta_p + s * t)) <= slack:
            sums.append(s)
        s += 1
    if not sums:
        raise PhaseError(
            f"trace is inconsistent: no whole number of periods satisfies "
            f"rtt={rtt} = {theta_q} + {theta_p} + s*{t}"
        )
    offsets = []
    base = trace.t4 - trace.t3 - theta_p
    for total in sums:
        for reply_periods in range(total + 1):
            offsets.append(base - reply_periods * t)
    unique = tuple(sorted(set(offsets)))
    return AmbiguitySet(
        rtt=rtt,
        theta_q=theta_q,
        theta_p=theta_p,
        candidate_period_sums=tuple(sums),
        candidate_offsets=unique,
    )


def synthesize_trace(
    offset: Fraction | int | str,
    period: Fraction | int | str,
    request_delay: Fraction | int | str,
    reply_delay: Fraction | int | str,
    *,
    send_time: Fraction | int | str = 0,
    turnaround: Fraction | int | str = 0,
    impulse_phase: Fraction | int | str = 0,
    initiator_clock: Fraction | int | str = 0,
) -> SessionTrace:
    """Forward-generate the trace of a session with known true offset.

    Events are laid out in a common time frame: the request leaves at
    ``send_time`` and takes ``request_delay``; the responder waits
    ``turnaround`` and the reply takes ``reply_delay``.  Both clocks
    advance at the true rate; the initiator's clock leads the common
    frame by ``initiator_clock`` and the responder's by that minus
    ``offset``.  Impulses occur at ``impulse_phase`` plus whole
    multiples of the period.
    """
    delta = as_rational(offset)
    t = as_rational(period)
    if t <= 0:
        raise PhaseError(f"period must be positive, got {t}")
    d_q = as_rational(request_delay)
    d_p = as_rational(reply_delay)
    if d_q < 0 or d_p < 0:
        raise PhaseError("transmission delays must be non-negative")
    s1 = as_rational(send_time)
    s2 = s1 + d_q
    s3 = s2 + as_rational(turnaround)
    s4 = s3 + d_p
    a = as_rational(initiator_clock)
    b = a - delta
    phase = as_rational(impulse_phase)

    def phi(s: Fraction) -> Fraction:
        return (s - phase) % t

    return SessionTrace(
        t1=s1 + a,
        t2=s2 + b,
        t3=s3 + b,
        t4=s4 + a,
        phi1=phi(s1),
        phi2=phi(s2),
        phi3=phi(s3),
        phi4=phi(s4),
        period=t,
    )


def simulate_measurements(
    topo: Topology,
    truth: GroundTruth,
    faults: FaultAssignment,
    period: Fraction | int | str = 1,
) -> MeasurementSet:
    """All-pairs measurements from ground truth with injected session faults.

    Every fault magnitude must be a nonzero integer multiple of the
    period; faulty sessions measure the true offset plus their
    magnitude, all others measure exactly.
    """
    t = as_rational(period)
    if t <= 0:
        raise PhaseError(f"period must be positive, got {t}")
    if truth.n != topo.n:
        raise ModelError(f"ground truth is for n={truth.n}, topology has n={topo.n}")
    faults.validate_for(topo)
    magnitudes = faults.magnitudes if faults.has_magnitudes else {}
    if faults.pairs and not faults.has_magnitudes:
        raise PhaseError("fault assignment must carry magnitudes to simulate")
    for p, m in magnitudes.items():
        multiple = m / t
        if multiple.denominator != 1 or multiple == 0:
            raise PhaseError(
                f"fault magnitude {m} at {p} is not a nonzero integer multiple "
                f"of the period {t}"
            )
    values = {}
    for pair in PairIndex(topo.n).pairs:
        values[pair] = truth.delta(*pair) + magnitudes.get(pair, Fraction(0))
    return MeasurementSet.from_map(topo.n, values)


def classify_session(
    measured: Fraction | int | str,
    reference: Fraction | int | str,
    period: Fraction | int | str,
) -> int:
    """Number of whole periods by which a measurement errs; 0 means success.

    The error is rounded to the nearest whole multiple of the period;
    a residual of exactly half a period has no nearest multiple and is
    rejected.
    """
    t = as_rational(period)
    if t <= 0:
        raise PhaseError(f"period must be positive, got {t}")
    ratio = (as_rational(measured) - as_rational(reference)) / t
    n = round(ratio)
    residual = ratio - n
    if abs(residual) == Fraction(1, 2):
        raise PhaseError(
            f"displacement {measured} - {reference} sits exactly between "
            "two period multiples; classification is undefined"
        )
    return int(n)


# ---------------------------------------------------------------------------
# Seeded random generation for simulations and tests


def random_truth(rng: random.Random, n: int, magnitude: int = 12) -> GroundTruth:
    """Random exact offsets with small numerators and denominators."""
    return GroundTruth.of(
        Fraction(rng.randint(-magnitude, magnitude), rng.randint(1, 4))
        for _ in range(n - 1)
    )


def random_faults(
    rng: random.Random,
    topo: Topology,
    count: int,
    period: Fraction | int | str = 1,
    max_multiple: int = 5,
) -> FaultAssignment:
    """A random placement of ``count`` faults with random nonzero multiples."""
    t = as_rational(period)
    pairs = rng.sample(PairIndex(topo.n).pairs, count)
    magnitudes = {}
    for p in pairs:
        multiple = rng.choice([m for m in range(-max_multiple, max_multiple + 1) if m])
        magnitudes[p] = multiple * t
    return FaultAssignment.with_magnitudes(magnitudes)
