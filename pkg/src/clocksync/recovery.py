"""Fault-tolerant recovery of clock offsets from all-pairs measurements.

Starting from zero hypothesized faults and increasing one at a time,
try every placement of that many faults among the sessions and accept
the first placement whose estimation system has a unique solution with
all hypothesized fault magnitudes nonzero.  The fault count used is
therefore minimal.

Two deliberate rules beyond plain solvability:

* placements whose system is consistent but underdetermined are
  skipped (returning one point of an infinite family would be
  arbitrary); and
* a unique solution containing a zero fault estimate is rejected,
  since the same measurements are then consistent with fewer faults,
  contradicting minimality.

Remaining placements at the accepted fault count are still scanned and
any further acceptable solutions are reported as ambiguity, so
non-resilient regimes surface instead of hiding.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .linalg import SolveKind, Vector, classify_solve
from .model import (
    FaultAssignment,
    GroundTruth,
    MeasurementSet,
    Pair,
    PairIndex,
    Topology,
    build_estimation_system,
)

MAX_NODES_DEFAULT = 12


class RecoveryError(ValueError):
    """Bad input to the recovery procedure."""


class UnrecoverableError(RecoveryError):
    """No fault placement at any count explains the measurements acceptably."""


@dataclass(frozen=True)
class RecoveryCandidate:
    """One acceptable (placement, solution) pair at the minimal fault count."""

    positions: tuple[Pair, ...]
    offsets: Vector
    magnitudes: tuple[tuple[Pair, Fraction], ...]

    def magnitude_map(self) -> dict[Pair, Fraction]:
        return dict(self.magnitudes)


@dataclass(frozen=True)
class RecoveryResult:
    """Output of a successful recovery.

    ``offsets`` are the recovered per-node offsets relative to node 0,
    ``fault_positions``/``fault_magnitudes`` the accepted placement and
    its estimated magnitudes, and ``ambiguity`` any other placements at
    the same fault count that were also acceptable (diagnostic).
    """

    k_used: int
    fault_positions: FaultAssignment
    offsets: Vector
    fault_magnitudes: tuple[tuple[Pair, Fraction], ...]
    ambiguity: tuple[RecoveryCandidate, ...] = ()

    def magnitude_map(self) -> dict[Pair, Fraction]:
        return dict(self.fault_magnitudes)


def _extract(
    n: int, placement: tuple[Pair, ...], solution: Vector
) -> tuple[Vector, tuple[tuple[Pair, Fraction], ...]]:
    offsets = solution[: n - 1]
    magnitudes = tuple(zip(placement, solution[n - 1 :]))
    return offsets, magnitudes


def recover(topo: Topology, meas: MeasurementSet, *, force: bool = False) -> RecoveryResult:
    """Find the smallest fault count and placement explaining all measurements.

    Placements at each count are tried in lexicographic order over
    canonical row indices, so the result is deterministic.  Raises
    :class:`UnrecoverableError` if no placement at any count yields a
    unique solution with all-nonzero fault estimates (this cannot
    happen for measurements produced by the fault model).
    """
    n = topo.n
    if n > MAX_NODES_DEFAULT and not force:
        raise RecoveryError(
            f"n={n} exceeds the default enumeration cap of {MAX_NODES_DEFAULT}; "
            "pass force=True to run anyway"
        )
    if meas.n != n:
        raise RecoveryError(f"measurement set is for n={meas.n}, topology has n={n}")
    index = PairIndex(n)
    all_pairs = index.pairs
    m = len(all_pairs)
    for k in range(m + 1):
        accepted: list[RecoveryCandidate] = []
        for rows in combinations(range(m), k):
            placement = tuple(all_pairs[r] for r in rows)
            estimated = FaultAssignment.positions(placement)
            a, b, layout = build_estimation_system(topo, estimated, meas)
            outcome = classify_solve(a, b)
            if outcome.kind is not SolveKind.UNIQUE:
                continue
            assert outcome.solution is not None
            offsets, magnitudes = _extract(n, estimated.pairs, outcome.solution)
            if any(v == 0 for _, v in magnitudes):
                continue
            accepted.append(
                RecoveryCandidate(
                    positions=estimated.pairs, offsets=offsets, magnitudes=magnitudes
                )
            )
        if accepted:
            first = accepted[0]
            return RecoveryResult(
                k_used=k,
                fault_positions=FaultAssignment.positions(first.positions),
                offsets=first.offsets,
                fault_magnitudes=first.magnitudes,
                ambiguity=tuple(accepted[1:]),
            )
    raise UnrecoverableError(
        f"no placement of up to {m} faults explains the measurements"
    )


@dataclass(frozen=True)
class RecoveryVerdict:
    """Comparison of a recovery against the injected ground truth."""

    correct: bool
    details: tuple[str, ...] = ()


def verify_recovery(
    result: RecoveryResult, truth: GroundTruth, actual: FaultAssignment
) -> RecoveryVerdict:
    """Check a recovery against ground truth: exact offsets, positions, magnitudes."""
    details: list[str] = []
    if result.offsets != truth.offsets:
        details.append(
            f"offsets {tuple(map(str, result.offsets))} != truth {tuple(map(str, truth.offsets))}"
        )
    if result.fault_positions.positions_set() != actual.positions_set():
        details.append(
            f"positions {result.fault_positions.pairs} != actual {actual.pairs}"
        )
    elif actual.has_magnitudes:
        recovered = result.magnitude_map()
        for p, m in actual.magnitudes.items():
            got = recovered.get(p)
            if got != m:
                details.append(f"magnitude at {p}: got {got}, expected {m}")
    return RecoveryVerdict(correct=not details, details=tuple(details))
