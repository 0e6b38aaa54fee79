"""Domain model for all-pairs network clock synchronization.

Vocabulary types (topology, session pair indexing, fault assignments,
measurement sets, ground truth) and the builders that turn them into
exact linear systems:

* the estimation system over offset estimates and hypothesized fault
  magnitudes, whose right-hand side is the measurement vector; and
* the re-vectorized system in which the actual faults are moved into
  the unknown vector, used to analyze when recovery can go wrong.

Session pairs (i, j) always satisfy i > j.  The canonical row order
places the reference sessions (j, 0) first in ascending j, followed by
the remaining sessions sorted by j ascending then i ascending; for a
pair that is simply the sort key (j, i).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .linalg import Matrix, Rational, Vector, as_rational

Pair = tuple[int, int]


class ModelError(ValueError):
    """Invalid topology, pair, assignment, or measurement input."""


def canonical_pair_key(pair: Pair) -> tuple[int, int]:
    i, j = pair
    return (j, i)


@dataclass(frozen=True)
class Topology:
    """An N-node system in which every unordered pair runs one session."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 3:
            raise ModelError(
                f"need at least 3 nodes, got {self.n}: with fewer there is "
                "no cross-check among sessions"
            )

    @property
    def session_count(self) -> int:
        return self.n * (self.n - 1) // 2


@lru_cache(maxsize=None)
def _pairs_for(n: int) -> tuple[Pair, ...]:
    reference = [(j, 0) for j in range(1, n)]
    others = [(i, j) for j in range(1, n - 1) for i in range(j + 1, n)]
    return tuple(reference + others)


@lru_cache(maxsize=None)
def _row_index_for(n: int) -> dict[Pair, int]:
    return {p: r for r, p in enumerate(_pairs_for(n))}


@dataclass(frozen=True)
class PairIndex:
    """Bijection between session pairs and row indices of the system matrix."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 3:
            raise ModelError(f"need at least 3 nodes, got {self.n}")

    @property
    def pairs(self) -> tuple[Pair, ...]:
        return _pairs_for(self.n)

    def row_of(self, i: int, j: int) -> int:
        try:
            return _row_index_for(self.n)[(i, j)]
        except KeyError:
            raise ModelError(f"({i},{j}) is not a valid session pair for n={self.n}")

    def pair_of(self, row: int) -> Pair:
        pairs = self.pairs
        if not 0 <= row < len(pairs):
            raise ModelError(f"row {row} out of range for n={self.n}")
        return pairs[row]

    def validate_pair(self, pair: Pair) -> Pair:
        i, j = pair
        if not (0 <= j < i < self.n):
            raise ModelError(f"({i},{j}) is not a valid session pair for n={self.n}")
        return (i, j)


def _normalize_pairs(pairs: Iterable[Pair]) -> tuple[Pair, ...]:
    seen = []
    for p in pairs:
        i, j = p
        if not (isinstance(i, int) and isinstance(j, int) and i > j >= 0):
            raise ModelError(f"malformed session pair {p!r}; expected i > j >= 0")
        seen.append((i, j))
    if len(set(seen)) != len(seen):
        raise ModelError(f"duplicate session pairs in {seen}")
    return tuple(sorted(seen, key=canonical_pair_key))


@dataclass(frozen=True)
class FaultAssignment:
    """A set of session pairs, optionally with exact fault magnitudes.

    Pairs are stored in canonical order.  When magnitudes are present
    there is exactly one nonzero magnitude per pair.
    """

    pairs: tuple[Pair, ...]
    _magnitudes: tuple[tuple[Pair, Fraction], ...] | None = field(default=None)

    @classmethod
    def positions(cls, pairs: Iterable[Pair]) -> "FaultAssignment":
        return cls(pairs=_normalize_pairs(pairs))

    @classmethod
    def with_magnitudes(
        cls, magnitudes: Mapping[Pair, int | str | Fraction]
    ) -> "FaultAssignment":
        pairs = _normalize_pairs(magnitudes.keys())
        mags = []
        for p in pairs:
            m = as_rational(magnitudes[p])
            if m == 0:
                raise ModelError(f"fault magnitude for {p} must be nonzero")
            mags.append((p, m))
        return cls(pairs=pairs, _magnitudes=tuple(mags))

    @property
    def has_magnitudes(self) -> bool:
        return self._magnitudes is not None

    @property
    def magnitudes(self) -> dict[Pair, Fraction]:
        if self._magnitudes is None:
            raise ModelError("assignment carries positions only, no magnitudes")
        return dict(self._magnitudes)

    def magnitude_of(self, pair: Pair) -> Fraction:
        return self.magnitudes[pair]

    def __len__(self) -> int:
        return len(self.pairs)

    def positions_set(self) -> frozenset[Pair]:
        return frozenset(self.pairs)

    def validate_for(self, topo: Topology) -> "FaultAssignment":
        index = PairIndex(topo.n)
        for p in self.pairs:
            index.validate_pair(p)
        return self


@dataclass(frozen=True)
class MeasurementSet:
    """One measured clock offset per session, in canonical row order."""

    n: int
    values: Vector

    def __post_init__(self) -> None:
        expected = self.n * (self.n - 1) // 2
        if len(self.values) != expected:
            raise ModelError(
                f"expected {expected} measurements for n={self.n}, got {len(self.values)}"
            )

    @classmethod
    def from_map(
        cls, n: int, values: Mapping[Pair, int | str | Fraction]
    ) -> "MeasurementSet":
        index = PairIndex(n)
        missing = [p for p in index.pairs if p not in values]
        if missing:
            raise ModelError(f"missing measurements for pairs {missing}")
        extra = [p for p in values if p not in set(index.pairs)]
        if extra:
            raise ModelError(f"measurements for invalid pairs {extra}")
        return cls(n=n, values=tuple(as_rational(values[p]) for p in index.pairs))

    def value_of(self, pair: Pair) -> Fraction:
        return self.values[PairIndex(self.n).row_of(*pair)]

    def as_map(self) -> dict[Pair, Fraction]:
        return dict(zip(PairIndex(self.n).pairs, self.values))


@dataclass(frozen=True)
class GroundTruth:
    """True clock offsets relative to the reference node 0.

    Stores delta_j0 for j = 1..N-1; offsets between non-reference nodes
    are always derived as delta_i0 - delta_j0, never stored.
    """

    offsets: Vector

    def __post_init__(self) -> None:
        if len(self.offsets) < 2:
            raise ModelError("ground truth needs at least 2 offsets (n >= 3)")

    @classmethod
    def of(cls, offsets: Iterable[int | str | Fraction]) -> "GroundTruth":
        return cls(offsets=tuple(as_rational(x) for x in offsets))

    @classmethod
    def zeros(cls, n: int) -> "GroundTruth":
        return cls(offsets=(Fraction(0),) * (n - 1))

    @property
    def n(self) -> int:
        return len(self.offsets) + 1

    def offset_of(self, j: int) -> Fraction:
        return Fraction(0) if j == 0 else self.offsets[j - 1]

    def delta(self, i: int, j: int) -> Fraction:
        return self.offset_of(i) - self.offset_of(j)


@dataclass(frozen=True)
class ColumnLayout:
    """Maps columns of a built system matrix to semantic unknowns.

    Columns 0..N-2 are the offset estimates; the next block holds one
    column per hypothesized fault position (in pair order); the final
    block, present only for re-vectorized systems, holds one column per
    actual fault position.
    """

    n: int
    estimated: tuple[Pair, ...] = ()
    actual: tuple[Pair, ...] = ()

    @property
    def num_cols(self) -> int:
        return (self.n - 1) + len(self.estimated) + len(self.actual)

    def offset_col(self, j: int) -> int:
        if not 1 <= j <= self.n - 1:
            raise ModelError(f"offset index {j} out of range for n={self.n}")
        return j - 1

    def estimated_col(self, pair: Pair) -> int:
        return (self.n - 1) + self.estimated.index(pair)

    def actual_col(self, pair: Pair) -> int:
        return (self.n - 1) + len(self.estimated) + self.actual.index(pair)

    def describe(self, col: int) -> tuple[str, int | Pair]:
        if col < 0 or col >= self.num_cols:
            raise ModelError(f"column {col} out of range")
        if col < self.n - 1:
            return ("offset", col + 1)
        col -= self.n - 1
        if col < len(self.estimated):
            return ("estimated", self.estimated[col])
        return ("actual", self.actual[col - len(self.estimated)])


def _base_rows(n: int) -> list[list[Fraction]]:
    zero, one = Fraction(0), Fraction(1)
    rows = []
    for (i, j) in _pairs_for(n):
        row = [zero] * (n - 1)
        row[i - 1] = one
        if j > 0:
            row[j - 1] = -one
        rows.append(row)
    return rows


def build_estimation_system(
    topo: Topology, estimated: FaultAssignment, meas: MeasurementSet
) -> tuple[Matrix, Vector, ColumnLayout]:
    """Build the system whose solutions explain all measurements.

    The unknowns are the N-1 offset estimates followed by one fault
    estimate per hypothesized position; the right-hand side is the
    measurement vector in canonical row order.  Each hypothesized
    position contributes a +1 entry in its own session row.
    """
    n = topo.n
    if meas.n != n:
        raise ModelError(f"measurement set is for n={meas.n}, topology has n={n}")
    estimated.validate_for(topo)
    index = _row_index_for(n)
    zero, one = Fraction(0), Fraction(1)
    rows = _base_rows(n)
    for p in estimated.pairs:
        for r, row in enumerate(rows):
            row.append(one if r == index[p] else zero)
    layout = ColumnLayout(n=n, estimated=estimated.pairs)
    a = Matrix(tuple(tuple(row) for row in rows))
    return a, meas.values, layout


def build_revectorized_system(
    topo: Topology,
    estimated: FaultAssignment,
    actual: FaultAssignment,
    truth: GroundTruth,
) -> tuple[Matrix, Vector, ColumnLayout]:
    """Build the system with the actual faults moved to the unknown side.

    Actual fault positions contribute -1 entries (they migrate from the
    right-hand side), and the right-hand side holds the fault-free true
    offsets derived from ``truth``.
    """
    n = topo.n
    if truth.n != n:
        raise ModelError(f"ground truth is for n={truth.n}, topology has n={n}")
    estimated.validate_for(topo)
    actual.validate_for(topo)
    index = _row_index_for(n)
    zero, one = Fraction(0), Fraction(1)
    rows = _base_rows(n)
    for p in estimated.pairs:
        for r, row in enumerate(rows):
            row.append(one if r == index[p] else zero)
    for p in actual.pairs:
        for r, row in enumerate(rows):
            row.append(-one if r == index[p] else zero)
    layout = ColumnLayout(n=n, estimated=estimated.pairs, actual=actual.pairs)
    a = Matrix(tuple(tuple(row) for row in rows))
    b = tuple(truth.delta(i, j) for (i, j) in _pairs_for(n))
    return a, b, layout


def correctly_positioned_count(
    estimated: FaultAssignment, actual: FaultAssignment
) -> int:
    """Number of hypothesized positions that are actually faulty."""
    return len(estimated.positions_set() & actual.positions_set())


def _validate_permutation(perm: Sequence[int]) -> tuple[int, ...]:
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise ModelError(f"{perm!r} is not a permutation of 0..{n - 1}")
    return tuple(perm)


def relabel(assignment: FaultAssignment, perm: Sequence[int]) -> FaultAssignment:
    """Apply a node relabeling to an assignment; magnitudes carry along."""
    p = _validate_permutation(perm)

    def map_pair(pair: Pair) -> Pair:
        a, b = p[pair[0]], p[pair[1]]
        return (a, b) if a > b else (b, a)

    if assignment.has_magnitudes:
        return FaultAssignment.with_magnitudes(
            {map_pair(q): m for q, m in assignment.magnitudes.items()}
        )
    return FaultAssignment.positions(map_pair(q) for q in assignment.pairs)


def relabel_measurements(meas: MeasurementSet, perm: Sequence[int]) -> MeasurementSet:
    """Relabel nodes in a measurement set.

    A measured offset is oriented (value for pair (i, j) is clock i
    minus clock j), so sessions whose endpoints swap order under the
    permutation flip sign.
    """
    p = _validate_permutation(perm)
    if len(p) != meas.n:
        raise ModelError(f"permutation length {len(p)} != n={meas.n}")
    out: dict[Pair, Fraction] = {}
    for (i, j), v in meas.as_map().items():
        a, b = p[i], p[j]
        if a > b:
            out[(a, b)] = v
        else:
            out[(b, a)] = -v
    return MeasurementSet.from_map(meas.n, out)
