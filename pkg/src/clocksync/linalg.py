"""Exact rational dense linear algebra for small systems.

Rank, solvability classification, unique-solution extraction, and
null-space bases, all over arbitrary-precision rational arithmetic so
that rank and uniqueness decisions never depend on a floating-point
tolerance.  Sized for the systems this package builds: at most a few
dozen rows and columns, with left-hand entries in {-1, 0, 1}.

Two independent elimination routes are kept on purpose: ``rank`` uses
fraction-free (Bareiss) integer elimination, while ``classify_solve``
uses reduced row echelon form over ``Fraction``.  The test suite
cross-checks one against the other.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Iterable, Sequence

# The package-wide exact scalar type.  ``fractions.Fraction`` already
# guarantees a canonical form (positive denominator, reduced by gcd)
# and structural equality.
Rational = Fraction

Vector = tuple[Fraction, ...]


class LinAlgError(ValueError):
    """Malformed matrix or vector input (dimension mismatch, empty shape)."""


def as_rational(value: int | str | Fraction) -> Fraction:
    """Coerce ints, exact decimal/fraction strings, or Fractions to Fraction."""
    if isinstance(value, float):
        raise LinAlgError(f"refusing inexact float {value!r}; pass int, str, or Fraction")
    return Fraction(value)


def vector(values: Iterable[int | str | Fraction]) -> Vector:
    return tuple(as_rational(v) for v in values)


@dataclass(frozen=True)
class Matrix:
    """Immutable dense matrix of rationals.

    Construct with :meth:`from_rows`; entries are normalized to
    ``Fraction`` and stored row-major as nested tuples.
    """

    entries: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        if not self.entries or not self.entries[0]:
            raise LinAlgError("matrix needs at least one row and one column")
        width = len(self.entries[0])
        if any(len(row) != width for row in self.entries):
            raise LinAlgError("rows have inconsistent lengths")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int | str | Fraction]]) -> "Matrix":
        return cls(tuple(tuple(as_rational(x) for x in row) for row in rows))

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    def at(self, i: int, j: int) -> Fraction:
        return self.entries[i][j]

    def row(self, i: int) -> Vector:
        return self.entries[i]

    def column(self, j: int) -> Vector:
        return tuple(row[j] for row in self.entries)

    def transpose(self) -> "Matrix":
        return Matrix(tuple(zip(*self.entries)))

    def mul_vector(self, x: Sequence[Fraction]) -> Vector:
        if len(x) != self.cols:
            raise LinAlgError(f"vector length {len(x)} != column count {self.cols}")
        return tuple(sum(a * b for a, b in zip(row, x)) for row in self.entries)

    def augment(self, b: Sequence[Fraction]) -> "Matrix":
        if len(b) != self.rows:
            raise LinAlgError(f"rhs length {len(b)} != row count {self.rows}")
        return Matrix(tuple(row + (as_rational(v),) for row, v in zip(self.entries, b)))


class SolveKind(enum.Enum):
    NO_SOLUTION = "no_solution"
    UNIQUE = "unique"
    INFINITE = "infinite"


@dataclass(frozen=True)
class SolveOutcome:
    """Classification of a linear system A x = b.

    ``solution`` is present exactly for UNIQUE outcomes.  INFINITE
    outcomes carry a particular solution (free variables set to zero),
    a null-space basis (one vector per free column, unit in that
    column), and the nullity.  The basis convention is fixed so that
    outcomes are byte-for-byte reproducible.
    """

    kind: SolveKind
    solution: Vector | None = None
    particular: Vector | None = None
    basis: tuple[Vector, ...] = ()
    nullity: int = 0

    @property
    def is_unique(self) -> bool:
        return self.kind is SolveKind.UNIQUE

    @property
    def is_infinite(self) -> bool:
        return self.kind is SolveKind.INFINITE

    @property
    def has_solution(self) -> bool:
        return self.kind is not SolveKind.NO_SOLUTION


def _integer_rows(m: Matrix) -> list[list[int]]:
    # Scaling each row by the lcm of its denominators preserves rank.
    out = []
    for row in m.entries:
        scale = lcm(*(x.denominator for x in row)) if row else 1
        out.append([int(x * scale) for x in row])
    return out


def rank(m: Matrix) -> int:
    """Exact rank over the rationals via fraction-free Bareiss elimination.

    Pivots take the first nonzero entry in column order, which keeps
    the elimination deterministic; exact arithmetic makes magnitude
    pivoting unnecessary.
    """
    a = _integer_rows(m)
    nrows, ncols = m.rows, m.cols
    r = 0
    prev = 1
    for c in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if a[i][c] != 0), None)
        if piv is None:
            continue
        if piv != r:
            a[r], a[piv] = a[piv], a[r]
        for i in range(r + 1, nrows):
            aic = a[i][c]
            arc = a[r][c]
            row_i = a[i]
            row_r = a[r]
            for j in range(c + 1, ncols):
                row_i[j] = (arc * row_i[j] - aic * row_r[j]) // prev
            row_i[c] = 0
        prev = a[r][c]
        r += 1
    return r


def _rref(aug: list[list[Fraction]], ncols_a: int) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form in place; returns (matrix, pivot columns).

    Pivot search runs over all columns including the augmented ones, so
    a pivot at column index ``ncols_a`` signals inconsistency.
    """
    nrows = len(aug)
    ncols = len(aug[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if aug[i][c] != 0), None)
        if piv is None:
            continue
        if piv != r:
            aug[r], aug[piv] = aug[piv], aug[r]
        inv = aug[r][c]
        if inv != 1:
            aug[r] = [x / inv for x in aug[r]]
        for i in range(nrows):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
        pivots.append(c)
        r += 1
        if c >= ncols_a:
            break
    return aug, pivots


def classify_solve(a: Matrix, b: Sequence[Fraction]) -> SolveOutcome:
    """Classify A x = b as no-solution / unique / infinite, exactly.

    The system has no solution iff augmenting b raises the rank.  With
    equal ranks, the solution is unique iff A has full column rank;
    otherwise the affine solution space is returned as a particular
    solution plus a null-space basis with free variables set to unit
    vectors in column order.
    """
    if len(b) != a.rows:
        raise LinAlgError(f"rhs length {len(b)} != row count {a.rows}")
    n = a.cols
    aug = [list(row) + [as_rational(v)] for row, v in zip(a.entries, b)]
    aug, pivots = _rref(aug, n)
    if pivots and pivots[-1] == n:
        return SolveOutcome(kind=SolveKind.NO_SOLUTION)
    rank_a = len(pivots)
    if rank_a == n:
        x = [Fraction(0)] * n
        for r, c in enumerate(pivots):
            x[c] = aug[r][n]
        return SolveOutcome(kind=SolveKind.UNIQUE, solution=tuple(x))
    pivot_set = set(pivots)
    free_cols = [c for c in range(n) if c not in pivot_set]
    particular = [Fraction(0)] * n
    for r, c in enumerate(pivots):
        particular[c] = aug[r][n]
    basis = []
    for f in free_cols:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for r, c in enumerate(pivots):
            v[c] = -aug[r][f]
        basis.append(tuple(v))
    return SolveOutcome(
        kind=SolveKind.INFINITE,
        particular=tuple(particular),
        basis=tuple(basis),
        nullity=len(free_cols),
    )
