"""Resilience-bound machinery.

The sufficient condition for a system to tolerate a given number of
faults is a rank identity on the re-vectorized system: the rank must
equal (N - 1) + k + K - l, where k and K are the hypothesized and
actual fault counts and l is the overlap between the two placements.

``check_sufficient_condition`` evaluates that condition by building the
re-vectorized matrix and computing its rank with exact arithmetic.

``lower_bound`` sweeps K upward, quantifying over all actual and
hypothesized placements, and returns K - 1 at the first violation.
Because the condition is invariant under node relabeling, the outer
loop over actual placements can be reduced to one representative per
isomorphism class of the fault edge set (``mode="reduced"``); the
hypothesized placements are never reduced, since a fixed actual
placement breaks the symmetry.

The sweep's inner loop uses an algebraic shortcut instead of a dense
elimination per pair: the hypothesized/actual fault columns are signed
unit vectors, so the rank of the re-vectorized matrix equals the size
of the union of the two placements plus the rank of the offset block
with those session rows deleted -- and that block is a reduced
incidence matrix of the complete graph, whose rank is N minus the
number of connected components after deleting the union's edges.  The
condition therefore holds exactly when the complete graph stays
connected after removing the union.  The shortcut is cross-validated
against the dense-rank route by the test suite, any reported witness
is re-derived with the dense route, and ``rank_backend="dense"``
forces per-pair eliminations throughout.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations
from math import comb
from typing import Iterable, Sequence

from .linalg import Matrix, SolveOutcome, classify_solve, rank
from .model import (
    FaultAssignment,
    GroundTruth,
    MeasurementSet,
    ModelError,
    Pair,
    PairIndex,
    Topology,
    build_estimation_system,
    build_revectorized_system,
    canonical_pair_key,
)

MAX_NODES_DEFAULT = 12


class ResilienceError(ValueError):
    """Bad input to a resilience computation."""


class BudgetExceeded(RuntimeError):
    """A bounded sweep ran out of budget; carries the partial report."""

    def __init__(self, report: "ResilienceReport") -> None:
        super().__init__("resilience sweep budget exhausted")
        self.report = report


@dataclass(frozen=True)
class RankConditionCheck:
    """One evaluation of the sufficient rank condition."""

    n: int
    big_k: int
    k: int
    actual: tuple[Pair, ...]
    estimated: tuple[Pair, ...]
    l: int
    rank_a_prime: int
    holds: bool

    @property
    def required_rank(self) -> int:
        return self.n - 1 + self.k + self.big_k - self.l


def check_sufficient_condition(
    topo: Topology, actual: FaultAssignment, estimated: FaultAssignment
) -> RankConditionCheck:
    """Evaluate the rank condition for one (actual, estimated) placement pair.

    The right-hand side is immaterial to the rank, so the system is
    built over an all-zero ground truth.  Requires the hypothesized
    count not to exceed the actual count.
    """
    big_k, k = len(actual), len(estimated)
    if k > big_k:
        raise ResilienceError(f"estimated count {k} exceeds actual count {big_k}")
    actual.validate_for(topo)
    estimated.validate_for(topo)
    a_prime, _, _ = build_revectorized_system(
        topo, estimated, actual, GroundTruth.zeros(topo.n)
    )
    r = rank(a_prime)
    l = len(actual.positions_set() & estimated.positions_set())
    required = topo.n - 1 + k + big_k - l
    return RankConditionCheck(
        n=topo.n,
        big_k=big_k,
        k=k,
        actual=actual.pairs,
        estimated=estimated.pairs,
        l=l,
        rank_a_prime=r,
        holds=(r == required),
    )


def _connected_after_deleting(n: int, deleted: Iterable[Pair]) -> bool:
    """Is the complete graph on n nodes still connected minus these edges?"""
    removed = [0] * n
    count = 0
    for i, j in deleted:
        removed[i] |= 1 << j
        removed[j] |= 1 << i
        count += 1
    if count < n - 1:
        return True
    full = (1 << n) - 1
    visited = 1
    frontier = 1
    while frontier:
        reach = 0
        f = frontier
        while f:
            v = (f & -f).bit_length() - 1
            f &= f - 1
            reach |= full & ~removed[v] & ~(1 << v)
        frontier = reach & ~visited
        visited |= frontier
    return visited == full


def condition_holds_fast(
    topo: Topology, actual: FaultAssignment, estimated: FaultAssignment
) -> bool:
    """Connectivity-based evaluation of the rank condition (see module docs)."""
    union = actual.positions_set() | estimated.positions_set()
    return _connected_after_deleting(topo.n, union)


# ---------------------------------------------------------------------------
# Isomorphism classes of fault placements


def _components(edges: tuple[Pair, ...]) -> list[tuple[Pair, ...]]:
    adj: dict[int, set[int]] = {}
    for i, j in edges:
        adj.setdefault(i, set()).add(j)
        adj.setdefault(j, set()).add(i)
    seen: set[int] = set()
    comps = []
    for start in adj:
        if start in seen:
            continue
        stack, verts = [start], set()
        while stack:
            v = stack.pop()
            if v in verts:
                continue
            verts.add(v)
            stack.extend(adj[v] - verts)
        seen |= verts
        comps.append(tuple(e for e in edges if e[0] in verts))
    return comps


def _edges_key(edges: Iterable[Pair]) -> tuple[tuple[int, int], ...]:
    return tuple(sorted(canonical_pair_key(e) for e in edges))


def _relabeled(edges: tuple[Pair, ...], label: dict[int, int]) -> list[Pair]:
    out = []
    for i, j in edges:
        a, b = label[i], label[j]
        out.append((a, b) if a > b else (b, a))
    return out


@lru_cache(maxsize=None)
def _component_canonical(edges: tuple[Pair, ...]) -> tuple[Pair, ...]:
    """Lexicographically smallest relabeling of one connected component."""
    verts = sorted({v for e in edges for v in e})
    best = None
    for perm in permutations(range(len(verts))):
        label = dict(zip(verts, perm))
        key = _edges_key(_relabeled(edges, label))
        if best is None or key < best:
            best = key
    assert best is not None
    return tuple((i, j) for j, i in best)


@lru_cache(maxsize=None)
def _canonical_edge_set(edges: tuple[Pair, ...]) -> tuple[Pair, ...]:
    """Lexicographically smallest relabeling over all node permutations.

    Connected graphs are minimized by brute force over their (at most
    edge-count + 1) vertices.  Disconnected graphs are minimized by
    distributing label subsets over components: within a fixed label
    subset the optimum is the order-preserving image of the component's
    canonical form, because the session-row ordering of edges is
    preserved by monotone relabelings.  Runs of identical components
    are interchangeable, so their subsets are forced into increasing
    order of minimum label.
    """
    if not edges:
        return ()
    comps = sorted(
        (_component_canonical(c) for c in _components(edges)), key=_edges_key
    )
    if len(comps) == 1:
        return comps[0]
    sizes = [len({v for e in c for v in e}) for c in comps]
    total = sum(sizes)

    best: tuple[tuple[int, int], ...] | None = None

    def place(remaining: list[int], idx: int, acc: list[Pair], floor: int) -> None:
        nonlocal best
        if idx == len(comps):
            key = _edges_key(acc)
            if best is None or key < best:
                best = key
            return
        same_as_prev = idx > 0 and comps[idx] == comps[idx - 1]
        for subset in combinations(remaining, sizes[idx]):
            if same_as_prev and subset[0] <= floor:
                continue
            # combinations yields ascending labels, so this mapping is
            # monotone and the component's canonical form stays optimal
            # within the chosen label subset.
            mapping = dict(enumerate(subset))
            placed = _relabeled(comps[idx], mapping)
            rest = [v for v in remaining if v not in set(subset)]
            place(rest, idx + 1, acc + placed, subset[0])

    place(list(range(total)), 0, [], -1)
    assert best is not None
    return tuple((i, j) for j, i in best)


@lru_cache(maxsize=None)
def _abstract_classes(k: int) -> tuple[tuple[Pair, ...], ...]:
    """All k-edge graphs with no isolated vertices, up to isomorphism.

    Generated level by level: every k-edge class extends some
    (k-1)-edge class by one edge among its vertices plus up to two
    fresh ones.  Representatives are canonical (lex-smallest) edge
    sets on vertex labels 0..t-1.
    """
    if k == 0:
        return ((),)
    out: dict[tuple[tuple[int, int], ...], tuple[Pair, ...]] = {}
    for parent in _abstract_classes(k - 1):
        t = len({v for e in parent for v in e})
        existing = set(parent)
        for a in range(t + 2):
            for b in range(a):
                if (a, b) in existing:
                    continue
                child = _canonical_edge_set(parent + ((a, b),))
                out.setdefault(_edges_key(child), child)
    return tuple(out[key] for key in sorted(out))


def enumerate_actual_classes(topo: Topology, k: int) -> tuple[tuple[Pair, ...], ...]:
    """Representatives of the orbits of k-edge placements under node relabeling.

    One lex-smallest representative per isomorphism class of the fault
    edge set, restricted to classes that fit in the topology, sorted by
    canonical session-row order.
    """
    if not 0 <= k <= topo.session_count:
        raise ResilienceError(
            f"fault count {k} out of range [0, {topo.session_count}] for n={topo.n}"
        )
    reps = [
        c
        for c in _abstract_classes(k)
        if len({v for e in c for v in e}) <= topo.n
    ]
    return tuple(sorted(reps, key=_edges_key))


# ---------------------------------------------------------------------------
# The lower-bound sweep


@dataclass(frozen=True)
class KVerdict:
    """Outcome of quantifying the rank condition at one actual fault count."""

    big_k: int
    verified: bool
    witness: RankConditionCheck | None = None


@dataclass(frozen=True)
class ResilienceReport:
    """Result of a lower-bound sweep.

    ``lower_bound`` is the largest K whose levels were all verified;
    on failure the first failing placement pair in enumeration order is
    recorded as the witness of that level.  ``complete`` is False when
    a budget stopped the sweep early, in which case only the verdicts
    for finished levels are present.
    """

    n: int
    mode: str
    lower_bound: int
    verdicts: tuple[KVerdict, ...]
    classes_examined: int
    rank_checks: int
    complete: bool = True


def tolerance_percentage(report: ResilienceReport) -> Fraction:
    """Tolerable-fault ratio: lower bound over the total session count."""
    sessions = report.n * (report.n - 1) // 2
    return Fraction(report.lower_bound, sessions)


class _Budget:
    def __init__(self, max_checks: int | None, seconds: float | None) -> None:
        self.max_checks = max_checks
        self.deadline = None if seconds is None else time.monotonic() + seconds
        self.checks = 0
        self.classes = 0

    def spend(self, n_checks: int) -> bool:
        self.checks += n_checks
        if self.max_checks is not None and self.checks > self.max_checks:
            return False
        if self.deadline is not None and time.monotonic() > self.deadline:
            return False
        return True


def _scan_actual(
    topo: Topology,
    actual_pairs: tuple[Pair, ...],
    budget: _Budget,
    backend: str,
) -> tuple[bool, tuple[Pair, ...] | None, bool]:
    """Quantify the condition over all hypothesized placements for one actual.

    Returns (all_hold, failing_estimated, within_budget).
    """
    n = topo.n
    index = PairIndex(n)
    all_pairs = index.pairs
    m = len(all_pairs)
    big_k = len(actual_pairs)
    actual_fa = FaultAssignment.positions(actual_pairs)
    actual_mask = 0
    removed_base = [0] * n
    for i, j in actual_pairs:
        actual_mask |= 1 << index.row_of(i, j)
        removed_base[i] |= 1 << j
        removed_base[j] |= 1 << i
    row_bit = [1 << r for r in range(m)]
    dense = backend == "dense"
    for k in range(big_k + 1):
        if not dense and k + big_k < n - 1:
            # No union of k + K sessions can disconnect the complete
            # graph, so every placement at this k holds; account for
            # the checks without enumerating them.
            if not budget.spend(comb(m, k)):
                return True, None, False
            continue
        for rows in combinations(range(m), k):
            if not budget.spend(1):
                return True, None, False
            if dense:
                estimated_fa = FaultAssignment.positions(all_pairs[r] for r in rows)
                holds = check_sufficient_condition(topo, actual_fa, estimated_fa).holds
            else:
                est_mask = 0
                for r in rows:
                    est_mask |= row_bit[r]
                overlap = (est_mask & actual_mask).bit_count()
                if k + big_k - overlap < n - 1:
                    holds = True
                else:
                    removed = list(removed_base)
                    for r in rows:
                        i, j = all_pairs[r]
                        removed[i] |= 1 << j
                        removed[j] |= 1 << i
                    full = (1 << n) - 1
                    visited = 1
                    frontier = 1
                    while frontier:
                        reach = 0
                        f = frontier
                        while f:
                            v = (f & -f).bit_length() - 1
                            f &= f - 1
                            reach |= full & ~removed[v] & ~(1 << v)
                        frontier = reach & ~visited
                        visited |= frontier
                    holds = visited == full
            if not holds:
                return False, tuple(all_pairs[r] for r in rows), True
    return True, None, True


def lower_bound(
    topo: Topology,
    mode: str = "reduced",
    *,
    max_k: int | None = None,
    max_checks: int | None = None,
    budget_seconds: float | None = None,
    jobs: int = 1,
    rank_backend: str = "fast",
    force: bool = False,
) -> ResilienceReport:
    """Sweep K upward and return the certified lower bound of resilience.

    For each K up to N - 2 (or ``max_k``), quantify the rank condition
    over every actual placement (isomorphism-class representatives in
    reduced mode, every subset in exhaustive mode) and every
    hypothesized placement of size at most K.  The first violation
    ends the sweep with lower bound K - 1 and the failing pair as a
    witness, re-derived through the dense-rank route.

    A ``max_checks`` or ``budget_seconds`` budget stops the sweep early
    with a partial report (``complete=False``) covering finished levels
    only; ``max_checks`` is deterministic, wall-clock budgets are not.
    """
    n = topo.n
    if n > MAX_NODES_DEFAULT and not force:
        raise ResilienceError(
            f"n={n} exceeds the default cap of {MAX_NODES_DEFAULT}; "
            "pass force=True to run anyway"
        )
    if mode not in ("reduced", "exhaustive"):
        raise ResilienceError(f"unknown mode {mode!r}")
    if rank_backend not in ("fast", "dense"):
        raise ResilienceError(f"unknown rank backend {rank_backend!r}")
    if jobs < 1:
        raise ResilienceError("jobs must be >= 1")

    index = PairIndex(n)
    m = topo.session_count
    cap = n - 2 if max_k is None else min(max_k, n - 2)
    budget = _Budget(max_checks, budget_seconds)
    verdicts: list[KVerdict] = []

    def finish(lb: int, complete: bool) -> ResilienceReport:
        report = ResilienceReport(
            n=n,
            mode=mode,
            lower_bound=lb,
            verdicts=tuple(verdicts),
            classes_examined=budget.classes,
            rank_checks=budget.checks,
            complete=complete,
        )
        return report

    for big_k in range(cap + 1):
        if mode == "reduced":
            actuals: Sequence[tuple[Pair, ...]] = enumerate_actual_classes(topo, big_k)
        else:
            actuals = [
                tuple(index.pairs[r] for r in rows)
                for rows in combinations(range(m), big_k)
            ]
        budget.classes += len(actuals)
        failure: tuple[tuple[Pair, ...], tuple[Pair, ...]] | None = None
        exhausted = False
        if jobs > 1 and len(actuals) > 1:
            results = _scan_level_parallel(topo, actuals, budget, rank_backend, jobs)
        else:
            results = []
            for actual_pairs in actuals:
                ok, bad_est, within = _scan_actual(topo, actual_pairs, budget, rank_backend)
                results.append((actual_pairs, ok, bad_est, within))
                if not within or not ok:
                    break
        for actual_pairs, ok, bad_est, within in results:
            if not within:
                exhausted = True
                break
            if not ok:
                assert bad_est is not None
                failure = (actual_pairs, bad_est)
                break
        if exhausted:
            raise BudgetExceeded(finish(big_k - 1, complete=False))
        if failure is not None:
            actual_fa = FaultAssignment.positions(failure[0])
            estimated_fa = FaultAssignment.positions(failure[1])
            witness = check_sufficient_condition(topo, actual_fa, estimated_fa)
            if witness.holds:
                raise AssertionError(
                    "internal disagreement between fast and dense condition "
                    f"checks at actual={failure[0]} estimated={failure[1]}"
                )
            verdicts.append(KVerdict(big_k=big_k, verified=False, witness=witness))
            return finish(big_k - 1, complete=True)
        verdicts.append(KVerdict(big_k=big_k, verified=True))
    return finish(cap, complete=True)


def _scan_class_task(
    args: tuple[int, tuple[Pair, ...], int | None, str]
) -> tuple[tuple[Pair, ...], bool, tuple[Pair, ...] | None, bool, int]:
    n, actual_pairs, max_checks, backend = args
    topo = Topology(n)
    budget = _Budget(max_checks, None)
    ok, bad_est, within = _scan_actual(topo, actual_pairs, budget, backend)
    return actual_pairs, ok, bad_est, within, budget.checks


def _scan_level_parallel(
    topo: Topology,
    actuals: Sequence[tuple[Pair, ...]],
    budget: _Budget,
    backend: str,
    jobs: int,
) -> list[tuple[tuple[Pair, ...], bool, tuple[Pair, ...] | None, bool]]:
    """Scan one level's actual placements across processes.

    Task order is preserved, so the first failure picked downstream is
    the same placement the serial scan would report; per-task budgets
    inherit whatever headroom the global budget has left.
    """
    from concurrent.futures import ProcessPoolExecutor

    remaining = None
    if budget.max_checks is not None:
        remaining = max(budget.max_checks - budget.checks, 0)
    tasks = [(topo.n, a, remaining, backend) for a in actuals]
    results = []
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for actual_pairs, ok, bad_est, within, spent in pool.map(
            _scan_class_task, tasks
        ):
            within = budget.spend(spent) and within
            results.append((actual_pairs, ok, bad_est, within))
            if not within or not ok:
                break
    return results


# ---------------------------------------------------------------------------
# Upper-bound counterexample


@dataclass(frozen=True)
class CounterexampleEvidence:
    """A fault placement whose own estimation system is underdetermined."""

    positions: FaultAssignment
    outcome: SolveOutcome
    rank_a: int
    num_cols: int

    @property
    def rank_deficit(self) -> int:
        return self.num_cols - self.rank_a


def upper_bound_counterexample(topo: Topology, big_k: int) -> CounterexampleEvidence:
    """Construct the placement showing K faults defeat recovery for K >= N-1.

    All N - 1 sessions incident to node 1 are made faulty, padded with
    the lexicographically first other sessions up to K.  With the
    hypothesized placement equal to the actual one, the offset column
    of node 1 is a linear combination of the fault columns, so the
    estimation system is consistent but underdetermined.
    """
    n = topo.n
    if big_k < n - 1:
        raise ResilienceError(
            f"counterexample construction needs K >= N-1 = {n - 1}, got {big_k}"
        )
    if big_k > topo.session_count:
        raise ResilienceError(
            f"K={big_k} exceeds the session count {topo.session_count}"
        )
    index = PairIndex(n)
    star = [p for p in index.pairs if 1 in p]
    rest = [p for p in index.pairs if 1 not in p]
    positions = star + rest[: big_k - len(star)]
    faults = FaultAssignment.with_magnitudes({p: Fraction(1) for p in positions})
    truth = GroundTruth.zeros(n)
    meas = MeasurementSet.from_map(
        n,
        {
            p: truth.delta(*p) + (faults.magnitudes.get(p, Fraction(0)))
            for p in index.pairs
        },
    )
    estimated = FaultAssignment.positions(positions)
    a, b, _ = build_estimation_system(topo, estimated, meas)
    outcome = classify_solve(a, b)
    return CounterexampleEvidence(
        positions=estimated,
        outcome=outcome,
        rank_a=rank(a),
        num_cols=a.cols,
    )
