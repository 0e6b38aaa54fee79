"""Exact fault-tolerant network clock synchronization and its resilience bounds.

Recovers per-node clock offsets from all-pairs peer-to-peer offset
measurements in which some sessions err by a whole number of signal
periods, and computes how many such faults an N-node system provably
tolerates.  All arithmetic is exact rational.
"""

from .linalg import (
    LinAlgError,
    Matrix,
    Rational,
    SolveKind,
    SolveOutcome,
    as_rational,
    classify_solve,
    rank,
)
from .model import (
    ColumnLayout,
    FaultAssignment,
    GroundTruth,
    MeasurementSet,
    ModelError,
    PairIndex,
    Topology,
    build_estimation_system,
    build_revectorized_system,
    correctly_positioned_count,
    relabel,
    relabel_measurements,
)
from .phase import (
    AmbiguitySet,
    PhaseError,
    SessionTrace,
    candidate_offsets,
    classify_session,
    random_faults,
    random_truth,
    rounded_phase_differences,
    simulate_measurements,
    synthesize_trace,
)
from .recovery import (
    RecoveryError,
    RecoveryResult,
    RecoveryVerdict,
    UnrecoverableError,
    recover,
    verify_recovery,
)
from .resilience import (
    BudgetExceeded,
    CounterexampleEvidence,
    KVerdict,
    RankConditionCheck,
    ResilienceError,
    ResilienceReport,
    check_sufficient_condition,
    condition_holds_fast,
    enumerate_actual_classes,
    lower_bound,
    tolerance_percentage,
    upper_bound_counterexample,
)

__version__ = "0.1.0"
