"""wattroute: energy-aware LLM query routing.

Fits per-model energy operating curves from measurements, estimates accuracy
and energy for (model, strategy, token budget) actions, routes queries under
constraints, and simulates workloads against fixed-model baselines.
"""

from ._backend import active_backend
from .curvefit import (
    ComparisonRow,
    CurveValue,
    FitRequest,
    FitResult,
    compare_models,
    eval_curve,
    eval_curve_many,
    fit_curve,
    fit_from_measurements,
)
from .errors import (
    EstimationError,
    FitError,
    NoFeasibleActionError,
    SchemaError,
    SimulationError,
    StoreError,
    ValidationError,
    WattrouteError,
)
from .estimators import (
    AccuracyEstimate,
    Constraints,
    EnergyEstimate,
    Environment,
    QueryDescriptor,
    estimate_accuracy,
    estimate_energy,
    strategy_overhead,
    wilson_interval,
)
from .router import (
    RejectedAction,
    RoutingAction,
    RoutingDecision,
    RoutingPolicy,
    enumerate_actions,
    explain,
    load_policy,
    route,
    save_policy,
)
from .simulator import (
    FixedAction,
    PolicyOutcome,
    SimulationReport,
    WorkloadSpec,
    compare_policies,
    load_workload,
    run_simulation,
)
from .store import (
    BenchmarkRecord,
    EnergyMeasurement,
    IngestReport,
    OperatingCurve,
    ProfileStore,
    Strategy,
    energy_per_token,
    ingest_benchmark_table,
    ingest_measurements,
    load_store,
    save_store,
    store_fingerprint,
)
from .strategies import (
    BudgetSchedule,
    VoteBallot,
    adapt_threshold,
    choose_budget,
    load_schedule,
    majority_vote,
    save_schedule,
)

__version__ = "0.1.0"
