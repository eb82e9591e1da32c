"""Candidate enumeration, constraint filtering, and optimal action selection.

The action space (models x strategies, chain-of-thought expanded over the
budget grid) holds at most a few dozen elements per query, so selection is
exhaustive enumeration: filter by constraints, rank by the objective, break
ties by lower energy, then declared model size rank, then action id. No
heuristic shortcuts; a straight-line re-enumeration must reproduce every
decision exactly.

Latency budgets are carried on queries but never filter an action: no
duration model is fitted (curves are energy-only), so there is nothing sound
to check them against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import EstimationError, NoFeasibleActionError, ValidationError
from .estimators import QueryDescriptor, estimate_accuracy, estimate_energy
from .store import ProfileStore, Strategy
from .strategies import BudgetSchedule

OBJECTIVES = ("max_accuracy", "min_energy", "scalarized")
STRATEGY_KINDS = ("zero_shot", "mv", "cot")
DEFAULT_MV_K = 16
DEFAULT_COT_STEPS = 5
DEFAULT_MV_UNCERTAINTY_WIDTH = 0.2


@dataclass(frozen=True)
class RoutingAction:
    model_id: str
    strategy: Strategy
    predicted_accuracy: float
    predicted_energy: float
    predicted_carbon: float
    accuracy_source: str = "exact_table"
    extrapolated: bool = False

    def __post_init__(self):
        if not 0.0 <= self.predicted_accuracy <= 1.0:
            raise ValidationError("predicted_accuracy must be in [0,1]")
        if self.predicted_energy < 0:
            raise ValidationError("predicted_energy must be >= 0")

    @property
    def action_id(self) -> str:
        return f"{self.model_id}:{self.strategy}"


@dataclass(frozen=True)
class RejectedAction:
    action_id: str
    cause: str
    action: RoutingAction | None = None


@dataclass(frozen=True)
class RoutingPolicy:
    """Declared candidate space, objective, and tie-break configuration."""

    objective: str = "max_accuracy"
    candidate_models: tuple[str, ...] = ()
    candidate_strategies: tuple[str, ...] = ("zero_shot",)
    mv_k: int = DEFAULT_MV_K
    lambda_weight: float = 1.0
    hardware_id: str = ""
    expected_output_tokens: int = 1
    cot_max_steps: int = DEFAULT_COT_STEPS
    mv_uncertainty_width: float = DEFAULT_MV_UNCERTAINTY_WIDTH
    model_size_rank: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "candidate_models", tuple(self.candidate_models))
        object.__setattr__(self, "candidate_strategies", tuple(self.candidate_strategies))
        object.__setattr__(self, "model_size_rank", tuple(self.model_size_rank))
        if self.objective not in OBJECTIVES:
            raise ValidationError(f"objective must be one of {OBJECTIVES}")
        if not self.candidate_models:
            raise ValidationError("candidate_models must be nonempty")
        if not self.candidate_strategies:
            raise ValidationError("candidate_strategies must be nonempty")
        for kind in self.candidate_strategies:
            if kind not in STRATEGY_KINDS:
                raise ValidationError(
                    f"candidate strategy {kind!r} not in {STRATEGY_KINDS}"
                )
        if self.mv_k < 1:
            raise ValidationError("mv_k must be >= 1")
        if self.lambda_weight <= 0:
            raise ValidationError("lambda_weight must be > 0")
        if self.expected_output_tokens < 0:
            raise ValidationError("expected_output_tokens must be >= 0")

    def size_rank(self, model_id: str) -> int:
        try:
            return self.model_size_rank.index(model_id)
        except ValueError:
            return len(self.model_size_rank)


@dataclass(frozen=True)
class RoutingDecision:
    chosen: RoutingAction
    feasible_set_size: int
    rejected: tuple[RejectedAction, ...]
    rationale: str
    feasible: tuple[RoutingAction, ...] = ()


def load_policy(path: str | Path) -> RoutingPolicy:
    doc = json.loads(Path(path).read_text())
    return RoutingPolicy(
        objective=doc.get("objective", "max_accuracy"),
        candidate_models=tuple(doc["candidate_models"]),
        candidate_strategies=tuple(doc.get("candidate_strategies", ["zero_shot"])),
        mv_k=doc.get("mv_k", DEFAULT_MV_K),
        lambda_weight=doc.get("lambda_weight", 1.0),
        hardware_id=doc.get("hardware_id", ""),
        expected_output_tokens=doc.get("expected_output_tokens", 1),
        cot_max_steps=doc.get("cot_max_steps", DEFAULT_COT_STEPS),
        mv_uncertainty_width=doc.get("mv_uncertainty_width", DEFAULT_MV_UNCERTAINTY_WIDTH),
        model_size_rank=tuple(doc.get("model_size_rank", [])),
    )


def save_policy(policy: RoutingPolicy, path: str | Path) -> None:
    doc = {
        "objective": policy.objective,
        "candidate_models": list(policy.candidate_models),
        "candidate_strategies": list(policy.candidate_strategies),
        "mv_k": policy.mv_k,
        "lambda_weight": policy.lambda_weight,
        "hardware_id": policy.hardware_id,
        "expected_output_tokens": policy.expected_output_tokens,
        "cot_max_steps": policy.cot_max_steps,
        "mv_uncertainty_width": policy.mv_uncertainty_width,
        "model_size_rank": list(policy.model_size_rank),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------

def _mv_wanted(q, model_id, policy, store) -> bool:
    """MV runs in cases of uncertainty: wide (or unavailable) zero-shot interval."""
    try:
        zs = estimate_accuracy(q, model_id, Strategy.zero_shot(), store)
    except EstimationError:
        return True
    if zs.interval is None:
        return True
    return (zs.interval[1] - zs.interval[0]) > policy.mv_uncertainty_width


def _cot_accuracy(q, model_id, strategy, store, schedule):
    """Schedule is authoritative for accuracy-vs-budget; table otherwise."""
    if schedule is not None:
        acc_map = schedule.accuracy_map(q.category)
        source = (
            "schedule" if q.category in schedule.accuracy_by_budget else "schedule_macro_average"
        )
        return acc_map[strategy.tokens], source
    est = estimate_accuracy(q, model_id, strategy, store)
    return est.mean, est.source


def enumerate_actions(
    q: QueryDescriptor,
    policy: RoutingPolicy,
    store: ProfileStore,
    schedule: BudgetSchedule | None = None,
) -> tuple[list[RoutingAction], list[RejectedAction]]:
    """Cartesian candidate space with estimator-filled predictions.

    Deterministic order: models in declared order, strategies in declared
    order, cot budgets ascending. Actions whose estimates fail are skipped
    and reported with their cause.
    """
    actions: list[RoutingAction] = []
    skipped: list[RejectedAction] = []

    for model_id in policy.candidate_models:
        for kind in policy.candidate_strategies:
            if kind == "zero_shot":
                strategies = [(Strategy.zero_shot(), policy.expected_output_tokens)]
            elif kind == "mv":
                if not _mv_wanted(q, model_id, policy, store):
                    continue
                strategies = [
                    (Strategy.majority_vote(policy.mv_k), policy.expected_output_tokens)
                ]
            else:
                budgets = (
                    [b for b in schedule.grid if b > 0]
                    if schedule is not None
                    else [b for b in BudgetSchedule().grid if b > 0]
                )
                strategies = [
                    (Strategy.cot(policy.cot_max_steps, b), None) for b in budgets
                ]
            for strategy, out_tokens in strategies:
                action_id = f"{model_id}:{strategy}"
                try:
                    if strategy.kind == "cot":
                        acc, source = _cot_accuracy(q, model_id, strategy, store, schedule)
                    else:
                        est = estimate_accuracy(q, model_id, strategy, store)
                        acc, source = est.mean, est.source
                    energy = estimate_energy(q, model_id, strategy, out_tokens, store, policy.hardware_id)
                except (EstimationError, ValidationError) as exc:
                    skipped.append(RejectedAction(action_id, f"estimator error: {exc}"))
                    continue
                actions.append(
                    RoutingAction(
                        model_id=model_id,
                        strategy=strategy,
                        predicted_accuracy=acc,
                        predicted_energy=energy.total_energy,
                        predicted_carbon=energy.carbon,
                        accuracy_source=source,
                        extrapolated=energy.extrapolated,
                    )
                )
    return actions, skipped


# ---------------------------------------------------------------------------
# constraint filtering and selection
# ---------------------------------------------------------------------------

def _violations(action: RoutingAction, q: QueryDescriptor) -> list[tuple[str, float, str]]:
    """(constraint name, relative excess, human-readable detail) per violation."""
    out = []
    c = q.constraints
    if c.accuracy_floor is not None and action.predicted_accuracy < c.accuracy_floor:
        gap = c.accuracy_floor - action.predicted_accuracy
        out.append(
            (
                "accuracy_floor",
                gap / max(c.accuracy_floor, 1e-12),
                f"accuracy_floor violated: {action.predicted_accuracy:.6g} < {c.accuracy_floor:.6g}",
            )
        )
    if c.energy_budget is not None and action.predicted_energy > c.energy_budget:
        excess = action.predicted_energy - c.energy_budget
        out.append(
            (
                "energy_budget",
                excess / max(c.energy_budget, 1e-12),
                f"energy_budget violated: {action.predicted_energy:.6g} J > {c.energy_budget:.6g} J",
            )
        )
    return out


def _selection_key(action: RoutingAction, policy: RoutingPolicy, energy_scale: float):
    if policy.objective == "max_accuracy":
        primary = -action.predicted_accuracy
    elif policy.objective == "min_energy":
        primary = action.predicted_energy
    else:
        score = action.predicted_accuracy - policy.lambda_weight * (
            action.predicted_energy / energy_scale
        )
        primary = -score
    return (
        primary,
        action.predicted_energy,
        policy.size_rank(action.model_id),
        action.action_id,
    )


def route(
    q: QueryDescriptor,
    policy: RoutingPolicy,
    store: ProfileStore,
    schedule: BudgetSchedule | None = None,
) -> RoutingDecision:
    """Pick the optimal feasible action; raises NoFeasibleActionError otherwise."""
    actions, skipped = enumerate_actions(q, policy, store, schedule)

    feasible: list[RoutingAction] = []
    rejected: list[RejectedAction] = list(skipped)
    tightest: dict[str, str] = {}
    for action in actions:
        violations = _violations(action, q)
        if violations:
            worst = max(violations, key=lambda v: v[1])
            tightest[action.action_id] = worst[2]
            rejected.append(RejectedAction(action.action_id, worst[2], action))
        else:
            feasible.append(action)

    if not feasible:
        for skip in skipped:
            tightest.setdefault(skip.action_id, skip.cause)
        raise NoFeasibleActionError(tightest)

    energy_scale = max(a.predicted_energy for a in feasible)
    if energy_scale <= 0:
        energy_scale = 1.0
    ranked = sorted(feasible, key=lambda a: _selection_key(a, policy, energy_scale))
    chosen = ranked[0]

    if len(ranked) == 1:
        rationale = "only_candidate"
    else:
        k0 = _selection_key(ranked[0], policy, energy_scale)
        k1 = _selection_key(ranked[1], policy, energy_scale)
        if k0[0] != k1[0]:
            rationale = "objective"
        elif k0[1] != k1[1]:
            rationale = "tie_lower_energy"
        elif k0[2] != k1[2]:
            rationale = "tie_size_rank"
        else:
            rationale = "tie_action_id"

    return RoutingDecision(
        chosen=chosen,
        feasible_set_size=len(feasible),
        rejected=tuple(rejected),
        rationale=rationale,
        feasible=tuple(feasible),
    )


def explain(decision: RoutingDecision) -> str:
    """Stable human-readable report of a decision (for logs and golden files)."""
    lines = [
        f"chosen: {decision.chosen.action_id}",
        f"  accuracy={decision.chosen.predicted_accuracy:.6g}"
        f" energy={decision.chosen.predicted_energy:.6g}J"
        f" carbon={decision.chosen.predicted_carbon:.6g}g",
        f"rationale: {decision.rationale}",
        f"feasible actions: {decision.feasible_set_size}",
    ]
    for action in decision.feasible:
        lines.append(
            f"  candidate {action.action_id}: accuracy={action.predicted_accuracy:.6g}"
            f" energy={action.predicted_energy:.6g}J ok"
        )
    if decision.rejected:
        lines.append(f"rejected actions: {len(decision.rejected)}")
        for rej in decision.rejected:
            if rej.action is not None:
                lines.append(
                    f"  candidate {rej.action_id}: accuracy={rej.action.predicted_accuracy:.6g}"
                    f" energy={rej.action.predicted_energy:.6g}J {rej.cause}"
                )
            else:
                lines.append(f"  candidate {rej.action_id}: {rej.cause}")
    return "\n".join(lines) + "\n"
