"""Seeded workload replay through routing policies, with savings accounting.

Every policy sees the same synthesized query stream and the same per-query
randomness (common random numbers), so differences in the report come only
from the actions each policy picks. Correctness is a Bernoulli draw against
the executed action's predicted accuracy.

Randomness follows the SplitMix64 substream contract documented in
`wattroute.kernels`: query i owns substream_seed(seed, i) and consumes three
unit doubles, in order: category pick, input-length pick, correctness pick.
Categories are consumed in the order they appear in the workload spec's
category_mix; input length is min + floor(u * (max - min + 1)).

Totals are exactly-rounded sums (math.fsum), so per-query evaluation order
cannot change a reported float; correctness counts are plain integers.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from . import kernels
from .errors import (
    EstimationError,
    NoFeasibleActionError,
    SimulationError,
    ValidationError,
)
from .estimators import (
    Constraints,
    Environment,
    QueryDescriptor,
    estimate_accuracy,
    estimate_energy,
)
from .router import RoutingPolicy, route
from .store import ProfileStore, Strategy
from .strategies import BudgetSchedule

MIX_TOLERANCE = 1e-12


@dataclass(frozen=True)
class WorkloadSpec:
    """Seeded synthetic query stream definition."""

    n_queries: int
    category_mix: dict[str, float]  # order is part of the replay contract
    input_tokens_min: int
    input_tokens_max: int
    seed: int
    constraint_template: Constraints = field(default_factory=Constraints)
    environment: Environment = field(default_factory=Environment)

    def __post_init__(self):
        if self.n_queries < 0:
            raise ValidationError("n_queries must be >= 0")
        if not self.category_mix:
            raise ValidationError("category_mix must be nonempty")
        total = math.fsum(self.category_mix.values())
        if abs(total - 1.0) > MIX_TOLERANCE:
            raise ValidationError(f"category probabilities must sum to 1, got {total!r}")
        if any(p < 0 for p in self.category_mix.values()):
            raise ValidationError("category probabilities must be >= 0")
        if not 1 <= self.input_tokens_min <= self.input_tokens_max:
            raise ValidationError(
                f"need 1 <= min <= max input tokens, got "
                f"[{self.input_tokens_min}, {self.input_tokens_max}]"
            )
        if not 0 <= self.seed <= 0xFFFFFFFFFFFFFFFF:
            raise ValidationError("seed must fit in 64 bits")


@dataclass(frozen=True)
class FixedAction:
    """A degenerate policy: always execute this (model, strategy).

    hardware_id may be left empty when run_simulation receives one, or when a
    router policy in the same run supplies it.
    """

    model_id: str
    strategy: Strategy
    hardware_id: str = ""


@dataclass(frozen=True)
class PolicyOutcome:
    total_energy: float  # joules
    total_carbon: float  # gCO2
    mean_accuracy: float
    action_histogram: dict[str, int]


@dataclass(frozen=True)
class SimulationReport:
    n_queries: int
    seed: int
    per_policy: dict[str, PolicyOutcome]
    savings_vs_baseline: dict[str, dict[str, dict[str, float]]]


def load_workload(path: str | Path) -> WorkloadSpec:
    doc = json.loads(Path(path).read_text())
    constraints = doc.get("constraint_template", {})
    environment = doc.get("environment", {})
    return WorkloadSpec(
        n_queries=doc["n_queries"],
        category_mix=dict(doc["category_mix"]),
        input_tokens_min=doc["input_tokens"]["min"],
        input_tokens_max=doc["input_tokens"]["max"],
        seed=doc["seed"],
        constraint_template=Constraints(
            energy_budget=constraints.get("energy_budget"),
            latency_budget=constraints.get("latency_budget"),
            accuracy_floor=constraints.get("accuracy_floor"),
        ),
        environment=Environment(
            load_factor=environment.get("load_factor", 0.0),
            carbon_intensity=environment.get("carbon_intensity", 0.0),
        ),
    )


def synthesize_queries(spec: WorkloadSpec) -> tuple[list[str], list[int], list[float]]:
    """Replay the seeded stream: per-query (category, input_tokens, correctness draw)."""
    draws = kernels.query_draws(spec.seed, spec.n_queries)
    names = list(spec.category_mix.keys())
    cumulative = []
    acc = 0.0
    for name in names:
        acc += spec.category_mix[name]
        cumulative.append(acc)
    lo, hi = spec.input_tokens_min, spec.input_tokens_max
    span = hi - lo + 1

    categories: list[str] = []
    tokens: list[int] = []
    correctness: list[float] = []
    for i in range(spec.n_queries):
        u_cat, u_len, u_ok = draws[i, 0], draws[i, 1], draws[i, 2]
        idx = len(names) - 1
        for j, edge in enumerate(cumulative):
            if u_cat < edge:
                idx = j
                break
        categories.append(names[idx])
        tokens.append(min(lo + int(u_len * span), hi))
        correctness.append(float(u_ok))
    return categories, tokens, correctness


def _resolve_fixed(q, fixed: FixedAction, store, schedule, hardware_id):
    """Predicted (accuracy, energy, carbon) for a fixed action on this query."""
    strategy = fixed.strategy
    if strategy.kind == "cot":
        if schedule is not None:
            acc = schedule.accuracy_map(q.category)[strategy.tokens]
        else:
            acc = estimate_accuracy(q, fixed.model_id, strategy, store).mean
        out_tokens = None
    else:
        acc = estimate_accuracy(q, fixed.model_id, strategy, store).mean
        out_tokens = 1  # single-token benchmark answers
    energy = estimate_energy(q, fixed.model_id, strategy, out_tokens, store, hardware_id)
    return acc, energy.total_energy, energy.carbon


def run_simulation(
    spec: WorkloadSpec,
    policies: list[tuple[str, RoutingPolicy | FixedAction]],
    store: ProfileStore,
    schedule: BudgetSchedule | None = None,
    hardware_id: str = "",
) -> SimulationReport:
    """Replay the same seeded stream against every policy and tally outcomes.

    Routing decisions depend only on (category, input_tokens) once the
    constraint template and environment are fixed, so they are memoized per
    policy. Any unroutable query aborts the whole run, naming the query
    index and policy.
    """
    names = [name for name, _ in policies]
    if len(set(names)) != len(names):
        raise ValidationError(f"policy names must be unique, got {names}")
    fixed_hw = hardware_id or _policy_hw(policies)

    categories, tokens, correctness = synthesize_queries(spec)

    per_policy: dict[str, PolicyOutcome] = {}
    for name, policy in policies:
        cache: dict[tuple[str, int], tuple[str, float, float, float]] = {}
        energies: list[float] = []
        carbons: list[float] = []
        histogram: Counter[str] = Counter()
        correct = 0
        for i in range(spec.n_queries):
            key = (categories[i], tokens[i])
            resolved = cache.get(key)
            if resolved is None:
                q = QueryDescriptor(
                    category=categories[i],
                    input_tokens=tokens[i],
                    constraints=spec.constraint_template,
                    environment=spec.environment,
                )
                try:
                    if isinstance(policy, FixedAction):
                        acc, energy, carbon = _resolve_fixed(
                            q, policy, store, schedule, policy.hardware_id or fixed_hw
                        )
                        action_id = f"{policy.model_id}:{policy.strategy}"
                    else:
                        decision = route(q, policy, store, schedule)
                        chosen = decision.chosen
                        acc, energy, carbon = (
                            chosen.predicted_accuracy,
                            chosen.predicted_energy,
                            chosen.predicted_carbon,
                        )
                        action_id = chosen.action_id
                except (NoFeasibleActionError, EstimationError, ValidationError) as exc:
                    raise SimulationError(
                        f"policy {name!r}: query {i} ({key[0]}, {key[1]} tokens) "
                        f"unroutable: {exc}"
                    ) from exc
                resolved = (action_id, acc, energy, carbon)
                cache[key] = resolved
            action_id, acc, energy, carbon = resolved
            histogram[action_id] += 1
            energies.append(energy)
            carbons.append(carbon)
            if correctness[i] < acc:
                correct += 1
        per_policy[name] = PolicyOutcome(
            total_energy=math.fsum(energies),
            total_carbon=math.fsum(carbons),
            mean_accuracy=(correct / spec.n_queries) if spec.n_queries else 0.0,
            action_histogram=dict(sorted(histogram.items())),
        )

    savings: dict[str, dict[str, dict[str, float]]] = {}
    for p_name in names:
        savings[p_name] = {}
        for b_name in names:
            p, b = per_policy[p_name], per_policy[b_name]
            saving = 1.0 - p.total_energy / b.total_energy if b.total_energy > 0 else 0.0
            savings[p_name][b_name] = {
                "energy_saving_fraction": saving,
                "accuracy_delta": p.mean_accuracy - b.mean_accuracy,
            }
    return SimulationReport(
        n_queries=spec.n_queries,
        seed=spec.seed,
        per_policy=per_policy,
        savings_vs_baseline=savings,
    )


def _policy_hw(policies) -> str:
    """Fallback hardware for fixed actions: borrow any router policy's hardware."""
    for _, p in policies:
        if isinstance(p, RoutingPolicy):
            return p.hardware_id
    return ""


def compare_policies(report: SimulationReport, policy: str, baseline: str) -> str:
    """One-line savings summary of `policy` against `baseline`."""
    if policy not in report.per_policy or baseline not in report.per_policy:
        missing = [n for n in (policy, baseline) if n not in report.per_policy]
        raise ValidationError(f"unknown policy name(s) {missing} in report")
    entry = report.savings_vs_baseline[policy][baseline]
    return (
        f"{policy} vs {baseline}: energy saving "
        f"{entry['energy_saving_fraction'] * 100:.2f}%, accuracy delta "
        f"{entry['accuracy_delta']:+.4f}"
    )


# ---------------------------------------------------------------------------
# report serialization
# ---------------------------------------------------------------------------

def report_to_document(report: SimulationReport) -> dict:
    return {
        "n_queries": report.n_queries,
        "seed": report.seed,
        "per_policy": {
            name: {
                "total_energy_j": o.total_energy,
                "total_carbon_g": o.total_carbon,
                "mean_accuracy": o.mean_accuracy,
                "action_histogram": o.action_histogram,
            }
            for name, o in report.per_policy.items()
        },
        "savings_vs_baseline": report.savings_vs_baseline,
    }


def report_to_json(report: SimulationReport) -> str:
    return json.dumps(report_to_document(report), sort_keys=True, indent=2)


def report_to_csv(report: SimulationReport) -> str:
    """Flat per-policy table for plotting."""
    lines = ["policy,total_energy_j,total_carbon_g,mean_accuracy,n_queries"]
    for name in sorted(report.per_policy):
        o = report.per_policy[name]
        lines.append(
            f"{name},{o.total_energy!r},{o.total_carbon!r},{o.mean_accuracy!r},{report.n_queries}"
        )
    return "\n".join(lines) + "\n"
