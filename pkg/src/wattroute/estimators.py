"""Accuracy and energy estimators for (query, model, strategy, budget) actions.

Energy composes the two fitted operating curves: the input curve I evaluated
at the query's prompt length, minus I at the generation curve's reference
input length (whose cost is already inside G), plus the generation curve G at
the expected output length. Majority voting multiplies the whole thing by k
independent repetitions; chain-of-thought swaps the output length for its
token budget.

Accuracy comes from the benchmark table: the exact (category, model,
strategy) row when present, otherwise the unweighted macro-average of that
(model, strategy) across categories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .curvefit import eval_curve
from .errors import EstimationError, ValidationError
from .store import ProfileStore, Strategy

JOULES_PER_KWH = 3.6e6  # exact

# 95% two-sided normal quantile used by the Wilson interval
Z95 = 1.96


@dataclass(frozen=True)
class Constraints:
    energy_budget: float | None = None  # joules
    latency_budget: float | None = None  # seconds
    accuracy_floor: float | None = None

    def __post_init__(self):
        if self.energy_budget is not None and self.energy_budget < 0:
            raise ValidationError("energy_budget must be >= 0")
        if self.latency_budget is not None and self.latency_budget < 0:
            raise ValidationError("latency_budget must be >= 0")
        if self.accuracy_floor is not None and not 0.0 <= self.accuracy_floor <= 1.0:
            raise ValidationError("accuracy_floor must be in [0,1]")


@dataclass(frozen=True)
class Environment:
    load_factor: float = 0.0
    carbon_intensity: float = 0.0  # gCO2 per kWh

    def __post_init__(self):
        if not 0.0 <= self.load_factor <= 1.0:
            raise ValidationError(f"load_factor must be in [0,1], got {self.load_factor}")
        if self.carbon_intensity < 0:
            raise ValidationError(f"carbon_intensity must be >= 0, got {self.carbon_intensity}")


@dataclass(frozen=True)
class QueryDescriptor:
    category: str
    input_tokens: int
    constraints: Constraints = field(default_factory=Constraints)
    environment: Environment = field(default_factory=Environment)

    def __post_init__(self):
        if not self.category:
            raise ValidationError("category must be nonempty")
        if self.input_tokens < 1:
            raise ValidationError(f"input_tokens must be >= 1, got {self.input_tokens}")


@dataclass(frozen=True)
class EnergyEstimate:
    total_energy: float  # joules
    input_energy: float
    generation_energy: float
    repetitions: int
    carbon: float  # gCO2
    extrapolated: bool

    def __post_init__(self):
        if self.total_energy < 0 or self.input_energy < 0 or self.generation_energy < 0:
            raise ValidationError("energy components must be >= 0")


@dataclass(frozen=True)
class AccuracyEstimate:
    mean: float
    interval: tuple[float, float] | None
    source: str  # exact_table | fallback_macro_average

    def __post_init__(self):
        if not 0.0 <= self.mean <= 1.0:
            raise ValidationError("accuracy mean must be in [0,1]")
        if self.interval is not None:
            lo, hi = self.interval
            if not (0.0 <= lo <= self.mean <= hi <= 1.0):
                raise ValidationError(f"interval {self.interval} must bracket the mean in [0,1]")


def wilson_interval(p: float, n: int, z: float = Z95) -> tuple[float, float]:
    """95% Wilson score interval for a proportion p observed over n trials.

    The interval always contains p; rounding at the p = 0 / p = 1 boundaries
    is clamped so that stays true in float arithmetic.
    """
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    return (max(0.0, min(center - half, p)), min(1.0, max(center + half, p)))


def _curve_or_raise(store: ProfileStore, model_id: str, hardware_id: str, phase: str):
    curve = store.curve(model_id, hardware_id, phase)
    if curve is None:
        raise EstimationError(f"no {phase}-phase curve for ({model_id}, {hardware_id})")
    return curve


def estimate_energy(
    q: QueryDescriptor,
    model_id: str,
    strategy: Strategy,
    expected_output_tokens: int | None,
    store: ProfileStore,
    hardware_id: str,
) -> EnergyEstimate:
    """Predict energy and carbon for executing the strategy on this query.

    expected_output_tokens is required for zero_shot and majority_vote; for
    cot it defaults to the strategy's token budget (the pessimistic upper
    bound) and a caller-supplied tighter value wins.
    """
    input_curve = _curve_or_raise(store, model_id, hardware_id, "input")
    gen_curve = _curve_or_raise(store, model_id, hardware_id, "generation")

    if strategy.kind == "cot":
        out_tokens = expected_output_tokens if expected_output_tokens is not None else strategy.tokens
        repetitions = 1
    else:
        if expected_output_tokens is None:
            raise ValidationError(f"expected_output_tokens required for {strategy}")
        out_tokens = expected_output_tokens
        repetitions = strategy.k if strategy.kind == "majority_vote" else 1
    if out_tokens < 0:
        raise ValidationError(f"expected_output_tokens must be >= 0, got {out_tokens}")

    if gen_curve.ref_input_tokens is None:
        raise EstimationError(
            f"generation curve for ({model_id}, {hardware_id}) lacks ref_input_tokens; "
            "refit it from measurements or set the field on import"
        )
    at_query = eval_curve(input_curve, q.input_tokens)
    at_ref = eval_curve(input_curve, gen_curve.ref_input_tokens)
    at_out = eval_curve(gen_curve, out_tokens)

    # flooring keeps estimates non-negative even when extrapolation below the
    # fit domain dips a curve under zero
    input_once = max(at_query.value - at_ref.value, 0.0)
    gen_once = max(at_out.value, 0.0)
    input_energy = repetitions * input_once
    generation_energy = repetitions * gen_once
    total = input_energy + generation_energy
    carbon = total / JOULES_PER_KWH * q.environment.carbon_intensity
    return EnergyEstimate(
        total_energy=total,
        input_energy=input_energy,
        generation_energy=generation_energy,
        repetitions=repetitions,
        carbon=carbon,
        extrapolated=at_query.extrapolated or at_ref.extrapolated or at_out.extrapolated,
    )


def estimate_accuracy(
    q: QueryDescriptor, model_id: str, strategy: Strategy, store: ProfileStore
) -> AccuracyEstimate:
    """Benchmark-table accuracy: exact row, else per-(model,strategy) macro-average."""
    exact = store.benchmark(q.category, model_id, strategy)
    if exact is not None:
        interval = (
            wilson_interval(exact.accuracy, exact.n_questions)
            if exact.n_questions is not None
            else None
        )
        return AccuracyEstimate(mean=exact.accuracy, interval=interval, source="exact_table")
    rows = store.benchmarks_for(model_id, strategy)
    if not rows:
        raise EstimationError(f"no benchmark rows for ({model_id}, {strategy})")
    mean = sum(r.accuracy for r in rows) / len(rows)
    return AccuracyEstimate(mean=mean, interval=None, source="fallback_macro_average")


def strategy_overhead(
    category: str,
    model_id: str,
    strategy: Strategy,
    store: ProfileStore,
    baseline_model: str | None = None,
) -> tuple[float, float]:
    """Accuracy delta and energy factor of a strategy against a zero-shot baseline.

    The baseline defaults to the same model's zero-shot row; pass
    baseline_model to compare across models (e.g. a larger model's zero-shot
    against the small model's baseline).
    """
    baseline_model = baseline_model if baseline_model is not None else model_id
    base = store.benchmark(category, baseline_model, Strategy.zero_shot())
    if base is None:
        raise EstimationError(
            f"no zero_shot baseline row for ({category}, {baseline_model})"
        )
    row = store.benchmark(category, model_id, strategy)
    if row is None:
        raise EstimationError(f"no benchmark row for ({category}, {model_id}, {strategy})")
    if base.total_energy <= 0:
        raise EstimationError("baseline energy is zero; factor undefined")
    return (row.accuracy - base.accuracy, row.total_energy / base.total_energy)
