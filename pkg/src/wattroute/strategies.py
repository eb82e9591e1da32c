"""Test-time compute strategy mechanics.

Majority voting aggregates sampled answer labels; the budget controller walks
an ascending token-budget grid and stops where the marginal accuracy gained
per joule drops below a threshold, so chain-of-thought reasoning spends
tokens only while they still buy accuracy. The stopping threshold scales up
with server load and grid carbon intensity, which shortens reasoning when
energy is expensive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError
from .estimators import Environment, QueryDescriptor, estimate_energy
from .store import ProfileStore, Strategy

DEFAULT_ALPHABET = ("A", "B", "C", "D")
DEFAULT_BUDGET_GRID = (0, 64, 128, 256, 512)
MAX_BALLOT_SIZE = 16
MAX_BUDGET = 512
DEFAULT_COT_STEPS = 5

# grid carbon intensity (gCO2/kWh) at which the carbon term doubles the threshold
REFERENCE_CARBON_INTENSITY = 400.0


@dataclass(frozen=True)
class VoteBallot:
    """Sampled answer labels, in sampling order, over a finite alphabet."""

    answers: tuple[str, ...]
    alphabet: tuple[str, ...] = DEFAULT_ALPHABET

    def __post_init__(self):
        object.__setattr__(self, "answers", tuple(self.answers))
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        if not self.answers:
            raise ValidationError("ballot must be nonempty")
        if len(self.answers) > MAX_BALLOT_SIZE:
            raise ValidationError(f"ballot holds at most {MAX_BALLOT_SIZE} answers")
        bad = [a for a in self.answers if a not in self.alphabet]
        if bad:
            raise ValidationError(f"answers {bad} not in alphabet {self.alphabet}")


def majority_vote(ballot: VoteBallot) -> str:
    """Most common label; ties broken by earliest first occurrence in the ballot."""
    counts: dict[str, int] = {}
    first_seen: dict[str, int] = {}
    for i, label in enumerate(ballot.answers):
        counts[label] = counts.get(label, 0) + 1
        if label not in first_seen:
            first_seen[label] = i
    return min(counts, key=lambda lb: (-counts[lb], first_seen[lb]))


@dataclass(frozen=True)
class BudgetSchedule:
    """Accuracy-by-token-budget data driving the stopping rule.

    grid: ascending budgets, capped at 512 generated tokens; every category's
    accuracy map must cover the full grid and be non-decreasing in budget.
    """

    grid: tuple[int, ...] = DEFAULT_BUDGET_GRID
    accuracy_by_budget: dict[str, dict[int, float]] = field(default_factory=dict)
    marginal_threshold: float = 5e-5  # accuracy per joule

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(int(b) for b in self.grid))
        if not self.grid:
            raise ValidationError("budget grid must be nonempty")
        if list(self.grid) != sorted(set(self.grid)):
            raise ValidationError(f"budget grid must be strictly ascending, got {self.grid}")
        if self.grid[0] < 0:
            raise ValidationError("budgets must be >= 0")
        if self.grid[-1] > MAX_BUDGET:
            raise ValidationError(f"budgets are capped at {MAX_BUDGET}, got {self.grid[-1]}")
        if self.marginal_threshold <= 0:
            raise ValidationError("marginal_threshold must be > 0")
        fixed: dict[str, dict[int, float]] = {}
        for category, by_budget in self.accuracy_by_budget.items():
            by_budget = {int(b): float(a) for b, a in by_budget.items()}
            if set(by_budget) != set(self.grid):
                raise ValidationError(
                    f"category {category!r} accuracy map must cover the grid {self.grid}"
                )
            prev = None
            for b in self.grid:
                acc = by_budget[b]
                if not 0.0 <= acc <= 1.0:
                    raise ValidationError(f"accuracy {acc} out of [0,1] for {category!r}@{b}")
                if prev is not None and acc < prev:
                    raise ValidationError(
                        f"accuracy must be non-decreasing in budget for {category!r}"
                    )
                prev = acc
            fixed[category] = by_budget
        object.__setattr__(self, "accuracy_by_budget", fixed)

    def accuracy_map(self, category: str) -> dict[int, float]:
        """Category map, or the element-wise macro-average over known categories."""
        if category in self.accuracy_by_budget:
            return self.accuracy_by_budget[category]
        if not self.accuracy_by_budget:
            raise ValidationError("schedule has no category accuracy maps")
        maps = list(self.accuracy_by_budget.values())
        return {b: sum(m[b] for m in maps) / len(maps) for b in self.grid}


def load_schedule(path: str | Path) -> BudgetSchedule:
    doc = json.loads(Path(path).read_text())
    return BudgetSchedule(
        grid=tuple(doc["grid"]),
        accuracy_by_budget={k: {int(b): v for b, v in m.items()} for k, m in doc["accuracy_by_budget"].items()},
        marginal_threshold=doc["marginal_threshold"],
    )


def save_schedule(sched: BudgetSchedule, path: str | Path) -> None:
    doc = {
        "grid": list(sched.grid),
        "accuracy_by_budget": {
            k: {str(b): m[b] for b in sched.grid} for k, m in sorted(sched.accuracy_by_budget.items())
        },
        "marginal_threshold": sched.marginal_threshold,
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def adapt_threshold(
    base_threshold: float,
    env: Environment,
    reference_intensity: float = REFERENCE_CARBON_INTENSITY,
) -> float:
    """Scale the stopping threshold by load and carbon pressure.

    effective = base * (1 + load) * (1 + carbon / reference); a neutral
    environment leaves the base unchanged, and a higher threshold stops
    reasoning earlier.
    """
    return (
        base_threshold
        * (1.0 + env.load_factor)
        * (1.0 + env.carbon_intensity / reference_intensity)
    )


def choose_budget(
    q: QueryDescriptor,
    model_id: str,
    sched: BudgetSchedule,
    store: ProfileStore,
    hardware_id: str,
    reference_intensity: float = REFERENCE_CARBON_INTENSITY,
) -> tuple[int, float, float]:
    """Smallest grid budget where marginal accuracy-per-joule falls below threshold.

    Walks consecutive grid budgets; returns the first budget B whose step to
    the next budget gains less than the (environment-adapted) threshold, or
    the top of the grid when every step still pays. A zero-energy step never
    stops the walk. Returns (budget, accuracy at budget, energy at budget).
    """
    acc_map = sched.accuracy_map(q.category)
    threshold = adapt_threshold(sched.marginal_threshold, q.environment, reference_intensity)

    grid = sched.grid
    energy = {
        b: estimate_energy(
            q, model_id, Strategy.cot(DEFAULT_COT_STEPS, b), None, store, hardware_id
        ).total_energy
        for b in grid
    }
    chosen = grid[-1]
    for current, nxt in zip(grid, grid[1:]):
        gain = acc_map[nxt] - acc_map[current]
        cost = energy[nxt] - energy[current]
        if cost <= 0.0:
            # treat as infinite marginal gain: keep walking
            continue
        if gain / cost < threshold:
            chosen = current
            break
    return (chosen, acc_map[chosen], energy[chosen])
