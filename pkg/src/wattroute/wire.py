"""Canonical JSON documents for queries and routing decisions.

The CLI and the HTTP service share these encoders, which is what makes their
outputs byte-identical for the same query against the same store snapshot.
All documents serialize with sorted keys and two-space indentation.
"""

from __future__ import annotations

import json

from .errors import ValidationError
from .estimators import Constraints, Environment, QueryDescriptor
from .router import RoutingAction, RoutingDecision


def query_from_document(doc: dict) -> QueryDescriptor:
    if not isinstance(doc, dict):
        raise ValidationError("query document must be a JSON object")
    try:
        constraints = doc.get("constraints", {}) or {}
        environment = doc.get("environment", {}) or {}
        return QueryDescriptor(
            category=doc["category"],
            input_tokens=int(doc["input_tokens"]),
            constraints=Constraints(
                energy_budget=constraints.get("energy_budget"),
                latency_budget=constraints.get("latency_budget"),
                accuracy_floor=constraints.get("accuracy_floor"),
            ),
            environment=Environment(
                load_factor=environment.get("load_factor", 0.0),
                carbon_intensity=environment.get("carbon_intensity", 0.0),
            ),
        )
    except KeyError as exc:
        raise ValidationError(f"query document missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed query document: {exc}") from exc


def query_to_document(q: QueryDescriptor) -> dict:
    return {
        "category": q.category,
        "input_tokens": q.input_tokens,
        "constraints": {
            "energy_budget": q.constraints.energy_budget,
            "latency_budget": q.constraints.latency_budget,
            "accuracy_floor": q.constraints.accuracy_floor,
        },
        "environment": {
            "load_factor": q.environment.load_factor,
            "carbon_intensity": q.environment.carbon_intensity,
        },
    }


def _action_to_document(action: RoutingAction) -> dict:
    return {
        "action_id": action.action_id,
        "model_id": action.model_id,
        "strategy": str(action.strategy),
        "predicted_accuracy": action.predicted_accuracy,
        "predicted_energy_j": action.predicted_energy,
        "predicted_carbon_g": action.predicted_carbon,
        "accuracy_source": action.accuracy_source,
        "extrapolated": action.extrapolated,
    }


def decision_to_document(decision: RoutingDecision) -> dict:
    return {
        "chosen": _action_to_document(decision.chosen),
        "feasible_set_size": decision.feasible_set_size,
        "rationale": decision.rationale,
        "feasible": [_action_to_document(a) for a in decision.feasible],
        "rejected": [
            {"action_id": r.action_id, "cause": r.cause} for r in decision.rejected
        ],
    }


def decision_to_json(decision: RoutingDecision) -> str:
    return json.dumps(decision_to_document(decision), sort_keys=True, indent=2)


def violations_to_json(violations: dict[str, str]) -> str:
    doc = {
        "error": "no feasible action",
        "violations": [
            {"action_id": k, "cause": v} for k, v in sorted(violations.items())
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2)
