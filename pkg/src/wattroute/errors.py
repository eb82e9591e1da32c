"""Exception types shared across the package."""


class WattrouteError(Exception):
    """Base class for all library errors."""


class ValidationError(WattrouteError):
    """A domain value violates its declared invariants."""


class SchemaError(WattrouteError):
    """An input file does not match its declared schema; the file is rejected whole."""


class StoreError(WattrouteError):
    """Profile store persistence failure (version mismatch, malformed document)."""


class FitError(WattrouteError):
    """Curve fitting cannot produce a valid operating curve."""


class EstimationError(WattrouteError):
    """An estimator lacks the curves or benchmark rows it needs."""


class NoFeasibleActionError(WattrouteError):
    """Every candidate action violates at least one constraint.

    `violations` maps action id -> the tightest violated constraint description.
    """

    def __init__(self, violations: dict[str, str]):
        self.violations = dict(violations)
        lines = ", ".join(f"{aid}: {why}" for aid, why in sorted(violations.items()))
        super().__init__(f"no feasible action ({lines})")


class SimulationError(WattrouteError):
    """A workload replay aborted (unroutable query, bad spec)."""
