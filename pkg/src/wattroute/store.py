"""Profile store: measurement samples, fitted operating curves, benchmark tables.

Single source of truth for the estimators, router, and simulator. A store is
built (ingest, fit) and then treated as an immutable snapshot; the service
layer swaps whole snapshots atomically rather than mutating a live one.

Energy is joules everywhere inside the store. Benchmark CSVs declare
kilojoules in their column name and are converted on ingest.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import SchemaError, StoreError, ValidationError

STORE_VERSION = 1

PHASES = ("input", "generation")
FAMILIES = ("affine", "quadratic", "powerlaw")
FAMILY_PARAM_COUNT = {"affine": 2, "quadratic": 3, "powerlaw": 3}

# relative tolerance for the energy == avg_power * duration consistency check
ENERGY_CONSISTENCY_RTOL = 1e-9

MEASUREMENT_COLUMNS = [
    "model_id",
    "hardware_id",
    "phase",
    "input_tokens",
    "generated_tokens",
    "avg_power_w",
    "duration_s",
    "energy_j",
    "gpu_util",
    "batch_size",
]

BENCHMARK_COLUMNS = ["category", "model_id", "strategy", "accuracy", "energy_kj", "n_questions"]


# ---------------------------------------------------------------------------
# Strategy
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Strategy:
    """Closed test-time strategy set: zero_shot | mv:<k> | cot:<steps>:<tokens>."""

    kind: str
    k: int = 0
    steps: int = 0
    tokens: int = 0

    @staticmethod
    def zero_shot() -> "Strategy":
        return Strategy("zero_shot")

    @staticmethod
    def majority_vote(k: int) -> "Strategy":
        if k < 1:
            raise ValidationError(f"majority_vote k must be >= 1, got {k}")
        return Strategy("majority_vote", k=k)

    @staticmethod
    def cot(steps: int, tokens: int) -> "Strategy":
        if steps < 1:
            raise ValidationError(f"cot steps must be >= 1, got {steps}")
        if tokens < 0:
            raise ValidationError(f"cot token budget must be >= 0, got {tokens}")
        return Strategy("cot", steps=steps, tokens=tokens)

    @staticmethod
    def parse(text: str) -> "Strategy":
        text = text.strip()
        if text == "zero_shot":
            return Strategy.zero_shot()
        parts = text.split(":")
        try:
            if parts[0] == "mv" and len(parts) == 2:
                return Strategy.majority_vote(int(parts[1]))
            if parts[0] == "cot" and len(parts) == 3:
                return Strategy.cot(int(parts[1]), int(parts[2]))
        except ValueError:
            pass
        raise ValidationError(
            f"unknown strategy {text!r} (expected zero_shot, mv:<k>, or cot:<steps>:<tokens>)"
        )

    def __str__(self) -> str:
        if self.kind == "zero_shot":
            return "zero_shot"
        if self.kind == "majority_vote":
            return f"mv:{self.k}"
        return f"cot:{self.steps}:{self.tokens}"


# ---------------------------------------------------------------------------
# EnergyMeasurement
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyMeasurement:
    """One timed inference run: power, duration, token counts.

    Energy-per-token is (avg_power * duration) / (input + generated tokens).
    Either `energy` or the (avg_power, duration) pair may be omitted at
    construction; the energy side is derived when absent. When everything is
    supplied, energy must agree with avg_power * duration to 1e-9 relative.
    """

    model_id: str
    hardware_id: str
    phase: str
    input_tokens: int
    generated_tokens: int
    avg_power: float | None = None  # watts
    duration: float | None = None  # seconds
    energy: float | None = None  # joules
    gpu_utilization: float | None = None
    batch_size: int = 1

    def __post_init__(self):
        if not self.model_id or not self.hardware_id:
            raise ValidationError("model_id and hardware_id must be nonempty")
        if self.phase not in PHASES:
            raise ValidationError(f"phase must be one of {PHASES}, got {self.phase!r}")
        if self.input_tokens < 1:
            raise ValidationError(f"input_tokens must be >= 1, got {self.input_tokens}")
        if self.generated_tokens < 0:
            raise ValidationError(f"generated_tokens must be >= 0, got {self.generated_tokens}")
        if self.phase == "input" and self.generated_tokens != 1:
            raise ValidationError(
                f"input-phase runs generate exactly one token, got {self.generated_tokens}"
            )
        if self.batch_size != 1:
            raise ValidationError(f"batch_size must be 1, got {self.batch_size}")
        if self.gpu_utilization is not None and not 0.0 <= self.gpu_utilization <= 1.0:
            raise ValidationError(f"gpu_utilization must be in [0,1], got {self.gpu_utilization}")

        has_pair = self.avg_power is not None and self.duration is not None
        if (self.avg_power is None) != (self.duration is None):
            raise ValidationError("avg_power and duration must be supplied together")
        if has_pair:
            if self.avg_power <= 0:
                raise ValidationError(f"avg_power must be > 0, got {self.avg_power}")
            if self.duration <= 0:
                raise ValidationError(f"duration must be > 0, got {self.duration}")
        if self.energy is None:
            if not has_pair:
                raise ValidationError("need energy or the (avg_power, duration) pair")
            object.__setattr__(self, "energy", self.avg_power * self.duration)
        else:
            if self.energy < 0:
                raise ValidationError(f"energy must be >= 0, got {self.energy}")
            if has_pair:
                expected = self.avg_power * self.duration
                if abs(self.energy - expected) > ENERGY_CONSISTENCY_RTOL * max(
                    abs(self.energy), abs(expected)
                ):
                    raise ValidationError(
                        f"energy {self.energy} J inconsistent with avg_power*duration "
                        f"{expected} J (beyond {ENERGY_CONSISTENCY_RTOL:g} relative)"
                    )

    @property
    def total_tokens(self) -> int:
        return self.input_tokens + self.generated_tokens


def energy_per_token(m: EnergyMeasurement) -> float:
    """Joules per processed token for one run.

    Uses avg_power * duration when the pair is present (the defining form),
    falling back to the stored energy for energy-only rows.
    """
    total = m.total_tokens
    if total < 1:
        raise ValidationError("total token count must be >= 1")
    if m.avg_power is not None and m.duration is not None:
        return (m.avg_power * m.duration) / total
    return m.energy / total


# ---------------------------------------------------------------------------
# OperatingCurve
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OperatingCurve:
    """Fitted parametric energy(tokens) function for one (model, hardware, phase).

    params by family: affine [a, b] for a + b*n; quadratic [a, b, c] for
    a + b*n + c*n^2; powerlaw [a, b, c] for a*n^b + c.

    ref_input_tokens: for generation-phase curves, the fixed input length the
    underlying runs used; the estimator subtracts the input curve at this
    length to avoid double-counting the prompt cost.
    """

    model_id: str
    hardware_id: str
    phase: str
    family: str
    params: tuple[float, ...]
    fit_domain: tuple[int, int]
    residual_rms: float
    n_samples: int
    ref_input_tokens: int | None = None
    imported: bool = False

    def __post_init__(self):
        if self.phase not in PHASES:
            raise ValidationError(f"phase must be one of {PHASES}, got {self.phase!r}")
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown curve family {self.family!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(self.params) != FAMILY_PARAM_COUNT[self.family]:
            raise ValidationError(
                f"{self.family} takes {FAMILY_PARAM_COUNT[self.family]} params, "
                f"got {len(self.params)}"
            )
        lo, hi = self.fit_domain
        object.__setattr__(self, "fit_domain", (int(lo), int(hi)))
        if lo < 0 or hi < lo:
            raise ValidationError(f"bad fit_domain {self.fit_domain}")
        if self.residual_rms < 0:
            raise ValidationError("residual_rms must be >= 0")
        if self.n_samples < 1:
            raise ValidationError("n_samples must be >= 1")
        if self.family == "powerlaw":
            a, b, c = self.params
            if not (a > 0 and b > 0 and c >= 0):
                raise ValidationError(
                    f"powerlaw needs a > 0, b > 0, c >= 0, got {self.params}"
                )
            if lo < 1:
                raise ValidationError("powerlaw fit_domain must start at >= 1")
        self._check_shape()

    def _check_shape(self):
        """Non-negativity and monotonicity over the fit domain (exact endpoint logic)."""
        lo, hi = self.fit_domain
        if self.family == "affine":
            a, b = self.params
            if b < 0:
                raise ValidationError(f"affine slope must be >= 0 for monotonicity, got {b}")
            if a + b * lo < 0:
                raise ValidationError("affine curve negative at domain start")
        elif self.family == "quadratic":
            a, b, c = self.params
            # derivative b + 2cn is linear in n: endpoint checks are exhaustive
            if b + 2 * c * lo < 0 or b + 2 * c * hi < 0:
                raise ValidationError("quadratic derivative negative inside fit domain")
            if a + b * lo + c * lo * lo < 0:
                raise ValidationError("quadratic curve negative at domain start")
        # powerlaw with a > 0, b > 0, c >= 0 is nonnegative and nondecreasing

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.model_id, self.hardware_id, self.phase)


# ---------------------------------------------------------------------------
# BenchmarkRecord
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchmarkRecord:
    """One (category, model, strategy) row of an accuracy/energy benchmark table.

    total_energy is stored in joules (converted from the CSV's kJ column).
    """

    category: str
    model_id: str
    strategy: Strategy
    accuracy: float
    total_energy: float
    n_questions: int | None = None

    def __post_init__(self):
        if not self.category or not self.model_id:
            raise ValidationError("category and model_id must be nonempty")
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValidationError(f"accuracy must be in [0,1], got {self.accuracy}")
        if self.total_energy < 0:
            raise ValidationError(f"total_energy must be >= 0, got {self.total_energy}")
        if self.n_questions is not None and self.n_questions < 1:
            raise ValidationError(f"n_questions must be >= 1, got {self.n_questions}")

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.category, self.model_id, str(self.strategy))


# ---------------------------------------------------------------------------
# ProfileStore
# ---------------------------------------------------------------------------

@dataclass
class IngestReport:
    """Outcome of one CSV ingestion: accepted count plus per-row rejections."""

    ingested: int = 0
    rejected: list[tuple[int, str]] = field(default_factory=list)  # (line number, reason)

    def summary(self) -> str:
        lines = [f"ingested {self.ingested} rows, rejected {len(self.rejected)}"]
        for line_no, reason in self.rejected:
            lines.append(f"  line {line_no}: {reason}")
        return "\n".join(lines)


class ProfileStore:
    """Measurements, fitted curves keyed by (model, hardware, phase), benchmarks."""

    def __init__(self):
        self.measurements: list[EnergyMeasurement] = []
        self.curves: dict[tuple[str, str, str], OperatingCurve] = {}
        self.benchmarks: dict[tuple[str, str, str], BenchmarkRecord] = {}

    # -- mutation (build phase) ------------------------------------------

    def add_measurement(self, m: EnergyMeasurement) -> None:
        self.measurements.append(m)

    def has_measurement_for(self, model_id: str, hardware_id: str) -> bool:
        return any(
            m.model_id == model_id and m.hardware_id == hardware_id for m in self.measurements
        )

    def add_curve(self, curve: OperatingCurve) -> None:
        """Insert or replace; curves without backing measurements are flagged imported."""
        if not curve.imported and not self.has_measurement_for(curve.model_id, curve.hardware_id):
            curve = replace(curve, imported=True)
        self.curves[curve.key] = curve

    def add_benchmark(self, rec: BenchmarkRecord) -> None:
        if rec.key in self.benchmarks:
            raise ValidationError(
                f"duplicate benchmark key (category={rec.category}, model={rec.model_id}, "
                f"strategy={rec.strategy})"
            )
        self.benchmarks[rec.key] = rec

    # -- lookups -----------------------------------------------------------

    def curve(self, model_id: str, hardware_id: str, phase: str) -> OperatingCurve | None:
        return self.curves.get((model_id, hardware_id, phase))

    def benchmark(self, category: str, model_id: str, strategy: Strategy) -> BenchmarkRecord | None:
        return self.benchmarks.get((category, model_id, str(strategy)))

    def benchmarks_for(self, model_id: str, strategy: Strategy) -> list[BenchmarkRecord]:
        key = str(strategy)
        return [
            r
            for r in self.benchmarks.values()
            if r.model_id == model_id and str(r.strategy) == key
        ]

    def benchmark_categories(self) -> list[str]:
        return sorted({r.category for r in self.benchmarks.values()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProfileStore):
            return NotImplemented
        return (
            self.measurements == other.measurements
            and self.curves == other.curves
            and self.benchmarks == other.benchmarks
        )


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def _check_header(fieldnames, expected, path):
    got = list(fieldnames or [])
    missing = [c for c in expected if c not in got]
    extra = [c for c in got if c not in expected]
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing columns {missing}")
        if extra:
            parts.append(f"unexpected columns {extra}")
        raise SchemaError(f"{path}: {'; '.join(parts)} (expected exactly {expected})")


def _opt_float(cell: str | None) -> float | None:
    if cell is None or cell.strip() == "":
        return None
    return float(cell)


def ingest_measurements(store: ProfileStore, path: str | Path) -> IngestReport:
    """Append valid measurement rows from a CSV; report rejects by line number.

    A missing or unexpected column rejects the whole file (SchemaError);
    per-row validation failures reject only that row, so the resulting store
    equals one built from the file's valid rows in order.
    """
    path = Path(path)
    report = IngestReport()
    staged: list[EnergyMeasurement] = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, MEASUREMENT_COLUMNS, path)
        for row in reader:
            try:
                m = EnergyMeasurement(
                    model_id=(row["model_id"] or "").strip(),
                    hardware_id=(row["hardware_id"] or "").strip(),
                    phase=(row["phase"] or "").strip(),
                    input_tokens=int(row["input_tokens"]),
                    generated_tokens=int(row["generated_tokens"]),
                    avg_power=_opt_float(row["avg_power_w"]),
                    duration=_opt_float(row["duration_s"]),
                    energy=_opt_float(row["energy_j"]),
                    gpu_utilization=_opt_float(row["gpu_util"]),
                    batch_size=int(row["batch_size"]),
                )
            except (ValidationError, ValueError) as exc:
                report.rejected.append((reader.line_num, str(exc)))
                continue
            staged.append(m)
    for m in staged:
        store.add_measurement(m)
    report.ingested = len(staged)
    return report


def ingest_benchmark_table(store: ProfileStore, path: str | Path) -> IngestReport:
    """Append benchmark rows from a CSV (energy_kj converted to joules)."""
    path = Path(path)
    report = IngestReport()
    staged: list[BenchmarkRecord] = []
    staged_keys: set[tuple[str, str, str]] = set()
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, BENCHMARK_COLUMNS, path)
        for row in reader:
            try:
                n_q = row["n_questions"]
                rec = BenchmarkRecord(
                    category=(row["category"] or "").strip(),
                    model_id=(row["model_id"] or "").strip(),
                    strategy=Strategy.parse(row["strategy"]),
                    accuracy=float(row["accuracy"]),
                    total_energy=float(row["energy_kj"]) * 1000.0,
                    n_questions=int(n_q) if n_q is not None and n_q.strip() != "" else None,
                )
                if rec.key in store.benchmarks or rec.key in staged_keys:
                    raise ValidationError(
                        f"duplicate benchmark key (category={rec.category}, "
                        f"model={rec.model_id}, strategy={rec.strategy})"
                    )
            except (ValidationError, ValueError) as exc:
                report.rejected.append((reader.line_num, str(exc)))
                continue
            staged.append(rec)
            staged_keys.add(rec.key)
    for rec in staged:
        store.add_benchmark(rec)
    report.ingested = len(staged)
    return report


# ---------------------------------------------------------------------------
# JSON persistence
# ---------------------------------------------------------------------------

def _measurement_to_doc(m: EnergyMeasurement) -> dict:
    return {
        "model_id": m.model_id,
        "hardware_id": m.hardware_id,
        "phase": m.phase,
        "input_tokens": m.input_tokens,
        "generated_tokens": m.generated_tokens,
        "avg_power_w": m.avg_power,
        "duration_s": m.duration,
        "energy_j": m.energy,
        "gpu_util": m.gpu_utilization,
        "batch_size": m.batch_size,
    }


def _curve_to_doc(c: OperatingCurve) -> dict:
    return {
        "model_id": c.model_id,
        "hardware_id": c.hardware_id,
        "phase": c.phase,
        "family": c.family,
        "params": list(c.params),
        "fit_domain": list(c.fit_domain),
        "residual_rms": c.residual_rms,
        "n_samples": c.n_samples,
        "ref_input_tokens": c.ref_input_tokens,
        "imported": c.imported,
    }


def _benchmark_to_doc(r: BenchmarkRecord) -> dict:
    return {
        "category": r.category,
        "model_id": r.model_id,
        "strategy": str(r.strategy),
        "accuracy": r.accuracy,
        "total_energy_j": r.total_energy,
        "n_questions": r.n_questions,
    }


def store_to_document(store: ProfileStore) -> dict:
    return {
        "version": STORE_VERSION,
        "measurements": [_measurement_to_doc(m) for m in store.measurements],
        "curves": [_curve_to_doc(c) for _, c in sorted(store.curves.items())],
        "benchmarks": [_benchmark_to_doc(r) for _, r in sorted(store.benchmarks.items())],
    }


def store_to_json(store: ProfileStore) -> str:
    return json.dumps(store_to_document(store), sort_keys=True, indent=2)


def save_store(store: ProfileStore, path: str | Path) -> None:
    """Write atomically: temp file in the same directory, then rename."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(store_to_json(store) + "\n")
    tmp.replace(path)


def load_store(path: str | Path) -> ProfileStore:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise StoreError(f"{path}: not valid JSON ({exc})") from exc
    return store_from_document(doc, source=str(path))


def store_from_document(doc: dict, source: str = "<document>") -> ProfileStore:
    if not isinstance(doc, dict):
        raise StoreError(f"{source}: store document must be a JSON object")
    version = doc.get("version")
    if version != STORE_VERSION:
        raise StoreError(
            f"{source}: store version mismatch (file has {version!r}, "
            f"this build reads {STORE_VERSION!r})"
        )
    store = ProfileStore()
    try:
        for m in doc.get("measurements", []):
            store.add_measurement(
                EnergyMeasurement(
                    model_id=m["model_id"],
                    hardware_id=m["hardware_id"],
                    phase=m["phase"],
                    input_tokens=m["input_tokens"],
                    generated_tokens=m["generated_tokens"],
                    avg_power=m["avg_power_w"],
                    duration=m["duration_s"],
                    energy=m["energy_j"],
                    gpu_utilization=m["gpu_util"],
                    batch_size=m["batch_size"],
                )
            )
        for c in doc.get("curves", []):
            family = c.get("family")
            if family not in FAMILIES:
                raise StoreError(f"{source}: unknown curve family {family!r}")
            curve = OperatingCurve(
                model_id=c["model_id"],
                hardware_id=c["hardware_id"],
                phase=c["phase"],
                family=family,
                params=tuple(c["params"]),
                fit_domain=tuple(c["fit_domain"]),
                residual_rms=c["residual_rms"],
                n_samples=c["n_samples"],
                ref_input_tokens=c["ref_input_tokens"],
                imported=c["imported"],
            )
            if not curve.imported and not store.has_measurement_for(
                curve.model_id, curve.hardware_id
            ):
                raise StoreError(
                    f"{source}: curve {curve.key} has no backing measurements "
                    "and is not flagged imported"
                )
            store.curves[curve.key] = curve
        for r in doc.get("benchmarks", []):
            store.add_benchmark(
                BenchmarkRecord(
                    category=r["category"],
                    model_id=r["model_id"],
                    strategy=Strategy.parse(r["strategy"]),
                    accuracy=r["accuracy"],
                    total_energy=r["total_energy_j"],
                    n_questions=r["n_questions"],
                )
            )
    except StoreError:
        raise
    except (KeyError, TypeError, ValidationError) as exc:
        raise StoreError(f"{source}: malformed store document ({exc})") from exc
    return store


def store_fingerprint(store: ProfileStore) -> str:
    """Stable content hash of the canonical store document."""
    import hashlib

    return hashlib.sha256(store_to_json(store).encode()).hexdigest()
