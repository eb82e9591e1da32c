"""Fit parametric energy(tokens) operating curves and select the best family.

Affine and quadratic fits are closed-form linear least squares. The powerlaw
a*n^b + c is solved by a damped Gauss-Newton iteration (Levenberg-Marquardt
style) with the analytic Jacobian, initialized at a = (E_max - E_min) /
(n_max - n_min), b = 1, c = min(E). Family selection uses the corrected AIC
for least squares; curves violating non-negativity or monotonicity on the fit
domain are dropped and selection retried on the remaining families.

All entry points are pure functions over immutable inputs and are
deterministic: the same request yields a bit-identical result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import FitError, ValidationError
from .store import FAMILIES, OperatingCurve

FAMILY_CODE = {"affine": kernels.AFFINE, "quadratic": kernels.QUADRATIC, "powerlaw": kernels.POWERLAW}
FAMILY_ORDER = {name: i for i, name in enumerate(FAMILIES)}

DEFAULT_MAX_ITERATIONS = 200
DEFAULT_TOLERANCE = 1e-9

# SSR below this (relative) floor counts as an exact fit; ties then go to the
# family with fewer params so rounding noise cannot flip the selection.
_EXACT_FIT_REL = 1e-12


@dataclass(frozen=True)
class FitRequest:
    """Samples and options for one curve fit.

    samples: (token count, energy joules) pairs; at least 4 distinct token
    counts, energies >= 0, tokens >= 1 whenever powerlaw is requested.
    """

    samples: tuple[tuple[int, float], ...]
    families: tuple[str, ...] = FAMILIES
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    tolerance: float = DEFAULT_TOLERANCE
    model_id: str = ""
    hardware_id: str = ""
    phase: str = "generation"
    ref_input_tokens: int | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "samples", tuple((int(n), float(e)) for n, e in self.samples)
        )
        object.__setattr__(self, "families", tuple(self.families))
        for fam in self.families:
            if fam not in FAMILIES:
                raise ValidationError(f"unknown family {fam!r}")
        if not self.families:
            raise ValidationError("at least one family must be requested")
        distinct = {n for n, _ in self.samples}
        if len(distinct) < 4:
            raise FitError(f"need >= 4 distinct token counts, got {len(distinct)}")
        if any(e < 0 for _, e in self.samples):
            raise ValidationError("energies must be >= 0")
        if "powerlaw" in self.families and any(n < 1 for n, _ in self.samples):
            raise ValidationError("token counts must be >= 1 to fit a powerlaw")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if self.tolerance <= 0:
            raise ValidationError("tolerance must be > 0")


@dataclass(frozen=True)
class FitResult:
    curve: OperatingCurve
    per_family_rms: dict[str, float]
    selection_score: dict[str, float]
    converged: bool = True
    warnings: tuple[str, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class CurveValue:
    value: float
    extrapolated: bool


def eval_curve(curve: OperatingCurve, tokens: int) -> CurveValue:
    """Curve value at a token count; flags extrapolation beyond the fit domain.

    tokens = 0 is allowed for every family (a powerlaw maps it to its
    intercept c); negative counts are rejected.
    """
    if tokens < 0:
        raise ValidationError(f"tokens must be >= 0, got {tokens}")
    value = float(
        kernels.eval_curve_array(
            FAMILY_CODE[curve.family], curve.params, np.array([float(tokens)])
        )[0]
    )
    lo, hi = curve.fit_domain
    return CurveValue(value=value, extrapolated=not (lo <= tokens <= hi))


def eval_curve_many(curve: OperatingCurve, tokens) -> np.ndarray:
    """Vectorized curve evaluation (no extrapolation flagging)."""
    return kernels.eval_curve_array(FAMILY_CODE[curve.family], curve.params, tokens)


# ---------------------------------------------------------------------------
# per-family least squares
# ---------------------------------------------------------------------------

def _fit_affine(n: np.ndarray, e: np.ndarray) -> tuple[float, ...]:
    design = np.column_stack([np.ones_like(n), n])
    coef, *_ = np.linalg.lstsq(design, e, rcond=None)
    return (float(coef[0]), float(coef[1]))


def _fit_quadratic(n: np.ndarray, e: np.ndarray) -> tuple[float, ...]:
    design = np.column_stack([np.ones_like(n), n, n * n])
    coef, *_ = np.linalg.lstsq(design, e, rcond=None)
    return (float(coef[0]), float(coef[1]), float(coef[2]))


def _fit_powerlaw(
    n: np.ndarray, e: np.ndarray, max_iterations: int, tolerance: float
) -> tuple[tuple[float, ...], bool]:
    """Damped Gauss-Newton on a*n^b + c. Returns (params, converged)."""
    e_min, e_max = float(e.min()), float(e.max())
    n_min, n_max = float(n.min()), float(n.max())
    a = (e_max - e_min) / (n_max - n_min)
    if a <= 0:
        # flat data: b is unidentifiable, caller skips powerlaw
        raise FitError("powerlaw is unidentifiable on flat data")
    b = 1.0
    c = max(e_min, 0.0)

    def ssr_of(pa, pb, pc):
        with np.errstate(over="ignore", invalid="ignore"):
            r, _ = kernels.powerlaw_resid_jac(pa, pb, pc, n, e)
            return float(r @ r)

    lam = 1e-3
    ssr = ssr_of(a, b, c)
    converged = False
    for _ in range(max_iterations):
        with np.errstate(over="ignore", invalid="ignore"):
            r, jac = kernels.powerlaw_resid_jac(a, b, c, n, e)
            jtj = jac.T @ jac
            g = jac.T @ r
        if not (np.all(np.isfinite(jtj)) and np.all(np.isfinite(g))):
            raise FitError("powerlaw fit diverged (non-finite normal equations)")
        stepped = False
        for _ in range(40):
            damped = jtj + lam * np.diag(np.diag(jtj))
            try:
                delta = np.linalg.solve(damped, -g)
            except (np.linalg.LinAlgError, ValueError):
                lam *= 10.0
                continue
            na = max(a + delta[0], 1e-12)
            nb = max(b + delta[1], 1e-9)
            nc = max(c + delta[2], 0.0)
            new_ssr = ssr_of(na, nb, nc)
            if math.isfinite(new_ssr) and new_ssr <= ssr:
                step_rel = math.sqrt(
                    (na - a) ** 2 + (nb - b) ** 2 + (nc - c) ** 2
                ) / max(1.0, math.sqrt(a * a + b * b + c * c))
                a, b, c, ssr = na, nb, nc, new_ssr
                lam = max(lam / 10.0, 1e-15)
                stepped = True
                if step_rel < tolerance:
                    converged = True
                break
            lam *= 10.0
        if converged or not stepped:
            # no acceptable step at any damping: stationary point reached
            converged = converged or not stepped
            break
    return (a, b, c), converged


def _fit_family(
    family: str, n: np.ndarray, e: np.ndarray, req: FitRequest
) -> tuple[tuple[float, ...], bool]:
    if family == "affine":
        return _fit_affine(n, e), True
    if family == "quadratic":
        return _fit_quadratic(n, e), True
    return _fit_powerlaw(n, e, req.max_iterations, req.tolerance)


def _aicc(ssr: float, n_samples: int, n_params: int, e_rms: float) -> float:
    """Corrected AIC for least squares with an exact-fit floor on SSR."""
    floor = n_samples * (_EXACT_FIT_REL * e_rms) ** 2
    j = max(ssr / n_samples, floor / n_samples, 1e-300)  # all-zero data: avoid log(0)
    p = n_params
    correction = 2.0 * p * (p + 1) / (n_samples - p - 1) if n_samples > p + 1 else math.inf
    return n_samples * math.log(j) + 2.0 * p + correction


def _curve_is_valid(family: str, params: tuple[float, ...], domain: tuple[int, int]) -> bool:
    try:
        OperatingCurve(
            model_id="probe",
            hardware_id="probe",
            phase="generation",
            family=family,
            params=params,
            fit_domain=domain,
            residual_rms=0.0,
            n_samples=4,
        )
    except ValidationError:
        return False
    return True


def fit_curve(req: FitRequest) -> FitResult:
    """Least-squares fit per requested family, then corrected-AIC selection.

    Families whose fitted curve violates non-negativity or monotonicity on
    the fit domain are excluded and selection re-runs on the rest; if every
    family is excluded the fit fails.
    """
    n = np.array([s[0] for s in req.samples], dtype=np.float64)
    e = np.array([s[1] for s in req.samples], dtype=np.float64)
    domain = (int(n.min()), int(n.max()))
    e_rms = float(np.sqrt(np.mean(e * e)))
    flat = float(e.max()) == float(e.min())

    per_family_params: dict[str, tuple[float, ...]] = {}
    per_family_rms: dict[str, float] = {}
    scores: dict[str, float] = {}
    converged_map: dict[str, bool] = {}
    warnings: list[str] = []

    for family in req.families:
        if family == "powerlaw" and flat:
            warnings.append("powerlaw skipped: flat energies make b unidentifiable")
            continue
        if flat:
            # constant data: exact zero-slope solutions, no solver noise
            level = float(e[0])
            params = (level, 0.0) if family == "affine" else (level, 0.0, 0.0)
            converged = True
        else:
            try:
                params, converged = _fit_family(family, n, e, req)
            except FitError as exc:
                warnings.append(f"{family} skipped: {exc}")
                continue
        with np.errstate(over="ignore", invalid="ignore"):
            resid = kernels.eval_curve_array(FAMILY_CODE[family], params, n) - e
            ssr = float(resid @ resid)
        if not math.isfinite(ssr):
            warnings.append(f"{family} skipped: fit overflows on the sample range")
            continue
        per_family_params[family] = params
        per_family_rms[family] = math.sqrt(ssr / n.size)
        scores[family] = _aicc(ssr, n.size, len(params), e_rms)
        converged_map[family] = converged
        if not converged:
            warnings.append(f"{family} did not converge in {req.max_iterations} iterations")

    if not per_family_params:
        raise FitError("no family produced a fit")

    # minimal score wins; ties to fewer params, then declared family order
    def selection_key(fam: str):
        return (scores[fam], len(per_family_params[fam]), FAMILY_ORDER[fam])

    candidates = sorted(per_family_params, key=selection_key)
    chosen = None
    for fam in candidates:
        if _curve_is_valid(fam, per_family_params[fam], domain):
            chosen = fam
            break
        warnings.append(f"{fam} rejected: violates non-negativity/monotonicity on fit domain")
    if chosen is None:
        raise FitError("all requested families violate monotonicity on the fit domain")

    curve = OperatingCurve(
        model_id=req.model_id,
        hardware_id=req.hardware_id,
        phase=req.phase,
        family=chosen,
        params=per_family_params[chosen],
        fit_domain=domain,
        residual_rms=per_family_rms[chosen],
        n_samples=n.size,
        ref_input_tokens=req.ref_input_tokens,
    )
    return FitResult(
        curve=curve,
        per_family_rms=per_family_rms,
        selection_score=scores,
        converged=converged_map[chosen],
        warnings=tuple(warnings),
    )


def fit_from_measurements(
    store,
    model_id: str,
    hardware_id: str,
    phase: str,
    families: tuple[str, ...] = FAMILIES,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    tolerance: float = DEFAULT_TOLERANCE,
) -> FitResult:
    """Fit one operating curve from the store's measurements for a key.

    Input-phase samples pair (input_tokens, energy); generation-phase samples
    pair (generated_tokens, energy) and record the modal input length of the
    underlying runs as the curve's ref_input_tokens.
    """
    rows = [
        m
        for m in store.measurements
        if m.model_id == model_id and m.hardware_id == hardware_id and m.phase == phase
    ]
    if not rows:
        raise FitError(f"no measurements for ({model_id}, {hardware_id}, {phase})")
    if phase == "input":
        samples = [(m.input_tokens, m.energy) for m in rows]
        ref = None
    else:
        samples = [(m.generated_tokens, m.energy) for m in rows]
        counts: dict[int, int] = {}
        for m in rows:
            counts[m.input_tokens] = counts.get(m.input_tokens, 0) + 1
        ref = min(sorted(counts), key=lambda n: (-counts[n], n))
    req = FitRequest(
        samples=tuple(samples),
        families=families,
        max_iterations=max_iterations,
        tolerance=tolerance,
        model_id=model_id,
        hardware_id=hardware_id,
        phase=phase,
        ref_input_tokens=ref,
    )
    return fit_curve(req)


# ---------------------------------------------------------------------------
# model comparison table
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    model_id: str
    tokens: int
    predicted_energy: float
    joules_per_token: float


def compare_models(curves: list[OperatingCurve], token_grid: list[int]) -> list[ComparisonRow]:
    """Predicted energy and J/token for each curve at each grid point.

    All curves must share hardware and phase so the comparison is like for
    like; the grid must hold counts >= 1 (J/token is undefined at 0).
    """
    if curves:
        hw = {c.hardware_id for c in curves}
        ph = {c.phase for c in curves}
        if len(hw) > 1 or len(ph) > 1:
            raise ValidationError(
                f"curves must share hardware and phase, got hardware={sorted(hw)} "
                f"phase={sorted(ph)}"
            )
    if any(t < 1 for t in token_grid):
        raise ValidationError("token grid entries must be >= 1")
    rows: list[ComparisonRow] = []
    grid = np.asarray(token_grid, dtype=np.float64)
    for curve in curves:
        if token_grid:
            values = eval_curve_many(curve, grid)
        else:
            values = []
        for t, v in zip(token_grid, values):
            rows.append(
                ComparisonRow(
                    model_id=curve.model_id,
                    tokens=int(t),
                    predicted_energy=float(v),
                    joules_per_token=float(v) / int(t),
                )
            )
    return rows
