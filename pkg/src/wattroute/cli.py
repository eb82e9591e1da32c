"""Command-line surface.

Exit codes: 0 success, 1 usage or input errors, 2 no feasible routing action.
All JSON output is stable-ordered (sorted keys) so callers can golden-file it.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import data as bundled_data
from .config import load_config
from .curvefit import compare_models, fit_from_measurements
from .errors import (
    EstimationError,
    FitError,
    NoFeasibleActionError,
    SchemaError,
    StoreError,
    ValidationError,
    WattrouteError,
)
from .estimators import Constraints, Environment, QueryDescriptor
from .router import RoutingPolicy, load_policy, route
from .simulator import (
    FixedAction,
    compare_policies,
    load_workload,
    report_to_csv,
    report_to_json,
    run_simulation,
)
from .store import (
    FAMILIES,
    ProfileStore,
    Strategy,
    ingest_benchmark_table,
    ingest_measurements,
    load_store,
    save_store,
    store_fingerprint,
)
from .strategies import choose_budget, load_schedule
from .wire import decision_to_json, query_from_document, violations_to_json

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2


def _load_or_new_store(path: Path) -> ProfileStore:
    return load_store(path) if path.exists() else ProfileStore()


def _fail(message: str, code: int = EXIT_USAGE):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main():
    """Energy-aware LLM query routing."""


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--kind", type=click.Choice(["measurements", "benchmark"]), required=True)
@click.option("--store", "store_path", type=click.Path(dir_okay=False), required=True)
def ingest(csv_path, kind, store_path):
    """Ingest a measurements or benchmark CSV into a store file."""
    store_path = Path(store_path)
    try:
        store = _load_or_new_store(store_path)
        if kind == "measurements":
            report = ingest_measurements(store, csv_path)
        else:
            report = ingest_benchmark_table(store, csv_path)
    except (SchemaError, StoreError, OSError) as exc:
        _fail(str(exc))
    save_store(store, store_path)
    click.echo(report.summary())


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--model", required=True)
@click.option("--hardware", required=True)
@click.option("--phase", type=click.Choice(["input", "generation"]), required=True)
@click.option("--families", default=",".join(FAMILIES), show_default=True)
@click.option("--store", "store_path", type=click.Path(dir_okay=False), required=True)
@click.option("--max-iterations", default=200, show_default=True)
@click.option("--tolerance", default=1e-9, show_default=True)
def fit(csv_path, model, hardware, phase, families, store_path, max_iterations, tolerance):
    """Fit an operating curve from a measurements CSV and store it."""
    store_path = Path(store_path)
    try:
        store = _load_or_new_store(store_path)
        report = ingest_measurements(store, csv_path)
        result = fit_from_measurements(
            store,
            model,
            hardware,
            phase,
            families=tuple(f.strip() for f in families.split(",") if f.strip()),
            max_iterations=max_iterations,
            tolerance=tolerance,
        )
    except (SchemaError, StoreError, FitError, ValidationError, OSError) as exc:
        _fail(str(exc))
    store.add_curve(result.curve)
    save_store(store, store_path)
    curve = result.curve
    click.echo(f"ingested {report.ingested} rows ({len(report.rejected)} rejected)")
    click.echo(f"family: {curve.family}")
    click.echo(f"params: {list(curve.params)!r}")
    click.echo(f"fit domain: {list(curve.fit_domain)}")
    click.echo(f"residual rms: {curve.residual_rms!r} J")
    if curve.ref_input_tokens is not None:
        click.echo(f"ref input tokens: {curve.ref_input_tokens}")
    for warning in result.warnings:
        click.echo(f"warning: {warning}", err=True)


@main.command(name="route")
@click.option("--store", "store_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--policy", "policy_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--schedule", "schedule_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--query-json", type=click.Path(exists=True, dir_okay=False))
@click.option("--category")
@click.option("--input-tokens", type=int)
@click.option("--floor", type=float, help="Accuracy floor constraint.")
@click.option("--energy-budget", type=float, help="Energy budget constraint (joules).")
@click.option("--latency-budget", type=float, help="Latency budget (seconds, pass-through).")
@click.option("--load", "load_factor", type=float, default=0.0, show_default=True)
@click.option("--carbon", "carbon_intensity", type=float, default=0.0, show_default=True)
@click.option("--explain", "show_explain", is_flag=True, help="Print the report instead of JSON.")
def route_cmd(
    store_path,
    policy_path,
    schedule_path,
    query_json,
    category,
    input_tokens,
    floor,
    energy_budget,
    latency_budget,
    load_factor,
    carbon_intensity,
    show_explain,
):
    """Route one query; emits the decision JSON on stdout."""
    try:
        store = load_store(store_path)
        policy = load_policy(policy_path)
        schedule = load_schedule(schedule_path) if schedule_path else None
        if query_json:
            q = query_from_document(json.loads(Path(query_json).read_text()))
        else:
            if category is None or input_tokens is None:
                _fail("either --query-json or both --category and --input-tokens are required")
            q = QueryDescriptor(
                category=category,
                input_tokens=input_tokens,
                constraints=Constraints(
                    energy_budget=energy_budget,
                    latency_budget=latency_budget,
                    accuracy_floor=floor,
                ),
                environment=Environment(
                    load_factor=load_factor, carbon_intensity=carbon_intensity
                ),
            )
    except (ValidationError, StoreError, json.JSONDecodeError, OSError) as exc:
        _fail(str(exc))
    try:
        decision = route(q, policy, store, schedule)
    except NoFeasibleActionError as exc:
        click.echo(violations_to_json(exc.violations))
        sys.exit(EXIT_INFEASIBLE)
    except (EstimationError, ValidationError) as exc:
        _fail(str(exc))
    if show_explain:
        from .router import explain

        click.echo(explain(decision), nl=False)
    else:
        click.echo(decision_to_json(decision))


@main.command()
@click.option("--store", "store_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--schedule", "schedule_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--model", required=True)
@click.option("--hardware", required=True)
@click.option("--category", required=True)
@click.option("--input-tokens", type=int, required=True)
@click.option("--load", "load_factor", type=float, default=0.0, show_default=True)
@click.option("--carbon", "carbon_intensity", type=float, default=0.0, show_default=True)
@click.option("--reference-carbon", type=float, default=400.0, show_default=True)
def budget(
    store_path,
    schedule_path,
    model,
    hardware,
    category,
    input_tokens,
    load_factor,
    carbon_intensity,
    reference_carbon,
):
    """Pick a chain-of-thought token budget via the marginal accuracy-per-joule rule."""
    try:
        store = load_store(store_path)
        schedule = load_schedule(schedule_path)
        q = QueryDescriptor(
            category=category,
            input_tokens=input_tokens,
            environment=Environment(load_factor=load_factor, carbon_intensity=carbon_intensity),
        )
        chosen, acc, energy = choose_budget(
            q, model, schedule, store, hardware, reference_intensity=reference_carbon
        )
    except WattrouteError as exc:
        _fail(str(exc))
    click.echo(
        json.dumps(
            {"budget": chosen, "predicted_accuracy": acc, "predicted_energy_j": energy},
            sort_keys=True,
            indent=2,
        )
    )


@main.command(name="compare-curves")
@click.option("--store", "store_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--hardware", required=True)
@click.option("--phase", type=click.Choice(["input", "generation"]), required=True)
@click.option("--grid", required=True, help="Comma-separated token counts.")
@click.option("--models", help="Comma-separated model ids; defaults to all with curves.")
def compare_curves(store_path, hardware, phase, grid, models):
    """Tabulate predicted energy and J/token for fitted curves on a token grid."""
    try:
        store = load_store(store_path)
        token_grid = [int(t) for t in grid.split(",") if t.strip()]
        curves = [
            c
            for c in store.curves.values()
            if c.hardware_id == hardware and c.phase == phase
        ]
        if models:
            wanted = {m.strip() for m in models.split(",")}
            curves = [c for c in curves if c.model_id in wanted]
        curves.sort(key=lambda c: c.model_id)
        rows = compare_models(curves, token_grid)
    except (WattrouteError, ValueError) as exc:
        _fail(str(exc))
    click.echo("model_id,tokens,predicted_energy_j,joules_per_token")
    for r in rows:
        click.echo(f"{r.model_id},{r.tokens},{r.predicted_energy!r},{r.joules_per_token!r}")


def _parse_policies(doc) -> list[tuple[str, RoutingPolicy | FixedAction]]:
    if not isinstance(doc, list):
        raise ValidationError("policies file must be a JSON array")
    out: list[tuple[str, RoutingPolicy | FixedAction]] = []
    for entry in doc:
        name = entry.get("name")
        kind = entry.get("type")
        if not name or kind not in ("router", "fixed"):
            raise ValidationError(
                f"each policy needs a name and type router|fixed, got {entry!r}"
            )
        if kind == "fixed":
            out.append(
                (
                    name,
                    FixedAction(
                        entry["model_id"],
                        Strategy.parse(entry["strategy"]),
                        hardware_id=entry.get("hardware_id", ""),
                    ),
                )
            )
        else:
            p = entry["policy"]
            out.append(
                (
                    name,
                    RoutingPolicy(
                        objective=p.get("objective", "max_accuracy"),
                        candidate_models=tuple(p["candidate_models"]),
                        candidate_strategies=tuple(p.get("candidate_strategies", ["zero_shot"])),
                        mv_k=p.get("mv_k", 16),
                        lambda_weight=p.get("lambda_weight", 1.0),
                        hardware_id=p.get("hardware_id", ""),
                        expected_output_tokens=p.get("expected_output_tokens", 1),
                        cot_max_steps=p.get("cot_max_steps", 5),
                        mv_uncertainty_width=p.get("mv_uncertainty_width", 0.2),
                        model_size_rank=tuple(p.get("model_size_rank", [])),
                    ),
                )
            )
    return out


@main.command()
@click.argument("workload_json", type=click.Path(exists=True, dir_okay=False))
@click.option("--policies", "policies_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--store", "store_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--schedule", "schedule_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
def simulate(workload_json, policies_path, store_path, schedule_path, out_dir):
    """Replay a seeded workload against each policy; write JSON and CSV reports."""
    try:
        spec = load_workload(workload_json)
        policies = _parse_policies(json.loads(Path(policies_path).read_text()))
        store = load_store(store_path)
        schedule = load_schedule(schedule_path) if schedule_path else None
        report = run_simulation(spec, policies, store, schedule)
    except (WattrouteError, KeyError, json.JSONDecodeError, OSError) as exc:
        _fail(f"simulation failed: {exc}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report_to_json(report) + "\n")
    (out / "report.csv").write_text(report_to_csv(report))
    click.echo(f"report written to {out / 'report.json'} and {out / 'report.csv'}")
    click.echo("policy,total_energy_j,total_carbon_g,mean_accuracy")
    for name, o in report.per_policy.items():
        click.echo(f"{name},{o.total_energy:.6g},{o.total_carbon:.6g},{o.mean_accuracy:.6g}")
    names = list(report.per_policy)
    for p_name in names[1:]:
        click.echo(compare_policies(report, p_name, names[0]))


@main.command()
@click.argument("target_dir", type=click.Path(file_okay=False))
def init(target_dir):
    """Write bundled fixtures and a prebuilt store into a directory."""
    target = Path(target_dir)
    target.mkdir(parents=True, exist_ok=True)
    store = ProfileStore()
    ingest_measurements(store, bundled_data.bundled_path(bundled_data.MEASUREMENTS_CSV))
    ingest_benchmark_table(store, bundled_data.bundled_path(bundled_data.BENCHMARKS_CSV))
    for model in ("llama-1b", "llama-8b"):
        for phase in ("input", "generation"):
            store.add_curve(fit_from_measurements(store, model, "l40s", phase).curve)
    save_store(store, target / "store.json")
    for name in (
        bundled_data.BENCHMARKS_CSV,
        bundled_data.MEASUREMENTS_CSV,
        bundled_data.SCHEDULE_JSON,
        bundled_data.POLICY_JSON,
    ):
        (target / name).write_bytes(bundled_data.bundled_path(name).read_bytes())
    click.echo(f"wrote store.json and fixtures to {target}")
    click.echo(f"store fingerprint: {store_fingerprint(store)}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--store", "store_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--policy", "policy_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--schedule", "schedule_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--bind", help="host:port to listen on.")
def serve(config_path, store_path, policy_path, schedule_path, bind):
    """Run the routing service (POST /route, GET /healthz, POST /profiles/reload)."""
    from dataclasses import replace

    from .service import RoutingService

    try:
        cfg = load_config(config_path)
        if store_path:
            cfg = replace(cfg, store_path=store_path)
        if policy_path:
            cfg = replace(cfg, policy_path=policy_path)
        if schedule_path:
            cfg = replace(cfg, schedule_path=schedule_path)
        if bind:
            cfg = replace(cfg, service_bind=bind)
        service = RoutingService(cfg)
    except WattrouteError as exc:
        _fail(str(exc))
    click.echo(f"listening on {service.bound_address()}")
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        service.shutdown()


if __name__ == "__main__":
    main()
