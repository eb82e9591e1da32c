import pytest

from wattroute import (
    OperatingCurve,
    ProfileStore,
    RoutingPolicy,
    fit_from_measurements,
    ingest_benchmark_table,
    ingest_measurements,
    load_policy,
    load_schedule,
)
from wattroute.data import (
    BENCHMARKS_CSV,
    MEASUREMENTS_CSV,
    POLICY_JSON,
    SCHEDULE_JSON,
    bundled_path,
)


def build_bundled_store() -> ProfileStore:
    store = ProfileStore()
    ingest_measurements(store, bundled_path(MEASUREMENTS_CSV))
    ingest_benchmark_table(store, bundled_path(BENCHMARKS_CSV))
    for model in ("llama-1b", "llama-8b"):
        for phase in ("input", "generation"):
            store.add_curve(fit_from_measurements(store, model, "l40s", phase).curve)
    return store


@pytest.fixture(scope="session")
def bundled_store() -> ProfileStore:
    return build_bundled_store()


@pytest.fixture(scope="session")
def bundled_schedule():
    return load_schedule(bundled_path(SCHEDULE_JSON))


@pytest.fixture(scope="session")
def bundled_policy() -> RoutingPolicy:
    return load_policy(bundled_path(POLICY_JSON))


def make_affine_store(
    benchmarks=(),
    input_params=(1.0, 0.1),
    gen_params=(2.0, 0.5),
    ref_input_tokens=32,
    model_id="m1",
    hardware_id="hw",
    domain=(1, 512),
) -> ProfileStore:
    """Store with hand-evaluable affine curves and optional benchmark rows."""
    store = ProfileStore()
    store.add_curve(
        OperatingCurve(
            model_id=model_id,
            hardware_id=hardware_id,
            phase="input",
            family="affine",
            params=input_params,
            fit_domain=domain,
            residual_rms=0.0,
            n_samples=8,
            imported=True,
        )
    )
    store.add_curve(
        OperatingCurve(
            model_id=model_id,
            hardware_id=hardware_id,
            phase="generation",
            family="affine",
            params=gen_params,
            fit_domain=domain,
            residual_rms=0.0,
            n_samples=8,
            ref_input_tokens=ref_input_tokens,
            imported=True,
        )
    )
    for rec in benchmarks:
        store.add_benchmark(rec)
    return store
