import json
import threading
import urllib.error
import urllib.request

import pytest
from click.testing import CliRunner

from wattroute.cli import main as cli_main
from wattroute.config import Config
from wattroute.data import POLICY_JSON, SCHEDULE_JSON
from wattroute.service import RoutingService

MATH_FLOOR_QUERY = {
    "category": "Math",
    "input_tokens": 128,
    "constraints": {"accuracy_floor": 0.35},
    "environment": {"load_factor": 0.0, "carbon_intensity": 0.0},
}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    ws = tmp_path_factory.mktemp("svc")
    result = CliRunner().invoke(cli_main, ["init", str(ws)])
    assert result.exit_code == 0, result.output
    return ws


@pytest.fixture()
def service(workspace):
    cfg = Config(
        store_path=str(workspace / "store.json"),
        policy_path=str(workspace / POLICY_JSON),
        schedule_path=str(workspace / SCHEDULE_JSON),
        service_bind="127.0.0.1:0",
    )
    svc = RoutingService(cfg)
    thread = threading.Thread(target=svc.serve_forever, daemon=True)
    thread.start()
    yield svc
    svc.shutdown()
    thread.join(timeout=5)


def request(svc, method, path, body=None):
    url = f"http://{svc.bound_address()}{path}"
    data = json.dumps(body).encode() if body is not None else (b"" if method == "POST" else None)
    req = urllib.request.Request(url, data=data, method=method)
    try:
        with urllib.request.urlopen(req, timeout=10) as resp:
            return resp.status, resp.read().decode()
    except urllib.error.HTTPError as err:
        return err.code, err.read().decode()


def test_route_math_floor_over_the_wire(service):
    status, body = request(service, "POST", "/route", MATH_FLOOR_QUERY)
    assert status == 200
    doc = json.loads(body)
    assert doc["chosen"]["model_id"] == "llama-8b"


def test_route_infeasible_422_with_violations(service):
    query = dict(MATH_FLOOR_QUERY, constraints={"accuracy_floor": 0.99})
    status, body = request(service, "POST", "/route", query)
    assert status == 422
    doc = json.loads(body)
    assert doc["error"] == "no feasible action"
    assert any("accuracy_floor" in v["cause"] for v in doc["violations"])


def test_route_malformed_body_400(service):
    status, body = request(service, "POST", "/route", {"category": "Math"})
    assert status == 400
    assert "input_tokens" in body


def test_unknown_path_404(service):
    status, _ = request(service, "GET", "/nope")
    assert status == 404


def test_healthz_fingerprint_stable_across_noop_reload(service):
    status, body = request(service, "GET", "/healthz")
    assert status == 200
    before = json.loads(body)["store_fingerprint"]

    status, body = request(service, "POST", "/profiles/reload")
    assert status == 200
    assert json.loads(body)["store_fingerprint"] == before

    status, body = request(service, "GET", "/healthz")
    assert json.loads(body)["store_fingerprint"] == before


def test_reload_rejects_bad_store_and_keeps_old_snapshot(service, workspace):
    store_path = workspace / "store.json"
    original = store_path.read_text()
    _, before_body = request(service, "GET", "/healthz")
    before = json.loads(before_body)["store_fingerprint"]
    try:
        store_path.write_text('{"version": 99}')
        status, body = request(service, "POST", "/profiles/reload")
        assert status == 409
        assert "reload rejected" in json.loads(body)["error"]
        # old snapshot still serves routes and the fingerprint is unchanged
        status, _ = request(service, "POST", "/route", MATH_FLOOR_QUERY)
        assert status == 200
        _, after_body = request(service, "GET", "/healthz")
        assert json.loads(after_body)["store_fingerprint"] == before
    finally:
        store_path.write_text(original)


def test_cli_and_service_emit_identical_decision_json(service, workspace, tmp_path):
    status, service_body = request(service, "POST", "/route", MATH_FLOOR_QUERY)
    assert status == 200
    qpath = tmp_path / "q.json"
    qpath.write_text(json.dumps(MATH_FLOOR_QUERY))
    result = CliRunner().invoke(
        cli_main,
        ["route", "--store", str(workspace / "store.json"),
         "--policy", str(workspace / POLICY_JSON),
         "--schedule", str(workspace / SCHEDULE_JSON),
         "--query-json", str(qpath)],
    )
    assert result.exit_code == 0
    assert result.output == service_body + "\n"  # CLI adds the trailing newline


def test_concurrent_routes_during_reload(service):
    errors = []
    results = []

    def hammer():
        try:
            for _ in range(20):
                status, body = request(service, "POST", "/route", MATH_FLOOR_QUERY)
                results.append((status, json.loads(body)["chosen"]["action_id"]))
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    def reloader():
        try:
            for _ in range(5):
                request(service, "POST", "/profiles/reload")
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    threads = [threading.Thread(target=hammer) for _ in range(4)]
    threads.append(threading.Thread(target=reloader))
    for t in threads:
        t.start()
    for t in threads:
        t.join(timeout=30)
    assert not errors
    assert len(results) == 80
    assert all(r == (200, "llama-8b:zero_shot") for r in results)
