"""Minimal routing service over the standard-library threading HTTP server.

Endpoints:
    POST /route            query JSON in, decision JSON out (200);
                           422 with the violation list when infeasible;
                           400 on malformed input
    GET  /healthz          200 with the store fingerprint
    POST /profiles/reload  re-read store/policy/schedule from their configured
                           paths and swap the snapshot atomically; 409 with the
                           error (old snapshot retained) when the new data is
                           invalid

Requests route against an immutable snapshot captured at dispatch time, so a
concurrent reload is observed wholly-old or wholly-new, never mixed. Per-
request failures never take the server down.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .config import Config
from .errors import (
    EstimationError,
    NoFeasibleActionError,
    ValidationError,
    WattrouteError,
)
from .router import RoutingPolicy, load_policy, route
from .store import ProfileStore, load_store, store_fingerprint
from .strategies import BudgetSchedule, load_schedule
from .wire import decision_to_json, query_from_document, violations_to_json

logger = logging.getLogger("wattroute.service")


@dataclass(frozen=True)
class Snapshot:
    store: ProfileStore
    policy: RoutingPolicy
    schedule: BudgetSchedule | None
    fingerprint: str


def _load_snapshot(cfg: Config) -> Snapshot:
    if not cfg.store_path or not cfg.policy_path:
        raise ValidationError("service needs store_path and policy_path configured")
    store = load_store(cfg.store_path)
    policy = load_policy(cfg.policy_path)
    schedule = load_schedule(cfg.schedule_path) if cfg.schedule_path else None
    return Snapshot(
        store=store,
        policy=policy,
        schedule=schedule,
        fingerprint=store_fingerprint(store),
    )


class RoutingService:
    def __init__(self, cfg: Config):
        self.cfg = cfg
        self._snapshot = _load_snapshot(cfg)
        self._reload_lock = threading.Lock()
        service = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, fmt, *args):  # route through logging, not stderr
                logger.debug("%s " + fmt, self.address_string(), *args)

            def _reply(self, status: int, body: str):
                payload = body.encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def _reply_error(self, status: int, message: str):
                self._reply(status, json.dumps({"error": message}, sort_keys=True))

            def do_GET(self):
                if self.path != "/healthz":
                    self._reply_error(404, f"unknown path {self.path}")
                    return
                snap = service._snapshot
                self._reply(
                    200,
                    json.dumps(
                        {"status": "ok", "store_fingerprint": snap.fingerprint},
                        sort_keys=True,
                    ),
                )

            def do_POST(self):
                try:
                    if self.path == "/route":
                        self._handle_route()
                    elif self.path == "/profiles/reload":
                        self._handle_reload()
                    else:
                        self._reply_error(404, f"unknown path {self.path}")
                except Exception as exc:  # per-request errors never crash the server
                    logger.exception("request failed")
                    try:
                        self._reply_error(500, f"internal error: {exc}")
                    except Exception:
                        pass

            def _read_body(self):
                length = int(self.headers.get("Content-Length", "0") or 0)
                return self.rfile.read(length)

            def _handle_route(self):
                snap = service._snapshot  # one immutable snapshot per request
                try:
                    doc = json.loads(self._read_body() or b"{}")
                    q = query_from_document(doc)
                except (json.JSONDecodeError, ValidationError) as exc:
                    self._reply_error(400, str(exc))
                    return
                try:
                    decision = route(q, snap.policy, snap.store, snap.schedule)
                except NoFeasibleActionError as exc:
                    self._reply(422, violations_to_json(exc.violations))
                    return
                except (EstimationError, ValidationError) as exc:
                    self._reply_error(400, str(exc))
                    return
                self._reply(200, decision_to_json(decision))

            def _handle_reload(self):
                with service._reload_lock:
                    try:
                        fresh = _load_snapshot(service.cfg)
                    except (WattrouteError, OSError, json.JSONDecodeError) as exc:
                        self._reply(
                            409,
                            json.dumps(
                                {"error": f"reload rejected: {exc}"}, sort_keys=True
                            ),
                        )
                        return
                    service._snapshot = fresh
                self._reply(
                    200,
                    json.dumps(
                        {"status": "reloaded", "store_fingerprint": fresh.fingerprint},
                        sort_keys=True,
                    ),
                )

        self._httpd = ThreadingHTTPServer((cfg.host, cfg.port), Handler)

    def bound_address(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"{host}:{port}"

    def serve_forever(self):
        self._httpd.serve_forever()

    def shutdown(self):
        self._httpd.shutdown()
        self._httpd.server_close()
