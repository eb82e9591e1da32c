"""Runtime configuration for the CLI and service.

Values resolve in order: explicit JSON config file, WATTROUTE_* environment
overrides, built-in defaults. Documented overrides:

    WATTROUTE_STORE_PATH, WATTROUTE_POLICY_PATH, WATTROUTE_SCHEDULE_PATH,
    WATTROUTE_REFERENCE_CARBON_INTENSITY, WATTROUTE_SERVICE_BIND,
    WATTROUTE_LOG_LEVEL
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError

DEFAULT_REFERENCE_CARBON_INTENSITY = 400.0  # gCO2/kWh
DEFAULT_SERVICE_BIND = "127.0.0.1:8347"

_ENV_FIELDS = {
    "store_path": "WATTROUTE_STORE_PATH",
    "policy_path": "WATTROUTE_POLICY_PATH",
    "schedule_path": "WATTROUTE_SCHEDULE_PATH",
    "reference_carbon_intensity": "WATTROUTE_REFERENCE_CARBON_INTENSITY",
    "service_bind": "WATTROUTE_SERVICE_BIND",
    "log_level": "WATTROUTE_LOG_LEVEL",
}


@dataclass(frozen=True)
class Config:
    store_path: str = ""
    policy_path: str = ""
    schedule_path: str = ""
    reference_carbon_intensity: float = DEFAULT_REFERENCE_CARBON_INTENSITY
    service_bind: str = DEFAULT_SERVICE_BIND
    log_level: str = "info"

    def __post_init__(self):
        if self.reference_carbon_intensity <= 0:
            raise ValidationError("reference_carbon_intensity must be > 0")
        host, sep, port = self.service_bind.partition(":")
        if not sep or not host or not port.isdigit():
            raise ValidationError(
                f"service_bind must look like host:port, got {self.service_bind!r}"
            )

    @property
    def host(self) -> str:
        return self.service_bind.partition(":")[0]

    @property
    def port(self) -> int:
        return int(self.service_bind.partition(":")[2])


def load_config(path: str | Path | None = None) -> Config:
    """Config file plus WATTROUTE_* environment overrides."""
    values: dict = {}
    if path is not None:
        doc = json.loads(Path(path).read_text())
        if not isinstance(doc, dict):
            raise ValidationError(f"{path}: config must be a JSON object")
        unknown = set(doc) - set(_ENV_FIELDS)
        if unknown:
            raise ValidationError(f"{path}: unknown config fields {sorted(unknown)}")
        values.update(doc)
    for field_name, env_name in _ENV_FIELDS.items():
        raw = os.environ.get(env_name)
        if raw is not None and raw != "":
            if field_name == "reference_carbon_intensity":
                values[field_name] = float(raw)
            else:
                values[field_name] = raw
    return Config(**values)
