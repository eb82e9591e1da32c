"""Bundled data fixtures: benchmark table, synthetic measurements, schedule, policy.

Regenerate with scripts/make_fixtures.py.
"""

from importlib import resources
from pathlib import Path

BENCHMARKS_CSV = "benchmarks_mmlu_llama.csv"
MEASUREMENTS_CSV = "measurements_l40s.csv"
SCHEDULE_JSON = "schedule_default.json"
POLICY_JSON = "policy_default.json"


def bundled_path(name: str) -> Path:
    """Filesystem path of a bundled fixture."""
    return Path(str(resources.files(__package__) / name))
