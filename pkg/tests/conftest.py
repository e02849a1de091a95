import json
import socket
from pathlib import Path

import pytest

from dstage.orchestrator import bundled_scenario_dir

_REAL_CONNECT = socket.socket.connect
_LOCAL_HOSTS = {"127.0.0.1", "localhost", "::1"}


@pytest.fixture(autouse=True)
def no_external_network(monkeypatch):
    """The suite must pass with networking disabled; only loopback is allowed."""

    def guarded(self, address):
        if isinstance(address, tuple) and address and str(address[0]) not in _LOCAL_HOSTS:
            raise AssertionError(f"unexpected network egress to {address!r}")
        return _REAL_CONNECT(self, address)

    monkeypatch.setattr(socket.socket, "connect", guarded)


@pytest.fixture(scope="session")
def cuban_bundle() -> Path:
    return bundled_scenario_dir("cuban")


@pytest.fixture(scope="session")
def counterfactual_bundle() -> Path:
    return bundled_scenario_dir("cuban_counterfactual")


def normalized_artifact(path: Path) -> str:
    """Artifact bytes with volatile timestamps stripped, for replay diffs."""
    text = path.read_text(encoding="utf-8")
    if path.name == "meta.json":
        return "META"
    if path.suffix == ".jsonl":
        rows = []
        for line in text.splitlines():
            row = json.loads(line)
            row.pop("timestamp", None)
            row.pop("ts", None)
            rows.append(json.dumps(row, sort_keys=True))
        return "\n".join(rows)
    return text
