import os
import sys

import pytest

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SCENARIO_DIR = os.path.join(REPO_ROOT, "scenarios")


def scenario_path(name: str) -> str:
    return os.path.join(SCENARIO_DIR, name)


@pytest.fixture
def tmp_log(tmp_path):
    return str(tmp_path / "events.jsonl")


def pytest_addoption(parser):
    parser.addoption(
        "--acceptance-verbose",
        action="store_true",
        help="echo each acceptance line even on success",
    )


class AcceptanceRecorder:
    """Collects one pass/fail line per acceptance criterion."""

    def __init__(self):
        self.lines = []

    def record(self, name: str, ok: bool, detail: str = ""):
        tag = "PASS" if ok else "FAIL"
        line = f"[{tag}] {name}" + (f": {detail}" if detail else "")
        self.lines.append(line)
        print(line, file=sys.stderr)
        assert ok, line


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceRecorder()
