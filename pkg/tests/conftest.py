from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tablezoomer.executor import ExecutorGateway

FAKE_RUNNER = Path(__file__).parent / "fake_runner.py"


@pytest.fixture
def fake_runner_cmd() -> list[str]:
    return [sys.executable, str(FAKE_RUNNER)]


@pytest.fixture
def gateway(fake_runner_cmd) -> ExecutorGateway:
    return ExecutorGateway(fake_runner_cmd, timeout=15.0)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    lines = []
    for status in ("passed", "failed", "error", "skipped"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" in nodeid and "::" in nodeid:
                name = nodeid.split("::", 1)[1]
                lines.append((name, status.upper()))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, status in sorted(set(lines)):
            terminalreporter.write_line(f"{status:>7}  {name}")
