"""Gateway against the real runner binary, when it happens to be installed.

The primary suite never requires this: every other test drives the gateway
through the protocol-faithful fake. These checks only add coverage on
machines where the runner package is present.
"""

from __future__ import annotations

import shutil

import pytest

from tablezoomer.codegen import GeneratedProgram
from tablezoomer.executor import ExecutorGateway

from helpers import write_csv

pytestmark = pytest.mark.skipif(
    shutil.which("table-runner") is None, reason="table-runner not on PATH"
)


@pytest.fixture
def real_gateway():
    return ExecutorGateway(timeout=60.0)  # discovered from PATH


def test_health_check_reports_pandas_dialect(real_gateway):
    info = real_gateway.health_check()
    assert info.name == "table-runner"
    assert info.protocol == 1
    assert info.dialect == "python-pandas"


def test_executes_dataframe_program(real_gateway, tmp_path):
    table = write_csv(tmp_path / "t.csv", ["amount"], [["3"], ["4"], [""]])
    source = f"df = pd.read_csv({str(table)!r})\nprint(int(df['amount'].dropna().sum()))"
    program = GeneratedProgram("sum it", source, str(table))
    result = real_gateway.execute(program)
    assert result.status == "ok"
    assert result.stdout.strip() == "7"


def test_error_trace_flows_back(real_gateway, tmp_path):
    table = write_csv(tmp_path / "t.csv", ["amount"], [["3"]])
    source = f"df = pd.read_csv({str(table)!r})\nprint(df['missing_col'].sum())"
    program = GeneratedProgram("bad column", source, str(table))
    result = real_gateway.execute(program)
    assert result.status == "error"
    assert "missing_col" in result.error_trace
