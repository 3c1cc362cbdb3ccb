"""Run generated programs in fresh, disposable runner processes.

Every execution spawns a brand-new runner process (that is the
reset-environment semantics: no interpreter state can survive between
executions), hands it one JSON job object on stdin, and reads one JSON
result object from stdout. Timeouts kill the whole process group.

Runner protocol, v1:
    job    = {"source": str, "table_path": str}
    result = {"status": "ok"|"error", "stdout": str, "error_trace": str,
              "exit_code": int}
    `<runner> --version` prints {"name", "version", "protocol", "dialect"}.
"""

from __future__ import annotations

import json
import logging
import os
import shutil
import signal
import subprocess
import tempfile
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .codegen import GeneratedProgram
from .errors import RunnerUnavailableError, SandboxViolationError

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 30.0
STDOUT_CAP = 64 * 1024
TRUNCATION_MARKER = "\n... [stdout truncated]"
KILL_GRACE = 1.0
RUNNER_SEARCH_NAMES = ("table-runner",)


@dataclass(frozen=True)
class ExecutionResult:
    status: str  # ok | error | timeout
    stdout: str
    error_trace: str
    wall_time: float
    exit_code: int

    def to_dict(self, *, include_wall_time: bool = True) -> dict:
        out = {
            "status": self.status,
            "stdout": self.stdout,
            "error_trace": self.error_trace,
            "exit_code": self.exit_code,
        }
        if include_wall_time:
            out["wall_time"] = self.wall_time
        return out


@dataclass(frozen=True)
class RunnerInfo:
    name: str
    version: str
    protocol: int
    dialect: str


def _compat_matrix() -> dict:
    text = resources.files("tablezoomer").joinpath("executor_compat.json").read_text(encoding="utf-8")
    return json.loads(text)


def discover_runner(runner_path: str | None = None) -> list[str]:
    """Resolve the runner command from explicit config or PATH search."""
    if runner_path:
        return runner_path.split()
    for name in RUNNER_SEARCH_NAMES:
        found = shutil.which(name)
        if found:
            return [found]
    raise RunnerUnavailableError(
        f"no runner configured and none of {RUNNER_SEARCH_NAMES} found on PATH"
    )


def _cap_stdout(text: str) -> str:
    if len(text) <= STDOUT_CAP:
        return text
    return text[:STDOUT_CAP] + TRUNCATION_MARKER


def _kill_tree(proc: subprocess.Popen) -> None:
    try:
        os.killpg(os.getpgid(proc.pid), signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        pass


class ExecutorGateway:
    """Shareable front door to the runner; each execute() is independent."""

    def __init__(
        self,
        runner_cmd: list[str] | None = None,
        *,
        timeout: float = DEFAULT_TIMEOUT,
        workdir: str | Path | None = None,
    ) -> None:
        self.runner_cmd = runner_cmd
        self.timeout = timeout
        self.workdir = Path(workdir) if workdir else None

    def _command(self) -> list[str]:
        if self.runner_cmd:
            return list(self.runner_cmd)
        return discover_runner()

    def _run_job(self, source: str, table_path: str, timeout: float, workdir: Path | None) -> ExecutionResult:
        command = self._command()
        base = workdir or self.workdir
        if base is not None:
            Path(base).mkdir(parents=True, exist_ok=True)
        tmpdir = tempfile.mkdtemp(prefix="tz-exec-", dir=base)
        job = json.dumps({"source": source, "table_path": table_path}, ensure_ascii=False)
        started = time.monotonic()
        try:
            try:
                proc = subprocess.Popen(
                    command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    stderr=subprocess.PIPE,
                    cwd=tmpdir,
                    text=True,
                    start_new_session=True,
                )
            except OSError as exc:
                raise RunnerUnavailableError(f"cannot spawn runner {command}: {exc}")
            try:
                out, err = proc.communicate(job, timeout=timeout)
            except subprocess.TimeoutExpired:
                _kill_tree(proc)
                try:
                    out, err = proc.communicate(timeout=KILL_GRACE)
                except subprocess.TimeoutExpired:  # pragma: no cover - SIGKILL always lands
                    out, err = "", ""
                wall = time.monotonic() - started
                return ExecutionResult(
                    status="timeout",
                    stdout=_cap_stdout(out or ""),
                    error_trace=f"TimeoutError: execution exceeded {timeout}s and was killed",
                    wall_time=wall,
                    exit_code=proc.returncode if proc.returncode is not None else -9,
                )
            wall = time.monotonic() - started
            try:
                result = json.loads(out)
                status = result["status"]
                stdout_text = result["stdout"]
                error_trace = result["error_trace"]
                exit_code = int(result["exit_code"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                raise RunnerUnavailableError(
                    f"runner protocol violation: bad result object "
                    f"(runner exit {proc.returncode}, stderr: {err.strip()[:500]})"
                )
            if status == "ok" and (exit_code != 0 or error_trace):
                raise RunnerUnavailableError(
                    "runner protocol violation: status=ok with nonzero exit or error trace"
                )
            return ExecutionResult(
                status=status,
                stdout=_cap_stdout(stdout_text),
                error_trace=error_trace,
                wall_time=wall,
                exit_code=exit_code,
            )
        finally:
            shutil.rmtree(tmpdir, ignore_errors=True)

    def execute(
        self,
        program: GeneratedProgram,
        timeout: float | None = None,
        workdir: str | Path | None = None,
    ) -> ExecutionResult:
        """Run one program in a fresh process and fresh temp directory.

        The only file the program may touch is its table; the gateway
        snapshots the table before the run and flags any modification as a
        sandbox violation.
        """
        timeout = self.timeout if timeout is None else timeout
        table = Path(program.table_path) if program.table_path else None
        snapshot = None
        if table is not None and table.is_file():
            stat = table.stat()
            snapshot = (stat.st_mtime_ns, stat.st_size)
        result = self._run_job(program.source, program.table_path, timeout, Path(workdir) if workdir else None)
        if snapshot is not None and table.is_file():
            stat = table.stat()
            if (stat.st_mtime_ns, stat.st_size) != snapshot:
                raise SandboxViolationError(f"runner modified the source table {table}")
        elif snapshot is not None and not table.is_file():
            raise SandboxViolationError(f"runner deleted the source table {table}")
        return result

    def health_check(self) -> RunnerInfo:
        """Version handshake plus a no-op job round trip."""
        command = self._command()
        try:
            proc = subprocess.run(
                command + ["--version"],
                capture_output=True,
                text=True,
                timeout=30,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise RunnerUnavailableError(f"runner version handshake failed: {exc}")
        if proc.returncode != 0:
            raise RunnerUnavailableError(f"runner --version exited {proc.returncode}: {proc.stderr[:200]}")
        try:
            meta = json.loads(proc.stdout)
            info = RunnerInfo(
                name=str(meta["name"]),
                version=str(meta["version"]),
                protocol=int(meta["protocol"]),
                dialect=str(meta["dialect"]),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            raise RunnerUnavailableError(f"unparseable runner version report: {proc.stdout[:200]!r}")
        compat = _compat_matrix()
        if not compat["min_protocol"] <= info.protocol <= compat["max_protocol"]:
            raise RunnerUnavailableError(
                f"runner speaks protocol {info.protocol}; this gateway requires "
                f"{compat['min_protocol']}..{compat['max_protocol']}"
            )
        probe = self._run_job("", "", timeout=30, workdir=None)
        if probe.status != "ok":
            raise RunnerUnavailableError(f"no-op job failed: {probe.error_trace[:200]}")
        return info
