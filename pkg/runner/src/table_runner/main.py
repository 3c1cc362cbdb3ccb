"""Runner protocol v1 endpoint.

Reads exactly one job object ``{"source": str, "table_path": str}`` from
stdin, executes the source in a fresh namespace with the data-frame toolkit
pre-imported, and writes exactly one result object ``{"status", "stdout",
"error_trace", "exit_code"}`` to stdout, then exits. Nothing survives the
process, which is the whole point: callers get reset-environment semantics
for free by spawning a new runner per job.

Errors inside the program are reported inside the result object, never as a
crashed runner; only an unparseable job exits nonzero (diagnostic on
stderr). ``table-runner --version`` prints the version/protocol handshake.
"""

from __future__ import annotations

import io
import json
import sys
import traceback
from contextlib import redirect_stdout

from . import DIALECT, PROTOCOL_VERSION, __version__


def run_job(job: dict) -> dict:
    """Execute one job and build its result object."""
    source = job["source"]
    # pre-import the data-frame toolkit so programs that skip their own
    # imports still run; a redundant import in the source is harmless
    import pandas as pd

    namespace: dict = {"__name__": "__main__", "pd": pd, "pandas": pd}
    buffer = io.StringIO()
    try:
        with redirect_stdout(buffer):
            exec(compile(source, "<generated-program>", "exec"), namespace)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else (0 if exc.code is None else 1)
        if code == 0:
            return {"status": "ok", "stdout": buffer.getvalue(), "error_trace": "", "exit_code": 0}
        return {
            "status": "error",
            "stdout": buffer.getvalue(),
            "error_trace": f"SystemExit: {exc.code!r}",
            "exit_code": code,
        }
    except BaseException:
        return {
            "status": "error",
            "stdout": buffer.getvalue(),
            "error_trace": traceback.format_exc(),
            "exit_code": 1,
        }
    return {"status": "ok", "stdout": buffer.getvalue(), "error_trace": "", "exit_code": 0}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if "--version" in argv:
        print(json.dumps({
            "name": "table-runner",
            "version": __version__,
            "protocol": PROTOCOL_VERSION,
            "dialect": DIALECT,
        }))
        return 0
    raw = sys.stdin.read()
    try:
        job = json.loads(raw)
        if not isinstance(job, dict) or "source" not in job or "table_path" not in job:
            raise ValueError("job must be an object with source and table_path")
    except (json.JSONDecodeError, ValueError) as exc:
        print(f"table-runner: unparseable job: {exc}", file=sys.stderr)
        return 2
    result = run_job(job)
    print(json.dumps(result, ensure_ascii=False))
    return 0


if __name__ == "__main__":
    sys.exit(main())
