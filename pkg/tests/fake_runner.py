"""Protocol-faithful fake runner for gateway tests.

Speaks runner protocol v1: one JSON job on stdin, one JSON result on stdout,
one job per process; ``--version`` prints the metadata object. Unlike the
real runner it pre-imports nothing, so tests stay fast; scripted programs
read their tables with the csv module.
"""

import io
import json
import os
import sys
import traceback
from contextlib import redirect_stdout


def main() -> int:
    if "--version" in sys.argv:
        print(json.dumps({
            "name": "fake-runner",
            "version": "0.9.0",
            "protocol": int(os.environ.get("FAKE_RUNNER_PROTOCOL", "1")),
            "dialect": "python",
        }))
        return 0
    try:
        job = json.loads(sys.stdin.read())
        source = job["source"]
    except (json.JSONDecodeError, KeyError) as exc:
        print(f"fake-runner: bad job: {exc}", file=sys.stderr)
        return 2
    namespace = {"__name__": "__main__"}
    buffer = io.StringIO()
    try:
        with redirect_stdout(buffer):
            exec(compile(source, "<generated>", "exec"), namespace)
        result = {"status": "ok", "stdout": buffer.getvalue(), "error_trace": "", "exit_code": 0}
    except BaseException:
        result = {
            "status": "error",
            "stdout": buffer.getvalue(),
            "error_trace": traceback.format_exc(),
            "exit_code": 1,
        }
    print(json.dumps(result, ensure_ascii=False))
    return 0


if __name__ == "__main__":
    sys.exit(main())
