"""Objective evaluation through a long-lived child process.

The protocol is line-delimited JSON over the child's standard streams: one
request ``{"x": [..]}`` per line, one reply ``{"y": <number>}`` per line,
strictly in request order with a single request in flight. The child is
launched once per run and kept alive across evaluations, standing in for an
expensive simulator behind a thin wrapper script.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import threading

import numpy as np

from .exceptions import ObjectiveError


class ExternalObjective:
    """Callable objective backed by a child process."""

    def __init__(self, command, timeout: float = 3600.0):
        args = shlex.split(command) if isinstance(command, str) else list(command)
        if not args:
            raise ValueError("empty external command")
        self.timeout = timeout
        try:
            self._proc = subprocess.Popen(
                args,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ObjectiveError(f"could not launch {args[0]!r}: {exc}") from exc

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float).ravel()
        request = json.dumps({"x": x.tolist()}) + "\n"
        if self._proc.poll() is not None:
            raise ObjectiveError(
                f"external objective exited with code {self._proc.returncode}"
            )
        try:
            self._proc.stdin.write(request)
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ObjectiveError(f"external objective pipe broke: {exc}") from exc
        line = self._readline()
        if line == "":
            raise ObjectiveError(
                "external objective closed its output without replying"
            )
        try:
            reply = json.loads(line)
            y = reply["y"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ObjectiveError(f"malformed reply {line!r}") from exc
        if not isinstance(y, (int, float)) or isinstance(y, bool):
            raise ObjectiveError(f"reply 'y' is not a number: {line!r}")
        return float(y)

    def _readline(self) -> str:
        result: dict = {}

        def target():
            try:
                result["line"] = self._proc.stdout.readline()
            except Exception as exc:  # surfaced below
                result["error"] = exc

        reader = threading.Thread(target=target, daemon=True)
        reader.start()
        reader.join(self.timeout)
        if reader.is_alive():
            self.close()
            raise ObjectiveError(
                f"external objective timed out after {self.timeout:g} s"
            )
        if "error" in result:
            raise ObjectiveError(
                f"error reading external reply: {result['error']}"
            )
        return result.get("line", "")

    def close(self):
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()
        return False
