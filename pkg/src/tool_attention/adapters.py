"""Line-delimited JSON adapters for external tokenizers and embedders.

An adapter is a child process that reads one JSON object per line on stdin and
answers with one JSON object per line on stdout, e.g. ``{"text": "hi"}`` ->
``{"tokens": 1}`` or ``{"vector": [...]}``.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import threading
from typing import Any, Sequence


class AdapterError(RuntimeError):
    pass


class LineJsonProcess:
    """A lazily started child process speaking newline-delimited JSON."""

    def __init__(self, command: str | Sequence[str]) -> None:
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()

    def _ensure_started(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    encoding="utf-8",
                    bufsize=1,
                )
            except OSError as exc:
                raise AdapterError(f"cannot start adapter {self.command!r}: {exc}") from exc
        return self._proc

    def request(self, payload: dict[str, Any]) -> dict[str, Any]:
        with self._lock:
            proc = self._ensure_started()
            try:
                proc.stdin.write(json.dumps(payload) + "\n")
                proc.stdin.flush()
                line = proc.stdout.readline()
            except (OSError, ValueError) as exc:
                raise AdapterError(f"adapter I/O failed: {exc}") from exc
        if not line:
            raise AdapterError("adapter closed its output")
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise AdapterError(f"adapter sent malformed JSON: {line!r}") from exc
        if not isinstance(reply, dict):
            raise AdapterError(f"adapter reply is not an object: {reply!r}")
        return reply

    def close(self) -> None:
        with self._lock:
            if self._proc is not None:
                if self._proc.stdin:
                    self._proc.stdin.close()
                self._proc.terminate()
                self._proc.wait(timeout=5)
                self._proc = None

    def __call__(self, text: str) -> dict[str, Any]:
        return self.request({"text": text})
