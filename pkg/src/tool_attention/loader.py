"""LazySchemaLoader: on-demand full-definition fetching behind an LRU cache."""

from __future__ import annotations

import json
import socket
import threading
from collections import OrderedDict
from pathlib import Path
from typing import Any, Callable

from .errors import FetchError, MissingSchemaError

Fetcher = Callable[[str], dict]


class _InFlight:
    __slots__ = ("done", "value", "error")

    def __init__(self) -> None:
        self.done = threading.Event()
        self.value: dict | None = None
        self.error: BaseException | None = None


class SchemaCache:
    """LRU cache keyed by tool id; concurrent misses on one id share a single fetch.

    Failed fetches are never cached.
    """

    def __init__(self, fetcher: Fetcher, capacity: int = 256) -> None:
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self.fetcher = fetcher
        self.hit_count = 0
        self.miss_count = 0
        self._entries: OrderedDict[str, dict] = OrderedDict()
        self._inflight: dict[str, _InFlight] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, tool_id: object) -> bool:
        return tool_id in self._entries

    def keys(self) -> list[str]:
        """Cached ids, least recently used first."""
        with self._lock:
            return list(self._entries)

    def get(self, tool_id: str) -> dict:
        with self._lock:
            if tool_id in self._entries:
                self._entries.move_to_end(tool_id)
                self.hit_count += 1
                return self._entries[tool_id]
            pending = self._inflight.get(tool_id)
            owner = pending is None
            if owner:
                pending = self._inflight[tool_id] = _InFlight()
                self.miss_count += 1
            else:
                self.hit_count += 1

        if not owner:
            pending.done.wait()
            if pending.error is not None:
                raise pending.error
            return pending.value

        try:
            doc = self.fetcher(tool_id)
        except BaseException as exc:
            pending.error = exc
            with self._lock:
                del self._inflight[tool_id]
            pending.done.set()
            raise
        with self._lock:
            self._entries[tool_id] = doc
            self._entries.move_to_end(tool_id)
            while len(self._entries) > self.capacity:
                self._entries.popitem(last=False)
            del self._inflight[tool_id]
        pending.value = doc
        pending.done.set()
        return doc

    def invalidate(self, tool_id: str | None = None) -> None:
        """Drop one id, or everything when ``tool_id`` is None."""
        with self._lock:
            if tool_id is None:
                self._entries.clear()
            else:
                self._entries.pop(tool_id, None)

    @property
    def hit_rate(self) -> float:
        total = self.hit_count + self.miss_count
        return self.hit_count / total if total else 0.0


LazySchemaLoader = SchemaCache


def disk_fetcher(directory: str | Path) -> Fetcher:
    root = Path(directory)

    def fetch(tool_id: str) -> dict:
        path = root / f"{tool_id}.json"
        try:
            text = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise MissingSchemaError(tool_id) from None
        except OSError as exc:
            raise FetchError(f"cannot read {path}: {exc}") from exc
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise FetchError(f"corrupt schema file {path}: {exc}") from exc

    return fetch


def mcp_entry_to_definition(entry: dict[str, Any]) -> dict[str, Any]:
    """Map an MCP ``tools/list`` entry onto the registry document shape."""
    meta = entry.get("_meta") or {}
    return {
        "id": entry["name"],
        "name": entry.get("title") or entry["name"],
        "desc": entry.get("description", ""),
        "schema": entry.get("inputSchema") or {"type": "object", "properties": {}},
        "output": meta.get("output", ""),
        "server": meta.get("server", ""),
    }


class RemoteFetcher:
    """Fetch definitions from a remote MCP server's ``tools/list`` over line-delimited TCP.

    The first call pulls the whole listing and keeps it for the session.
    """

    def __init__(self, host: str, port: int, timeout: float = 5.0, params: dict | None = None) -> None:
        self.host = host
        self.port = port
        self.timeout = timeout
        self.params = params or {}
        self._listing: dict[str, dict] | None = None
        self._lock = threading.Lock()

    def _rpc(self, method: str, params: dict) -> Any:
        request = {"jsonrpc": "2.0", "id": 1, "method": method, "params": params}
        try:
            with socket.create_connection((self.host, self.port), timeout=self.timeout) as sock:
                sock.sendall((json.dumps(request) + "\n").encode("utf-8"))
                with sock.makefile("r", encoding="utf-8") as reader:
                    line = reader.readline()
        except OSError as exc:
            raise FetchError(f"cannot reach {self.host}:{self.port}: {exc}") from exc
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FetchError(f"malformed reply from {self.host}:{self.port}: {line!r}") from exc
        if "error" in reply:
            raise FetchError(f"{method} failed: {reply['error']}")
        return reply.get("result")

    def listing(self) -> dict[str, dict]:
        with self._lock:
            if self._listing is None:
                result = self._rpc("tools/list", self.params)
                try:
                    tools = result["tools"]
                    self._listing = {t["name"]: mcp_entry_to_definition(t) for t in tools if "inputSchema" in t}
                except (KeyError, TypeError) as exc:
                    raise FetchError(f"unexpected tools/list shape: {exc}") from exc
            return self._listing

    def __call__(self, tool_id: str) -> dict:
        doc = self.listing().get(tool_id)
        if doc is None:
            raise MissingSchemaError(tool_id)
        return doc


def remote_fetcher(endpoint: str | tuple[str, int], timeout: float = 5.0) -> RemoteFetcher:
    if isinstance(endpoint, str):
        host, _, port = endpoint.rpartition(":")
        endpoint = (host or "127.0.0.1", int(port))
    return RemoteFetcher(endpoint[0], endpoint[1], timeout=timeout)
