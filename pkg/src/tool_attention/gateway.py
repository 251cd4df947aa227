"""JSON-RPC 2.0 gateway that fronts a tool registry and applies Tool Attention per session.

Hosts see the whole summary pool on ``tools/list`` but a full definition
(``inputSchema``) only for the tools their session's last ``attention/route``
call promoted. ``attention/route`` is a protocol extension: standard MCP
``tools/list`` carries no query to route on.
"""

from __future__ import annotations

import json
import logging
import socketserver
import sys
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Callable, Mapping

from .attention import AttentionResult, ToolAttention, TurnEvent, after_model, build_attention
from .catalog import Catalog, load_registry
from .embed import Encoder, HashedNgramEncoder
from .loader import disk_fetcher
from .router import RouterConfig
from .state import AgentState, advance_turn, apply_patch, record_tool_result
from .tokens import TokenCounter, heuristic_counter

log = logging.getLogger(__name__)

PROTOCOL_VERSION = "2024-11-05"
SERVER_NAME = "tool-attention-gateway"
SERVER_VERSION = "0.1.0"
DEFAULT_IDLE_TIMEOUT = 30 * 60.0

PARSE_ERROR = -32700
INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602
INTERNAL_ERROR = -32603

Executor = Callable[[str, Mapping[str, Any]], Any]


def echo_executor(name: str, arguments: Mapping[str, Any]) -> dict[str, Any]:
    """Default executor: the gateway gates calls, it does not implement tools."""
    return {"tool": name, "arguments": dict(arguments)}


class RpcError(Exception):
    def __init__(self, code: int, message: str, data: Any = None) -> None:
        super().__init__(message)
        self.code = code
        self.message = message
        self.data = data

    def to_dict(self) -> dict[str, Any]:
        err: dict[str, Any] = {"code": self.code, "message": self.message}
        if self.data is not None:
            err["data"] = self.data
        return err


@dataclass
class Session:
    session_id: str
    agent_state: AgentState = field(default_factory=AgentState)
    last_result: AttentionResult | None = None
    created_at: float = field(default_factory=time.time)
    last_seen: float = 0.0
    turns: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def active_ids(self) -> list[str]:
        return self.last_result.active_ids if self.last_result is not None else []


def summary_entry(catalog: Catalog, tool_id: str) -> dict[str, Any]:
    tool = catalog.get(tool_id)
    return {
        "name": tool.id,
        "title": tool.name,
        "description": catalog.summaries[tool_id].text,
        "_meta": {"server": tool.server, "promoted": False},
    }


def full_entry(doc: Mapping[str, Any], summary: str | None = None) -> dict[str, Any]:
    meta: dict[str, Any] = {"server": doc.get("server", ""), "output": doc.get("output", ""), "promoted": True}
    if summary is not None:
        meta["summary"] = summary
    return {
        "name": doc["id"],
        "title": doc["name"],
        "description": doc.get("desc", ""),
        "inputSchema": doc["schema"],
        "_meta": meta,
    }


class Gateway:
    """Transport-independent request handler; one instance serves many sessions."""

    def __init__(
        self,
        attention: ToolAttention,
        executor: Executor = echo_executor,
        idle_timeout: float = DEFAULT_IDLE_TIMEOUT,
        gated: bool = True,
        clock: Callable[[], float] = time.monotonic,
    ) -> None:
        self.attention = attention
        self.catalog = attention.catalog
        self.executor = executor
        self.idle_timeout = idle_timeout
        self.gated = gated
        self.clock = clock
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._methods: dict[str, Callable[[dict], Any]] = {
            "initialize": self._initialize,
            "attention/route": self._route,
            "tools/list": self._tools_list,
            "tools/call": self._tools_call,
            "ping": lambda params: {},
        }

    @classmethod
    def from_registry(
        cls,
        registry: str | Path,
        cfg: RouterConfig | None = None,
        encoder: Encoder | None = None,
        counter: TokenCounter | None = None,
        event_sink: Callable[[TurnEvent], None] | None = None,
        **kwargs: Any,
    ) -> "Gateway":
        catalog = load_registry(registry)
        attention = build_attention(
            catalog,
            encoder or HashedNgramEncoder(),
            counter or heuristic_counter(),
            fetcher=disk_fetcher(registry),
            cfg=cfg,
            event_sink=event_sink,
        )
        return cls(attention, **kwargs)

    # -- sessions ------------------------------------------------------------

    def _expire(self, now: float) -> None:
        stale = [sid for sid, s in self._sessions.items() if now - s.last_seen > self.idle_timeout]
        for sid in stale:
            del self._sessions[sid]
            log.info("session %s expired after %.0fs idle", sid, self.idle_timeout)

    def _session(self, params: dict) -> Session:
        sid = params.get("session_id")
        if not isinstance(sid, str):
            raise RpcError(INVALID_PARAMS, "session_id (string) is required")
        now = self.clock()
        with self._lock:
            self._expire(now)
            session = self._sessions.get(sid)
            if session is None:
                raise RpcError(INVALID_PARAMS, f"unknown session {sid!r}")
            session.last_seen = now
        return session

    @property
    def session_count(self) -> int:
        with self._lock:
            return len(self._sessions)

    # -- methods -------------------------------------------------------------

    def _initialize(self, params: dict) -> dict[str, Any]:
        now = self.clock()
        with self._lock:
            self._expire(now)
            sid = params.get("session_id")
            if isinstance(sid, str) and sid in self._sessions:
                self._sessions[sid].last_seen = now
            else:
                sid = uuid.uuid4().hex
                self._sessions[sid] = Session(sid, last_seen=now)
        return {
            "protocolVersion": PROTOCOL_VERSION,
            "serverInfo": {"name": SERVER_NAME, "version": SERVER_VERSION},
            "capabilities": {"tools": {"listChanged": False}, "experimental": {"attention/route": {}}},
            "session_id": sid,
            "stats": {
                "tools": len(self.catalog),
                "servers": len(self.catalog.servers),
                "summary_tokens": self.attention.phase1_tokens,
            },
        }

    def _route(self, params: dict) -> dict[str, Any]:
        session = self._session(params)
        query = params.get("query")
        if not isinstance(query, str):
            raise RpcError(INVALID_PARAMS, "query (string) is required")
        patch = params.get("state_patch") or {}
        if not isinstance(patch, Mapping):
            raise RpcError(INVALID_PARAMS, "state_patch must be an object")
        with session.lock:
            try:
                session.agent_state = apply_patch(session.agent_state, patch)
            except (KeyError, TypeError, ValueError) as exc:
                raise RpcError(INVALID_PARAMS, f"bad state_patch: {exc}") from exc
            session.turns += 1
            result, _, _ = self.attention.before_model(
                query, session.agent_state, turn_id=f"{session.session_id}:{session.turns}"
            )
            session.last_result = result
            session.agent_state = advance_turn(session.agent_state)
        return {
            "active": [{"tool_id": r.tool_id, "score": r.score} for r in result.active],
            "phase1_tokens": result.phase1_tokens,
            "phase2_tokens": result.phase2_tokens,
        }

    def _tools_list(self, params: dict) -> dict[str, Any]:
        if not self.gated:
            return {"tools": [full_entry(t.to_dict(), self.catalog.summaries[t.id].text) for t in self.catalog.tools]}
        session = self._session(params)
        with session.lock:
            result = session.last_result
            promoted = dict(result.promoted_schemas) if result is not None else {}
        tools = []
        for summary in self.catalog.ordered_summaries():
            doc = promoted.get(summary.tool_id)
            tools.append(full_entry(doc, summary.text) if doc is not None else summary_entry(self.catalog, summary.tool_id))
        return {"tools": tools}

    def _tools_call(self, params: dict) -> dict[str, Any]:
        session = self._session(params)
        name = params.get("name")
        if not isinstance(name, str):
            raise RpcError(INVALID_PARAMS, "name (string) is required")
        arguments = params.get("arguments") or {}
        if not isinstance(arguments, Mapping):
            raise RpcError(INVALID_PARAMS, "arguments must be an object")
        with session.lock:
            rejection = after_model(session.active_ids, name)
            if rejection is not None:
                return rejection
            try:
                output = self.executor(name, arguments)
                ok = True
            except Exception as exc:  # executor failures are tool results, not protocol errors
                output = {"error": str(exc)}
                ok = False
            session.agent_state = record_tool_result(session.agent_state, name, ok)
        return {
            "content": [{"type": "text", "text": json.dumps(output, sort_keys=True, default=str)}],
            "structuredContent": output,
            "isError": not ok,
        }

    # -- framing -------------------------------------------------------------

    def handle(self, request: Any) -> dict[str, Any] | list | None:
        """One decoded request (or batch) in, one response (or None for notifications) out."""
        if isinstance(request, list):
            if not request:
                return _error(None, RpcError(INVALID_REQUEST, "empty batch"))
            replies = [r for r in (self.handle(item) for item in request) if r is not None]
            return replies or None
        if not isinstance(request, dict) or request.get("jsonrpc") != "2.0" or not isinstance(request.get("method"), str):
            rid = request.get("id") if isinstance(request, dict) else None
            return _error(rid if _valid_id(rid) else None, RpcError(INVALID_REQUEST, "not a JSON-RPC 2.0 request"))
        is_notification = "id" not in request
        rid = request.get("id")
        if not _valid_id(rid):
            return _error(None, RpcError(INVALID_REQUEST, "id must be a string, number or null"))
        params = request.get("params", {})
        if params is None:
            params = {}
        try:
            method = self._methods.get(request["method"])
            if method is None:
                if request["method"].startswith("notifications/"):
                    return None
                raise RpcError(METHOD_NOT_FOUND, f"method not found: {request['method']}")
            if not isinstance(params, dict):
                raise RpcError(INVALID_PARAMS, "params must be an object")
            result = method(params)
        except RpcError as exc:
            return None if is_notification else _error(rid, exc)
        except Exception as exc:
            log.exception("internal error in %s", request["method"])
            return None if is_notification else _error(rid, RpcError(INTERNAL_ERROR, str(exc)))
        return None if is_notification else {"jsonrpc": "2.0", "id": rid, "result": result}

    def handle_line(self, line: str) -> str | None:
        line = line.strip()
        if not line:
            return None
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            reply: Any = _error(None, RpcError(PARSE_ERROR, f"parse error: {exc.msg}"))
        else:
            reply = self.handle(request)
        return None if reply is None else json.dumps(reply, separators=(",", ":"))


def _valid_id(rid: Any) -> bool:
    return rid is None or (isinstance(rid, (str, int, float)) and not isinstance(rid, bool))


def _error(rid: Any, exc: RpcError) -> dict[str, Any]:
    return {"jsonrpc": "2.0", "id": rid, "error": exc.to_dict()}


# -- transports --------------------------------------------------------------

def serve_stdio(gateway: Gateway, stdin: IO[str] | None = None, stdout: IO[str] | None = None) -> None:
    """Newline-delimited JSON-RPC over a pair of text streams until EOF."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        reply = gateway.handle_line(line)
        if reply is not None:
            stdout.write(reply + "\n")
            stdout.flush()


class _LineHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        gateway: Gateway = self.server.gateway  # type: ignore[attr-defined]
        for raw in self.rfile:
            reply = gateway.handle_line(raw.decode("utf-8", errors="replace"))
            if reply is not None:
                self.wfile.write((reply + "\n").encode("utf-8"))
                self.wfile.flush()


class TcpGatewayServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, gateway: Gateway, host: str = "127.0.0.1", port: int = 0) -> None:
        super().__init__((host, port), _LineHandler)
        self.gateway = gateway

    @property
    def address(self) -> tuple[str, int]:
        host, port = self.server_address[:2]
        return str(host), int(port)

    def start(self) -> threading.Thread:
        """Serve on a background thread (for tests and in-process loopback)."""
        thread = threading.Thread(target=self.serve_forever, name="gateway-tcp", daemon=True)
        thread.start()
        return thread
