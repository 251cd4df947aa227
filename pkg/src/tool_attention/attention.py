"""ToolAttention orchestrator: two-phase prompt assembly, rejection gate, accounting, events."""

from __future__ import annotations

import json
import logging
import statistics
import sys
import threading
import time
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import IO, Any, Callable, Iterable, Mapping, Sequence

from .catalog import Catalog, ToolDefinition, schema_text, token_breakdown
from .errors import MissingSchemaError
from .index import VectorStore
from .loader import SchemaCache
from .router import IntentRouter, RoutingResult
from .state import AgentState
from .tokens import TokenCounter, content_hash

log = logging.getLogger(__name__)

SUMMARIES_HEADER = "## AVAILABLE TOOLS (summaries)"
SCHEMAS_HEADER = "## ACTIVE TOOL SCHEMAS"
HISTORY_HEADER = "## HISTORY"
USER_HEADER = "## USER"
TOOL_HEADER = "### tool: "
SECTION_END = "## END"

DEFAULT_SYSTEM_TEXT = (
    "You are an agent with access to external tools. The summaries below list every tool that exists; "
    "only tools whose full schema appears under ACTIVE TOOL SCHEMAS may be called this turn."
)


@dataclass
class AttentionResult:
    active: list[RoutingResult] = field(default_factory=list)
    summary_pool: dict[str, str] = field(default_factory=dict)
    promoted_schemas: dict[str, dict] = field(default_factory=dict)
    phase1_tokens: int = 0
    phase2_tokens: int = 0
    dropped: list[str] = field(default_factory=list)

    @property
    def total_tokens(self) -> int:
        return self.phase1_tokens + self.phase2_tokens

    @property
    def active_ids(self) -> list[str]:
        return [r.tool_id for r in self.active]

    def to_dict(self) -> dict[str, Any]:
        return {
            "active": [{"tool_id": r.tool_id, "score": r.score} for r in self.active],
            "promoted_schemas": self.promoted_schemas,
            "phase1_tokens": self.phase1_tokens,
            "phase2_tokens": self.phase2_tokens,
            "total_tokens": self.total_tokens,
            "summary_pool_size": len(self.summary_pool),
            "dropped": self.dropped,
        }


@dataclass(frozen=True)
class RenderedPrompt:
    stable_prefix: str
    volatile_suffix: str
    prefix_hash: int

    @classmethod
    def build(cls, stable_prefix: str, volatile_suffix: str) -> "RenderedPrompt":
        return cls(stable_prefix, volatile_suffix, content_hash(stable_prefix))

    @property
    def text(self) -> str:
        return self.stable_prefix + self.volatile_suffix


@dataclass
class TurnEvent:
    turn_id: str
    query_embedding_hash: str
    candidates: list[str]
    scores: list[float]
    gated_out_by_state: list[str]
    active_set: list[str]
    phase1_tokens: int
    phase2_tokens: int
    p50_latency_ms: float
    dropped_missing_schema: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        if not d["dropped_missing_schema"]:
            del d["dropped_missing_schema"]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False, separators=(",", ":"))


class JsonLinesSink:
    """Writes one JSON line per event to a stream (stderr by default) or a file path."""

    def __init__(self, target: str | IO[str] | None = None) -> None:
        self._own = isinstance(target, str)
        self._stream: IO[str] = open(target, "a", encoding="utf-8") if isinstance(target, str) else (target or sys.stderr)
        self._lock = threading.Lock()

    def __call__(self, event: TurnEvent) -> None:
        with self._lock:
            self._stream.write(event.to_json() + "\n")
            self._stream.flush()

    def close(self) -> None:
        if self._own:
            self._stream.close()


# -- rendering ---------------------------------------------------------------

def render_tool_block(doc: Mapping[str, Any]) -> str:
    return (
        f"{TOOL_HEADER}{doc['id']}\n"
        f"name: {json.dumps(doc['name'], ensure_ascii=False)}\n"
        f"description: {json.dumps(doc.get('desc', ''), ensure_ascii=False)}\n"
        f"input_schema: {schema_text(doc['schema'])}\n"
        f"output: {json.dumps(doc.get('output', ''), ensure_ascii=False)}\n"
    )


def render_summary_section(summaries: Iterable[str]) -> str:
    lines = [SUMMARIES_HEADER]
    lines += [f"- {s}" for s in summaries]
    return "\n".join(lines) + "\n"


def render_schema_section(docs: Iterable[Mapping[str, Any]]) -> str:
    return SCHEMAS_HEADER + "\n" + "".join(render_tool_block(d) for d in docs)


def render_history(history: Sequence[str]) -> str:
    return HISTORY_HEADER + "\n" + "".join(f"{h}\n" for h in history)


def render_two_phase(
    system_text: str,
    summaries: Sequence[str],
    promoted: Sequence[Mapping[str, Any]],
    history: Sequence[str],
    query: str,
) -> RenderedPrompt:
    """Summaries live in the cacheable prefix; promoted schemas sit right before the user turn."""
    prefix = system_text + "\n\n" + render_summary_section(summaries) + "\n"
    suffix = render_history(history) + "\n" + render_schema_section(promoted) + "\n" + f"{USER_HEADER}\n{query}\n{SECTION_END}\n"
    return RenderedPrompt.build(prefix, suffix)


def render_full_schema(
    system_text: str,
    docs: Sequence[Mapping[str, Any]],
    history: Sequence[str],
    query: str,
) -> RenderedPrompt:
    """Eager layout: every schema re-sent after a growing history, so the prefix never repeats."""
    prefix = system_text + "\n\n" + render_history(history) + "\n"
    suffix = render_schema_section(docs) + "\n" + f"{USER_HEADER}\n{query}\n{SECTION_END}\n"
    return RenderedPrompt.build(prefix, suffix)


def parse_sections(text: str) -> dict[str, Any]:
    """Recover summary texts and promoted tool parts from a rendered prompt."""
    summaries: list[str] = []
    tools: list[dict[str, Any]] = []
    section = None
    current: dict[str, Any] | None = None
    for line in text.split("\n"):
        if line.startswith("## "):
            section = line
            current = None
            continue
        if section == SUMMARIES_HEADER and line.startswith("- "):
            summaries.append(line[2:])
        elif section == SCHEMAS_HEADER:
            if line.startswith(TOOL_HEADER):
                current = {"id": line[len(TOOL_HEADER):]}
                tools.append(current)
            elif current is not None and ": " in line:
                key, _, value = line.partition(": ")
                if key == "input_schema":
                    current["schema_text"] = value
                elif key in ("name", "description", "output"):
                    current[key] = json.loads(value)
    return {"summaries": summaries, "tools": tools}


def recount(text: str, counter: TokenCounter) -> tuple[int, int]:
    """(phase1, phase2) token counts recomputed from rendered text alone."""
    parsed = parse_sections(text)
    phase1 = sum(counter(s) for s in parsed["summaries"])
    phase2 = sum(
        counter(t["name"]) + counter(t["description"]) + counter(t["schema_text"]) + counter(t["output"])
        for t in parsed["tools"]
    )
    return phase1, phase2


# -- orchestrator ------------------------------------------------------------

def after_model(active_ids: Sequence[str], requested_tool: str | None) -> dict[str, Any] | None:
    """Reject a tool call outside the active set with a structured error; None means pass-through."""
    if requested_tool is None or requested_tool in active_ids:
        return None
    return {"error": "tool_not_available", "available": list(active_ids)}


class ToolAttention:
    def __init__(
        self,
        catalog: Catalog,
        router: IntentRouter,
        loader: SchemaCache,
        counter: TokenCounter,
        system_text: str = DEFAULT_SYSTEM_TEXT,
        event_sink: Callable[[TurnEvent], None] | None = None,
        promote: bool = True,
    ) -> None:
        self.catalog = catalog
        self.router = router
        self.loader = loader
        self.count = counter
        self.system_text = system_text
        self.event_sink = event_sink
        self.promote = promote
        self._latencies: deque[float] = deque(maxlen=1024)
        self._lat_lock = threading.Lock()
        self._turns = 0
        self.refresh_pool()

    @property
    def store(self) -> VectorStore:
        return self.router.store

    def refresh_pool(self) -> None:
        """Recompute the always-resident summary pool (call after the catalog changes)."""
        self.summary_pool = {s.tool_id: s.text for s in self.catalog.ordered_summaries()}
        self.phase1_tokens = sum(self.count(text) for text in self.summary_pool.values())

    def schema_tokens(self, doc: Mapping[str, Any] | ToolDefinition) -> int:
        return token_breakdown(doc, self.count).total

    def before_model(
        self,
        query: str,
        state: AgentState | None = None,
        history: Sequence[str] = (),
        turn_id: str | None = None,
    ) -> tuple[AttentionResult, RenderedPrompt, TurnEvent]:
        started = time.perf_counter()
        state = state or AgentState()
        trace = self.router.trace(query, state)

        active: list[RoutingResult] = []
        promoted: dict[str, dict] = {}
        dropped: list[str] = []
        phase2 = 0
        for r in trace.active if self.promote else ():
            try:
                doc = self.loader.get(r.tool_id)
            except MissingSchemaError:
                log.warning("dropping %s from the active set: no schema in registry", r.tool_id)
                dropped.append(r.tool_id)
                continue
            active.append(r)
            promoted[r.tool_id] = doc
            phase2 += self.schema_tokens(doc)

        result = AttentionResult(
            active=active,
            summary_pool=self.summary_pool,
            promoted_schemas=promoted,
            phase1_tokens=self.phase1_tokens,
            phase2_tokens=phase2,
            dropped=dropped,
        )
        prompt = render_two_phase(
            self.system_text, list(self.summary_pool.values()), [promoted[r.tool_id] for r in active], history, query
        )

        elapsed_ms = (time.perf_counter() - started) * 1000.0
        with self._lat_lock:
            self._latencies.append(elapsed_ms)
            p50 = statistics.median(self._latencies)
            self._turns += 1
            seq = self._turns
        event = TurnEvent(
            turn_id=turn_id if turn_id is not None else str(seq),
            query_embedding_hash=f"{content_hash(trace.query_vector.values.tobytes().hex()):016x}",
            candidates=list(trace.candidates),
            scores=[round(s, 6) for s in trace.scores],
            gated_out_by_state=list(trace.gated_out_by_state),
            active_set=result.active_ids,
            phase1_tokens=result.phase1_tokens,
            phase2_tokens=result.phase2_tokens,
            p50_latency_ms=round(p50, 3),
            dropped_missing_schema=dropped,
        )
        if self.event_sink is not None:
            self.event_sink(event)
        return result, prompt, event

    @staticmethod
    def after_model(active_ids: Sequence[str], requested_tool: str | None) -> dict[str, Any] | None:
        return after_model(active_ids, requested_tool)


@dataclass(frozen=True)
class CacheReport:
    turns: int
    hits: int
    hit_rate: float
    cached_tokens: int
    uncached_tokens: int


def cache_hit_accounting(session: Sequence[RenderedPrompt], counter: TokenCounter | None = None) -> CacheReport:
    """A turn is a prefix hit when its stable prefix hashes the same as the previous turn's."""
    if len(session) < 2:
        raise ValueError("need at least two prompts")
    if counter is None:
        from .tokens import heuristic_counter

        counter = heuristic_counter()
    hits = cached = 0
    uncached = counter(session[0].stable_prefix) + counter(session[0].volatile_suffix)
    for prev, cur in zip(session, session[1:]):
        prefix_tokens = counter(cur.stable_prefix)
        if cur.prefix_hash == prev.prefix_hash:
            hits += 1
            cached += prefix_tokens
        else:
            uncached += prefix_tokens
        uncached += counter(cur.volatile_suffix)
    return CacheReport(len(session), hits, hits / (len(session) - 1), cached, uncached)


def build_attention(
    catalog: Catalog,
    encoder,
    counter: TokenCounter,
    fetcher=None,
    cfg=None,
    capacity: int = 256,
    event_sink: Callable[[TurnEvent], None] | None = None,
    augment=None,
) -> ToolAttention:
    """Wire store, router and loader for a catalog; the default fetcher reads the in-memory catalog."""
    store = VectorStore(encoder.dim)
    store.add_tools(catalog.ordered_summaries(), encoder)
    router = IntentRouter(store, encoder, catalog.preconditions, cfg, augment)
    if fetcher is None:
        fetcher = catalog_fetcher(catalog)
    loader = SchemaCache(fetcher, capacity=capacity)
    return ToolAttention(catalog, router, loader, counter, event_sink=event_sink)


def catalog_fetcher(catalog: Catalog) -> Callable[[str], dict]:
    def fetch(tool_id: str) -> dict:
        if tool_id not in catalog:
            raise MissingSchemaError(tool_id)
        return catalog.get(tool_id).to_dict()

    return fetch
