"""Methods under test: the four baselines and Tool Attention, each building a real prompt per turn."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from ..attention import (
    DEFAULT_SYSTEM_TEXT,
    SECTION_END,
    USER_HEADER,
    RenderedPrompt,
    ToolAttention,
    build_attention,
    render_history,
    render_schema_section,
)
from ..catalog import Catalog, ToolDefinition, schema_text
from ..embed import Encoder, TfidfHashedEncoder
from ..index import VectorStore
from ..router import RouterConfig
from ..state import AgentState
from ..tokens import TokenCounter

HISTORY_TAIL = 6


@dataclass
class TurnRecord:
    tokens: int  # tool tokens this turn counts against the budget
    visible: tuple[str, ...] | None  # ids whose full schema the model saw; None if not applicable
    prompt: RenderedPrompt
    phase1: int = 0
    phase2: int = 0


@dataclass(frozen=True)
class MethodUnderTest:
    """A named method plus its parameters; ``bind`` makes a runner for one catalog."""

    name: str
    kind: str
    params: tuple[tuple[str, Any], ...] = ()

    def param(self, key: str, default: Any = None) -> Any:
        return dict(self.params).get(key, default)

    def bind(self, catalog: Catalog, counter: TokenCounter, encoder: Encoder) -> "Runner":
        factory = _RUNNERS[self.kind]
        return factory(self, catalog, counter, encoder)


def full_schema() -> MethodUnderTest:
    return MethodUnderTest("B1_full_schema", "full_schema")


def static_pruning(subset: Sequence[ToolDefinition] | None = None, per_server: int = 5, seed: int = 42) -> MethodUnderTest:
    """A curated subset; by default a seeded stratified sample of ``per_server`` tools per server."""
    params: list[tuple[str, Any]] = [("per_server", per_server), ("seed", seed)]
    if subset is not None:
        params.append(("subset", tuple(subset)))
    return MethodUnderTest("B2_static_pruning", "static_pruning", tuple(params))


def simple_retrieval(k: int = 10) -> MethodUnderTest:
    return MethodUnderTest("B3_simple_retrieval", "simple_retrieval", (("k", k),))


def cli_lazy(prompt_tokens: int = 480) -> MethodUnderTest:
    return MethodUnderTest("B4_cli_lazy", "cli_lazy", (("prompt_tokens", prompt_tokens),))


def tool_attention(
    cfg: RouterConfig | None = None,
    name: str = "tool_attention",
    use_gate: bool = True,
    use_preconditions: bool = True,
    promote: bool = True,
    encoder: str = "builtin",
) -> MethodUnderTest:
    cfg = cfg or RouterConfig()
    return MethodUnderTest(
        name,
        "tool_attention",
        (
            ("threshold", cfg.threshold),
            ("top_k", cfg.top_k),
            ("use_gate", use_gate),
            ("use_preconditions", use_preconditions),
            ("promote", promote),
            ("encoder", encoder),
        ),
    )


def default_methods() -> list[MethodUnderTest]:
    return [full_schema(), static_pruning(), simple_retrieval(), cli_lazy(), tool_attention()]


def stratified_subset(catalog: Catalog, per_server: int = 5, seed: int = 42) -> list[ToolDefinition]:
    rng = random.Random(f"{seed}:static-pruning")
    out: list[ToolDefinition] = []
    for server in catalog.servers:
        tools = [t for t in catalog.tools if t.server == server]
        out.extend(sorted(rng.sample(tools, min(per_server, len(tools))), key=lambda t: t.id))
    return out


def _user_block(query: str) -> str:
    return f"{USER_HEADER}\n{query}\n{SECTION_END}\n"


class Runner:
    name: str
    retrieves = True

    def turn(self, query: str, state: AgentState, history: Sequence[str]) -> TurnRecord:
        raise NotImplementedError


class _FixedSetRunner(Runner):
    """Sends the same full definitions every turn, after the history (the eager layout)."""

    def __init__(self, name: str, docs: Sequence[ToolDefinition], catalog: Catalog, counter: TokenCounter) -> None:
        self.name = name
        self._ids = tuple(t.id for t in docs)
        self._section = render_schema_section([t.to_dict() for t in docs])
        self._tokens = sum(_tau(t, catalog, counter) for t in docs)

    def turn(self, query: str, state: AgentState, history: Sequence[str]) -> TurnRecord:
        prefix = DEFAULT_SYSTEM_TEXT + "\n\n" + render_history(history) + "\n"
        prompt = RenderedPrompt.build(prefix, self._section + "\n" + _user_block(query))
        return TurnRecord(self._tokens, self._ids, prompt)


def _tau(tool: ToolDefinition, catalog: Catalog, counter: TokenCounter) -> int:
    # Reuse the catalog's precomputed count only when it describes this exact definition.
    if tool.id in catalog and catalog.get(tool.id) == tool and catalog.counter_name == counter.name:
        b = catalog.breakdowns.get(tool.id)
        if b is not None:
            return b.total
    from ..catalog import token_breakdown

    return token_breakdown(tool, counter).total


def _full_schema(m: MethodUnderTest, catalog: Catalog, counter: TokenCounter, encoder: Encoder) -> Runner:
    return _FixedSetRunner(m.name, catalog.tools, catalog, counter)


def _static_pruning(m: MethodUnderTest, catalog: Catalog, counter: TokenCounter, encoder: Encoder) -> Runner:
    subset = m.param("subset")
    if subset is None:
        subset = stratified_subset(catalog, m.param("per_server", 5), m.param("seed", 42))
    return _FixedSetRunner(m.name, subset, catalog, counter)


def definition_text(tool: ToolDefinition) -> str:
    return f"{tool.name} {tool.desc} {schema_text(tool.schema)} {tool.output}"


class _RetrievalRunner(Runner):
    """Top-k by cosine over full-definition embeddings; no threshold, no state."""

    def __init__(self, m: MethodUnderTest, catalog: Catalog, counter: TokenCounter, encoder: Encoder) -> None:
        self.name = m.name
        self.k = m.param("k", 10)
        self.encoder = encoder
        self.store = VectorStore(encoder.dim)
        self.store.add_vectors([(t.id, encoder.encode(definition_text(t))) for t in catalog.tools])
        self.docs = {t.id: t for t in catalog.tools}
        self.tau = {t.id: _tau(t, catalog, counter) for t in catalog.tools}

    def turn(self, query: str, state: AgentState, history: Sequence[str]) -> TurnRecord:
        hits = [tool_id for tool_id, _ in self.store.search(self.encoder.encode(query), self.k)]
        prefix = DEFAULT_SYSTEM_TEXT + "\n\n" + render_history(history) + "\n"
        suffix = render_schema_section([self.docs[i].to_dict() for i in hits]) + "\n" + _user_block(query)
        return TurnRecord(sum(self.tau[i] for i in hits), tuple(hits), RenderedPrompt.build(prefix, suffix))


DISCOVERY_TEXT = (
    "Tools are not listed in this prompt. They are reachable through a command line program named "
    "`tools` that you can run with the shell tool. Run `tools servers` to see connected servers, "
    "`tools list SERVER` to see the commands a server offers, and `tools help SERVER COMMAND` to read "
    "the arguments of one command before calling it. Call a command with `tools call SERVER COMMAND "
    "--arg value` and pass JSON for structured arguments with `--json '{...}'`. Output is JSON on "
    "standard output; errors are JSON objects with an `error` field on standard error. Prefer reading "
    "help for a command once per task and reuse what you learned on later turns. Never guess argument "
    "names: if a call fails with an unknown argument, read the help again and retry with the names it "
    "shows. Long outputs are paged; pass `--cursor` with the value from `next_cursor` to continue. "
    "Commands that change state accept `--dry-run` to preview the effect without applying it, and you "
    "should use it when the user has not confirmed a destructive action. Authentication is handled by "
    "the program; if a command reports a missing scope, tell the user which scope is needed instead of "
    "retrying. Keep arguments minimal and quote values that contain spaces. When several commands could "
    "answer a request, list the server's commands first and pick the narrowest one. Report the command "
    "you ran and summarize its JSON result for the user rather than pasting it verbatim. If `tools "
    "servers` shows no server that fits the request, say so plainly and do not invent commands. Rate "
    "limits are reported with a `retry_after` field in seconds; wait that long before trying again. "
    "Large files are returned as download handles; use `tools fetch HANDLE` to read them in chunks. "
    "Timestamps are ISO 8601 in UTC, identifiers are opaque strings, and boolean flags take no value. "
    "Combine results from several commands yourself; the program does not join data across servers. "
    "Cache nothing between sessions, because server catalogs can change while you are away."
)


def discovery_prompt(counter: TokenCounter, target: int = 480) -> str:
    """The fixed discovery text trimmed (or repeated then trimmed) to exactly ``target`` tokens when possible."""
    text = DISCOVERY_TEXT
    while counter(text) < target:
        text = text + " " + DISCOVERY_TEXT
    lo, hi = 0, len(text)
    while lo < hi:  # longest prefix within target
        mid = (lo + hi + 1) // 2
        if counter(text[:mid]) <= target:
            lo = mid
        else:
            hi = mid - 1
    return text[:lo]


class _CliRunner(Runner):
    retrieves = False

    def __init__(self, m: MethodUnderTest, catalog: Catalog, counter: TokenCounter, encoder: Encoder) -> None:
        self.name = m.name
        self.text = discovery_prompt(counter, m.param("prompt_tokens", 480))
        self.tokens = counter(self.text)
        self._prefix = DEFAULT_SYSTEM_TEXT + "\n\n## TOOL DISCOVERY\n" + self.text + "\n\n"

    def turn(self, query: str, state: AgentState, history: Sequence[str]) -> TurnRecord:
        return TurnRecord(self.tokens, None, RenderedPrompt.build(self._prefix, render_history(history) + "\n" + _user_block(query)))


class _AttentionRunner(Runner):
    def __init__(self, m: MethodUnderTest, catalog: Catalog, counter: TokenCounter, encoder: Encoder) -> None:
        self.name = m.name
        if m.param("encoder", "builtin") == "tfidf":
            encoder = TfidfHashedEncoder([s.text for s in catalog.ordered_summaries()], dim=encoder.dim)
        cfg = RouterConfig(
            threshold=m.param("threshold", 0.28) if m.param("use_gate", True) else -1.0,
            top_k=m.param("top_k", 10),
        )
        self.ta: ToolAttention = build_attention(catalog, encoder, counter, cfg=cfg)
        if not m.param("use_preconditions", True):
            self.ta.router.preconds = {}
        self.ta.promote = m.param("promote", True)
        self._warm_prefix: int | None = None

    def turn(self, query: str, state: AgentState, history: Sequence[str]) -> TurnRecord:
        result, prompt, _ = self.ta.before_model(query, state, history)
        # Warm cache: the pool was cached before the run; only a changed prefix costs again.
        delta = 0
        if self._warm_prefix is not None and prompt.prefix_hash != self._warm_prefix:
            delta = result.phase1_tokens
        self._warm_prefix = prompt.prefix_hash
        return TurnRecord(result.phase2_tokens + delta, tuple(result.active_ids), prompt, result.phase1_tokens, result.phase2_tokens)


_RUNNERS = {
    "full_schema": _full_schema,
    "static_pruning": _static_pruning,
    "simple_retrieval": _RetrievalRunner,
    "cli_lazy": _CliRunner,
    "tool_attention": _AttentionRunner,
}


def method_names(methods: Sequence[MethodUnderTest]) -> list[str]:
    names = [m.name for m in methods]
    if len(set(names)) != len(names):
        raise ValueError("method names must be unique")
    return names


def describe(m: MethodUnderTest) -> Mapping[str, Any]:
    return {k: v for k, v in m.params if k != "subset"}
