from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Iterable, Mapping

from ..state import Precondition

if TYPE_CHECKING:
    from ..tokens import TokenCounter


def schema_text(schema: Mapping[str, Any]) -> str:
    """Canonical serialization used both for prompts and for token counts."""
    return json.dumps(schema, sort_keys=True)


@dataclass(frozen=True)
class ToolDefinition:
    id: str
    name: str
    desc: str
    schema: dict
    output: str
    server: str

    def __post_init__(self) -> None:
        if not self.id or not self.name:
            raise ValueError("tool id and name must be non-empty")
        if not isinstance(self.schema, dict) or self.schema.get("type") != "object" or not isinstance(self.schema.get("properties"), dict):
            raise ValueError(f"tool {self.id!r}: schema must be an object schema with a properties map")

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.id, "name": self.name, "desc": self.desc, "schema": self.schema, "output": self.output, "server": self.server}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ToolDefinition":
        return cls(
            id=data["id"],
            name=data["name"],
            desc=data.get("desc", ""),
            schema=data["schema"],
            output=data.get("output", ""),
            server=data.get("server", ""),
        )

    def parts(self) -> tuple[str, str, str, str]:
        """The four serialized fields whose token counts make up the definition cost."""
        return (self.name, self.desc, schema_text(self.schema), self.output)


@dataclass(frozen=True)
class TokenBreakdown:
    name_tokens: int
    desc_tokens: int
    schema_tokens: int
    output_tokens: int

    @property
    def total(self) -> int:
        return self.name_tokens + self.desc_tokens + self.schema_tokens + self.output_tokens

    def to_dict(self) -> dict[str, int]:
        return {
            "name_tokens": self.name_tokens,
            "desc_tokens": self.desc_tokens,
            "schema_tokens": self.schema_tokens,
            "output_tokens": self.output_tokens,
            "total": self.total,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, int]) -> "TokenBreakdown":
        b = cls(data["name_tokens"], data["desc_tokens"], data["schema_tokens"], data["output_tokens"])
        if "total" in data and data["total"] != b.total:
            raise ValueError("token breakdown total does not match its parts")
        return b


def token_breakdown(tool: ToolDefinition | Mapping[str, Any], counter: "TokenCounter") -> TokenBreakdown:
    if not isinstance(tool, ToolDefinition):
        tool = ToolDefinition.from_dict(tool)
    name, desc, schema, output = tool.parts()
    return TokenBreakdown(counter(name), counter(desc), counter(schema), counter(output))


@dataclass(frozen=True)
class ToolSummary:
    tool_id: str
    text: str
    token_count: int

    def to_dict(self) -> dict[str, Any]:
        return {"tool_id": self.tool_id, "text": self.text, "token_count": self.token_count}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ToolSummary":
        return cls(data["tool_id"], data["text"], int(data["token_count"]))


@dataclass(frozen=True)
class ServerSpec:
    name: str
    tool_count: int
    avg_schema_tokens: int
    domain: str = ""

    def __post_init__(self) -> None:
        if self.tool_count < 1:
            raise ValueError("tool_count must be >= 1")
        if self.avg_schema_tokens < 20:
            raise ValueError("avg_schema_tokens must be >= 20")


TESTBED_SPECS: tuple[ServerSpec, ...] = (
    ServerSpec("GitHub", 30, 520, "repo, issue, PR operations"),
    ServerSpec("Filesystem", 10, 180, "read/write/search files"),
    ServerSpec("Database", 20, 410, "query, schema, write"),
    ServerSpec("Slack", 15, 290, "message, channel, search"),
    ServerSpec("Web", 10, 220, "search, fetch, extract"),
    ServerSpec("Jira", 35, 470, "issue CRUD, workflow"),
)

# Full-definition token total of the 120-tool testbed; the per-server averages above sum to 48,600 and are rescaled onto it.
TESTBED_TOTAL_TOKENS = 47_312


@dataclass
class Catalog:
    tools: list[ToolDefinition]
    summaries: dict[str, ToolSummary]
    seed: int
    counter_name: str
    preconditions: dict[str, tuple[Precondition, ...]] = field(default_factory=dict)
    breakdowns: dict[str, TokenBreakdown] = field(default_factory=dict)

    def __post_init__(self) -> None:
        ids = [t.id for t in self.tools]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate tool ids in catalog")
        if set(ids) != set(self.summaries):
            raise ValueError("summaries and tools must cover the same ids")
        self._by_id = {t.id: t for t in self.tools}

    def __len__(self) -> int:
        return len(self.tools)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Catalog):
            return NotImplemented
        return (
            self.tools == other.tools
            and self.summaries == other.summaries
            and self.seed == other.seed
            and self.counter_name == other.counter_name
            and self.preconditions == other.preconditions
            and self.breakdowns == other.breakdowns
        )

    @property
    def ids(self) -> list[str]:
        return [t.id for t in self.tools]

    def get(self, tool_id: str) -> ToolDefinition:
        return self._by_id[tool_id]

    def __contains__(self, tool_id: object) -> bool:
        return tool_id in self._by_id

    @property
    def servers(self) -> list[str]:
        return list(dict.fromkeys(t.server for t in self.tools))

    def ordered_summaries(self) -> list[ToolSummary]:
        return [self.summaries[t.id] for t in self.tools]

    def total_tokens(self) -> int:
        return sum(b.total for b in self.breakdowns.values())

    def extended(
        self,
        tools: Iterable[ToolDefinition],
        summaries: Iterable[ToolSummary],
        counter: "TokenCounter",
        preconditions: Mapping[str, tuple[Precondition, ...]] | None = None,
    ) -> "Catalog":
        """A new catalog with extra tools appended (the original is left untouched)."""
        tools = list(tools)
        summ = dict(self.summaries)
        summ.update({s.tool_id: s for s in summaries})
        pre = dict(self.preconditions)
        pre.update(preconditions or {})
        brk = dict(self.breakdowns)
        brk.update({t.id: token_breakdown(t, counter) for t in tools})
        return Catalog(self.tools + tools, summ, self.seed, self.counter_name, pre, brk)


_SENTENCE = re.compile(r"^(.*?[.!?])(?=\s|$)", re.S)
SUMMARY_SEPARATOR = "—"


def first_sentence(text: str) -> str:
    text = text.strip()
    m = _SENTENCE.match(text)
    return m.group(1).strip() if m else text


def summarize_tool(tool: ToolDefinition, max_tokens: int = 60, counter: "TokenCounter | None" = None) -> ToolSummary:
    """Name words plus the first sentence of the description, cut at word boundaries to fit."""
    if max_tokens < 8:
        raise ValueError("max_tokens must be >= 8")
    if counter is None:
        from ..tokens import heuristic_counter

        counter = heuristic_counter()
    name_words = tool.name.replace("_", " ").split()
    sentence = first_sentence(tool.desc)
    words = name_words + ([SUMMARY_SEPARATOR] + sentence.split() if sentence else [])
    while words:
        while words and words[-1] == SUMMARY_SEPARATOR:
            words.pop()
        text = " ".join(words)
        n = counter(text)
        if n <= max_tokens:
            return ToolSummary(tool.id, text, n)
        if len(words) == 1:
            break
        words.pop()
    # a single word that alone exceeds the budget: cut characters
    text = (name_words or [tool.id])[0]
    while len(text) > 1 and counter(text) > max_tokens:
        text = text[:-1]
    return ToolSummary(tool.id, text, counter(text))
