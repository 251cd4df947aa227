"""Seeded synthetic tasks: queries written from the bound tools' summary vocabulary."""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from ..catalog import Catalog, ToolSummary
from ..catalog.types import SUMMARY_SEPARATOR
from ..catalog.vocab import QUERY_OPENERS, QUERY_TAILS, VERB_SYNONYMS
from ..state import AgentState, Precondition, apply_patch

HORIZONS = ("single", "multi", "long")
HORIZON_WEIGHTS = (0.4, 0.4, 0.2)
LONG_TURNS = (15, 40)

# Sentence scaffolding that carries no intent.
_FILLER = frozenset(
    """a an the and or of to in on by for with from into under across you your can
    when which what this that its it is be already know mean user asks change given
    including newest first id filtered access allowed connected""".split()
)


@dataclass(frozen=True)
class Task:
    id: str
    queries: tuple[str, ...]
    turn_tools: tuple[str, ...]  # the tool each turn is after (drives the simulated call)
    ground_truth_tools: frozenset[str]
    horizon: str
    initial_state: AgentState = field(default_factory=AgentState)

    def __post_init__(self) -> None:
        if not self.ground_truth_tools:
            raise ValueError("a task needs at least one ground-truth tool")
        if len(self.queries) != len(self.turn_tools) or not self.queries:
            raise ValueError("one query per turn is required")

    @property
    def query(self) -> str:
        return self.queries[0]

    @property
    def turns(self) -> int:
        return len(self.queries)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "horizon": self.horizon,
            "queries": list(self.queries),
            "turn_tools": list(self.turn_tools),
            "ground_truth_tools": sorted(self.ground_truth_tools),
            "initial_state": self.initial_state.to_dict(),
        }


_QUALIFIER_CLAUSE = re.compile(r"(?:filtered by|with the given|including its) (.+?)(?:,? (?:in|on|under|across|from|for|to|at|when)\b|\.|$)")


def _split_summary(text: str) -> tuple[list[str], list[str]]:
    """Name words, and the qualifier words from the sentence's field list."""
    name, _, sentence = text.partition(f" {SUMMARY_SEPARATOR} ")
    clause = _QUALIFIER_CLAUSE.search(sentence)
    source = clause.group(1) if clause else sentence
    words = re.findall(r"[a-z0-9]+", source.lower())
    return name.split(), [w for w in words if w not in _FILLER and len(w) > 2]


def compose_query(summary: ToolSummary, rng: random.Random) -> str:
    """Paraphrase a tool's summary into a user request: synonym verb, name words, a qualifier, noise."""
    name, content = _split_summary(summary.text)
    if not name:
        name = content[:3]
    domain, verb, rest = (name[0], name[1], name[2:]) if len(name) >= 3 else ("", name[0], name[1:])
    words: list[str] = []
    opener = rng.choice(QUERY_OPENERS)
    if opener:
        words.append(opener)
    words.append(rng.choice(VERB_SYNONYMS.get(verb, [verb])))
    if domain and rng.random() < 0.7:
        words.append(domain)
    words.extend(rest)
    extras = [w for w in content if w not in name]
    if extras:
        words.extend(rng.sample(extras, k=min(len(extras), rng.randint(0, 2))))
    tail = rng.choice(QUERY_TAILS)
    if tail:
        words.append(tail)
    return " ".join(words)


def _grants(
    preconds: Sequence[Precondition], catalog_ids: Sequence[str], rng: random.Random
) -> dict[str, list]:
    patch: dict[str, list] = {"auth_scopes": [], "milestones": [], "prior_tool_calls": []}
    for p in preconds:
        if p.kind == "requires_auth":
            patch["auth_scopes"].append(p.arg)
        elif p.kind == "milestone_reached":
            patch["milestones"].append(p.arg)
        elif p.kind == "has_prior_tool_output":
            matches = [i for i in catalog_ids if i.startswith(p.arg)]
            patch["prior_tool_calls"].append([rng.choice(matches) if matches else p.arg + "context", True])
    return patch


def generate_tasks(catalog: Catalog, n: int, seed: int) -> list[Task]:
    """n tasks with a 40/40/20 single/multi/long horizon mix; ground truth is the bound tool set."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(seed)
    summaries = catalog.ordered_summaries()
    ids = [s.tool_id for s in summaries]
    by_id = {s.tool_id: s for s in summaries}
    write_scopes = sorted(
        {p.arg for pres in catalog.preconditions.values() for p in pres if p.kind == "requires_auth"}
    )

    tasks = []
    for i in range(n):
        horizon = rng.choices(HORIZONS, HORIZON_WEIGHTS)[0]
        if horizon == "single":
            bound = [rng.choice(ids)]
            turns = 1
        else:
            bound = rng.sample(ids, rng.randint(2, min(4, len(ids))) if len(ids) > 1 else 1)
            turns = len(bound) + rng.randint(0, 2) if horizon == "multi" else rng.randint(*LONG_TURNS)
        turn_tools = tuple(bound[t % len(bound)] for t in range(turns))
        queries = tuple(compose_query(by_id[t], rng) for t in turn_tools)

        patch: dict[str, list] = {"auth_scopes": [], "milestones": [], "prior_tool_calls": []}
        for tool_id in bound:
            for key, values in _grants(catalog.preconditions.get(tool_id, ()), ids, rng).items():
                patch[key].extend(values)
        # Agents usually hold more scopes than the task strictly needs.
        if write_scopes and rng.random() < 0.5:
            patch["auth_scopes"].append(rng.choice(write_scopes))
        tasks.append(
            Task(
                id=f"task-{seed}-{i:04d}",
                queries=queries,
                turn_tools=turn_tools,
                ground_truth_tools=frozenset(bound),
                horizon=horizon,
                initial_state=apply_patch(AgentState(), patch),
            )
        )
    return tasks


def calibration_pairs(catalog: Catalog, n: int, seed: int) -> list[tuple[str, str]]:
    """(query, tool_id) pairs for the threshold sweep, one fresh paraphrase per pair."""
    rng = random.Random(seed)
    summaries = catalog.ordered_summaries()
    picks = [summaries[i % len(summaries)] for i in rng.sample(range(max(n, len(summaries))), n)]
    return [(compose_query(s, rng), s.tool_id) for s in picks]


def grant_all(catalog: Catalog) -> AgentState:
    """A state under which every precondition in the catalog holds."""
    rng = random.Random(0)
    patch: dict[str, list] = {"auth_scopes": [], "milestones": [], "prior_tool_calls": []}
    ids = catalog.ids
    for pres in catalog.preconditions.values():
        for key, values in _grants(pres, ids, rng).items():
            patch[key].extend(values)
    return apply_patch(AgentState(), patch)


def task_table(tasks: Sequence[Task]) -> Mapping[str, int]:
    counts = {h: 0 for h in HORIZONS}
    for t in tasks:
        counts[t.horizon] += 1
    return counts
