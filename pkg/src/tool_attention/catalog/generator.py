"""Seeded synthetic tool catalogs calibrated to per-server token budgets."""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Sequence

from ..errors import CalibrationError
from ..state import Precondition
from ..tokens import TokenCounter
from . import vocab
from .types import (
    TESTBED_SPECS,
    TESTBED_TOTAL_TOKENS,
    Catalog,
    ServerSpec,
    ToolDefinition,
    summarize_tool,
    token_breakdown,
)

MAX_ITERATIONS = 10_000
SUMMARY_MAX_TOKENS = 60
TARGET_JITTER = 0.25

_NOTES = (
    "Results are paginated; pass the cursor returned by the previous page to continue.",
    "All timestamps are ISO 8601 strings in UTC.",
    "Unknown fields are ignored rather than rejected.",
    "Requests are rate limited per credential; back off on HTTP 429 responses.",
    "String comparisons are case-insensitive unless stated otherwise.",
    "Empty filters match every record the caller is allowed to see.",
    "Large responses are truncated to the requested page size.",
    "Identifiers are stable across calls and safe to cache.",
    "Errors are returned as structured objects with a code and a message.",
    "Deleted records are excluded unless explicitly requested.",
)


def _slug(text: str) -> str:
    return re.sub(r"[^0-9a-z]+", "_", text.lower()).strip("_")


def _human_list(items: Sequence[str]) -> str:
    items = list(items)
    if len(items) <= 1:
        return "".join(items)
    if len(items) == 2:
        return f"{items[0]} and {items[1]}"
    return ", ".join(items[:-1]) + f", and {items[-1]}"


def domain_for(spec: ServerSpec) -> vocab.Domain:
    for candidate in (spec.name, spec.domain):
        key = _slug(candidate)
        if key in vocab.DOMAINS:
            return vocab.DOMAINS[key]
    key = _slug(spec.name) or "tool"
    return vocab.Domain(
        key=key,
        label=spec.name,
        place=f"in {spec.name}",
        objects=(("record", "records"), ("item", "items"), ("entry", "entries"), ("report", "reports")),
        verbs=("search", "list", "get", "create", "update", "delete"),
        filters=("name", "status", "owner", "created after"),
    )


@dataclass
class _Plan:
    """Everything about one tool except its size, which calibration decides."""

    domain: vocab.Domain
    verb: vocab.Verb
    obj: tuple[str, str]
    filters: list[str]
    generic: list[str]
    outputs: list[str]
    server: str

    @property
    def tool_id(self) -> str:
        singular, plural = self.obj
        stem = f"{self.domain.key}_{self.verb.word}_{_slug(plural if self.verb.collection else singular)}"
        if self.verb.collection:
            stem += "_by_" + "_and_".join(_slug(f) for f in self.filters[:2])
        return stem


def _verb_phrase(verb: vocab.Verb) -> str:
    return {
        "comment": "Add a comment to",
        "describe": "Describe the structure of",
        "transition": "Move through the workflow",
        "count": "Count",
        "export": "Export",
        "watch": "Watch for changes on",
        "run": "Run",
    }.get(verb.word, verb.word.capitalize())


def _first_sentence(p: _Plan) -> str:
    singular, plural = p.obj
    label, place = p.domain.label, p.domain.place
    if p.verb.collection:
        return (
            f"{_verb_phrase(p.verb)} {label} {plural} filtered by {_human_list(p.filters[:3])} {place}, "
            f"newest first."
        )
    if not p.verb.write:
        return (
            f"{_verb_phrase(p.verb)} a {label} {singular} by id, including its {_human_list(p.outputs[:2])}, "
            f"{place}, when you already know which {singular} you mean."
        )
    return (
        f"{_verb_phrase(p.verb)} a {label} {singular} with the given {_human_list(p.filters[:2])} {place}, "
        f"when the user asks for this change."
    )


def _description(p: _Plan, level: int) -> str:
    parts = [_first_sentence(p)]
    if level < 2:
        singular, plural = p.obj
        what = plural if p.verb.collection else f"the affected {singular}"
        parts.append(f"Returns {what} with {_human_list(p.outputs[:3])}.")
    if level < 1 and p.verb.write:
        parts.append(f"Requires {p.domain.key}:write access.")
    return " ".join(parts)


def _output(p: _Plan, level: int) -> str:
    singular, plural = p.obj
    fields = ", ".join(p.outputs)
    if level >= 3:
        return f"JSON object with {p.outputs[0]}."
    if p.verb.collection:
        return f"JSON object: items (list of {singular} records with {fields}) and next_cursor (string or null)."
    return f"JSON object describing the {singular}: {fields}."


def _param(name: str, p: _Plan, role: str) -> dict:
    singular, plural = p.obj
    label = p.domain.label
    key = _slug(name)
    if name in vocab.ENUM_VALUES or key in vocab.ENUM_VALUES:
        enum = vocab.ENUM_VALUES.get(name) or vocab.ENUM_VALUES[key]
        schema: dict = {"type": "string", "enum": list(enum)}
    elif any(h in name for h in vocab.BOOLEAN_HINTS):
        schema = {"type": "boolean", "default": False}
    elif any(h in name for h in vocab.INTEGER_HINTS):
        schema = {"type": "integer", "minimum": 0}
    else:
        schema = {"type": "string"}
    if role == "common":
        schema["description"] = f"The {name} that scopes every {label} request; must be set on each call."
    elif role == "filter" and p.verb.collection:
        schema["description"] = f"Only return {plural} whose {name} matches this value."
    elif role == "filter":
        schema["description"] = f"The {name} to use for the {singular}."
    else:
        schema["description"] = f"Optional {name} setting applied to this {label} call."
    return schema


def _schema(p: _Plan, n_generic: int, level: int, pad: str) -> dict:
    props: dict = {}
    required: list[str] = []
    for c in p.domain.common:
        props[_slug(c)] = _param(c, p, "common")
        required.append(_slug(c))
    n_filters = len(p.filters) if level < 4 else max(0, len(p.filters) - (level - 3))
    for i, f in enumerate(p.filters[:n_filters]):
        props[_slug(f)] = _param(f, p, "filter")
        if not p.verb.collection and i < 2:
            required.append(_slug(f))
    if not p.verb.collection and level < 5:
        props["id"] = {"type": "string", "description": f"Identifier of the {p.obj[0]}."}
        if p.verb.word not in ("create",):
            required.append("id")
    for g in p.generic[:n_generic]:
        props.setdefault(_slug(g), _param(g, p, "generic"))
    if level >= 6:
        props, required = {}, []
    schema = {"type": "object", "properties": props}
    if required:
        schema["required"] = sorted(set(required) & set(props))
    if pad:
        schema["description"] = pad
    return schema


def _build(p: _Plan, n_generic: int, level: int, pad: str = "") -> ToolDefinition:
    return ToolDefinition(
        id=p.tool_id,
        name=p.tool_id,
        desc=_description(p, level),
        schema=_schema(p, n_generic, level, pad),
        output=_output(p, level),
        server=p.server,
    )


MAX_LEVEL = 6


class _Calibrator:
    def __init__(self, counter: TokenCounter, server: str) -> None:
        self.counter = counter
        self.server = server
        self.iterations = 0

    def tokens(self, tool: ToolDefinition) -> int:
        self.iterations += 1
        if self.iterations > MAX_ITERATIONS:
            raise CalibrationError(self.server, f"target unreachable within {MAX_ITERATIONS} pad/trim iterations")
        return token_breakdown(tool, self.counter).total

    def fit(self, plan: _Plan, target: int, pad_source: str) -> ToolDefinition:
        # trim: strip optional material until the bare tool fits under the target
        level = 0
        while True:
            base = _build(plan, 0, level)
            if self.tokens(base) <= target or level == MAX_LEVEL:
                break
            level += 1
        if self.tokens(base) > target:
            return base  # as small as it gets; caller carries the residual
        # grow with whole optional params while they fit
        n = 0
        while n < len(plan.generic) and self.tokens(_build(plan, n + 1, level)) <= target:
            n += 1
        best = _build(plan, n, level)
        if self.tokens(best) == target:
            return best
        # Pad the schema description. The pad key itself costs a few tokens, so
        # a tiny gap may only close after dropping an optional param first.
        for m in range(n, max(n - 3, -1), -1):
            padded = self._pad(plan, m, level, target, pad_source)
            if padded is not None and self.tokens(padded) == target:
                return padded
        return best

    def _pad(self, plan: _Plan, n: int, level: int, target: int, pad_source: str) -> ToolDefinition | None:
        """Longest pad prefix that keeps the tool within target, or None if no pad fits."""
        lo, hi = 0, len(pad_source)
        while self.tokens(_build(plan, n, level, pad_source[:hi])) <= target:
            pad_source = pad_source + " " + pad_source
            hi = len(pad_source)
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.tokens(_build(plan, n, level, pad_source[:mid].rstrip())) <= target:
                lo = mid
            else:
                hi = mid - 1
        if lo == 0:
            return None
        return _build(plan, n, level, pad_source[:lo].rstrip())


def _plans(spec: ServerSpec, seed: int) -> list[_Plan]:
    dom = domain_for(spec)
    rng = random.Random(f"{seed}:{spec.name}:plans")
    verbs = [vocab.VERBS[v] for v in dom.verbs]
    objects = list(dom.objects)
    combos = [(o, v) for o in objects for v in verbs]
    capacity = len(combos)
    if spec.tool_count > capacity:
        raise CalibrationError(spec.name, f"vocabulary supports at most {capacity} distinct tools")
    # cover every object before repeating one, so sibling tools differ in what they touch
    by_round: list[tuple] = []
    per_object = {o: [v for v in verbs] for o in objects}
    for o in objects:
        rng.shuffle(per_object[o])
    order = list(objects)
    rng.shuffle(order)
    r = 0
    while len(by_round) < capacity:
        for o in order:
            if r < len(per_object[o]):
                by_round.append((o, per_object[o][r]))
        r += 1
    chosen = by_round[: spec.tool_count]
    plans = []
    for obj, verb in chosen:
        filters = list(dom.filters)
        rng.shuffle(filters)
        generic = list(vocab.GENERIC_PARAMS)
        rng.shuffle(generic)
        plans.append(_Plan(dom, verb, obj, filters[:3], generic, list(dom.outputs), spec.name))
    return plans


def _pad_source(rng: random.Random) -> str:
    notes = list(_NOTES)
    rng.shuffle(notes)
    return "Usage notes: " + " ".join(notes)


def _targets(specs: Sequence[ServerSpec], target_total: int, seed: int) -> list[list[int]]:
    """Per-tool token targets: jittered around each server's rescaled average, summing exactly."""
    nominal = sum(s.tool_count * s.avg_schema_tokens for s in specs)
    scale = target_total / nominal
    server_sums = [round(s.tool_count * s.avg_schema_tokens * scale) for s in specs]
    server_sums[-1] += target_total - sum(server_sums)
    out = []
    for spec, total in zip(specs, server_sums):
        rng = random.Random(f"{seed}:{spec.name}:targets")
        weights = [1.0 + rng.uniform(-TARGET_JITTER, TARGET_JITTER) for _ in range(spec.tool_count)]
        raw = [total * w / sum(weights) for w in weights]
        ints = [int(x) for x in raw]
        remainder = total - sum(ints)
        for i in sorted(range(len(raw)), key=lambda i: raw[i] - ints[i], reverse=True)[:remainder]:
            ints[i] += 1
        out.append(ints)
    return out


def _preconditions(p: _Plan) -> tuple[Precondition, ...]:
    pres = []
    if p.verb.write:
        pres.append(Precondition.requires_auth(f"{p.domain.key}:write"))
    if p.verb.destructive:
        pres.append(Precondition.milestone_reached("plan_confirmed"))
    if p.verb.needs_prior:
        pres.append(Precondition.has_prior_tool_output(f"{p.domain.key}_"))
    return tuple(pres)


def generate_testbed(
    specs: Sequence[ServerSpec] = TESTBED_SPECS,
    target_total_tokens: int = TESTBED_TOTAL_TOKENS,
    seed: int = 42,
    counter: TokenCounter | None = None,
) -> Catalog:
    """Build a deterministic catalog whose full-definition token total hits ``target_total_tokens``.

    Each tool is padded or trimmed to its own target; any per-tool shortfall is
    carried into the next tool's target so the catalog total stays on budget.
    """
    if counter is None:
        from ..tokens import heuristic_counter

        counter = heuristic_counter()
    specs = list(specs)
    if not specs:
        raise ValueError("at least one server spec is required")
    if target_total_tokens <= sum(s.tool_count for s in specs) * 20:
        raise ValueError("target_total_tokens must exceed 20 tokens per tool")
    if len({s.name for s in specs}) != len(specs):
        raise ValueError("server names must be unique")

    targets = _targets(specs, target_total_tokens, seed)
    tools: list[ToolDefinition] = []
    preconditions: dict = {}
    carry = 0
    for spec, server_targets in zip(specs, targets):
        cal = _Calibrator(counter, spec.name)
        pad_rng = random.Random(f"{seed}:{spec.name}:pad")
        for plan, target in zip(_plans(spec, seed), server_targets):
            goal = target + carry
            tool = cal.fit(plan, max(goal, 1), _pad_source(pad_rng))
            carry = goal - cal.tokens(tool)
            tools.append(tool)
            pres = _preconditions(plan)
            if pres:
                preconditions[tool.id] = pres
    if abs(carry) > 2:
        raise CalibrationError(specs[-1].name, f"catalog total misses its target by {carry} tokens")

    summaries = {t.id: summarize_tool(t, SUMMARY_MAX_TOKENS, counter) for t in tools}
    breakdowns = {t.id: token_breakdown(t, counter) for t in tools}
    return Catalog(tools, summaries, seed, counter.name, preconditions, breakdowns)


def scaled_specs(n_tools: int) -> list[ServerSpec]:
    """Server mix for an N-tool catalog.

    Up to 120 tools the six testbed servers shrink proportionally; beyond that
    they stay at full size and further servers from the extended vocabulary
    are added, as a larger deployment connects more servers rather than
    growing one server without bound.
    """
    base = list(TESTBED_SPECS)
    base_n = sum(s.tool_count for s in base)
    if n_tools <= base_n:
        raw = [s.tool_count * n_tools / base_n for s in base]
        counts = [max(1, int(x)) for x in raw]
        for i in sorted(range(len(raw)), key=lambda i: raw[i] - int(raw[i]), reverse=True):
            if sum(counts) >= n_tools:
                break
            counts[i] += 1
        while sum(counts) > n_tools:
            counts[counts.index(max(counts))] -= 1
        return [ServerSpec(s.name, c, s.avg_schema_tokens, s.domain) for s, c in zip(base, counts) if c > 0]

    extra_n = n_tools - base_n
    extras = list(vocab.EXTRA_DOMAINS)
    caps = {k: len(vocab.DOMAINS[k].objects) * len(vocab.DOMAINS[k].verbs) for k in extras}
    if extra_n > sum(caps.values()):
        raise ValueError(f"vocabulary supports at most {base_n + sum(caps.values())} tools")
    counts = {k: 0 for k in extras}
    i = 0
    while sum(counts.values()) < extra_n:
        k = extras[i % len(extras)]
        if counts[k] < caps[k]:
            counts[k] += 1
        i += 1
    avgs = (300, 420, 360, 480, 340, 400, 450, 380)
    out = base[:]
    for j, k in enumerate(extras):
        if counts[k]:
            d = vocab.DOMAINS[k]
            out.append(ServerSpec(d.label, counts[k], avgs[j % len(avgs)], k))
    return out


def scaled_target(specs: Sequence[ServerSpec]) -> int:
    """Token total for a spec mix under the same rescaling the 120-tool testbed uses."""
    nominal_120 = sum(s.tool_count * s.avg_schema_tokens for s in TESTBED_SPECS)
    return round(sum(s.tool_count * s.avg_schema_tokens for s in specs) * TESTBED_TOTAL_TOKENS / nominal_120)
