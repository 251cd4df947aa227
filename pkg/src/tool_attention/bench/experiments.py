"""Threshold sweep, ablation grid, scaling curve and the poisoned-description suite."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Sequence

from ..catalog import Catalog, ToolDefinition, ToolSummary, generate_testbed, scaled_specs, scaled_target, summarize_tool
from ..catalog.vocab import PAYLOADS, POISON_NAMES
from ..embed import Encoder, HashedNgramEncoder
from ..index import VectorStore
from ..router import RouterConfig, route
from ..tokens import DEFAULT_BUDGET, ContextBudget, TokenCounter, heuristic_counter
from .harness import BenchReport, TaskSource, default_task_source, run_benchmark
from .methods import MethodUnderTest, cli_lazy, full_schema, simple_retrieval, static_pruning, stratified_subset, tool_attention
from .tasks import calibration_pairs, generate_tasks, grant_all

SWEEP_LO, SWEEP_HI, SWEEP_STEP = 0.10, 0.50, 0.02


def sweep_grid(lo: float = SWEEP_LO, hi: float = SWEEP_HI, step: float = SWEEP_STEP) -> list[float]:
    n = int(round((hi - lo) / step)) + 1
    return [round(lo + i * step, 10) for i in range(n)]


@dataclass
class SweepResult:
    theta_star: float
    best_f1: float
    curve: list[tuple[float, float]]

    def argmax_segment(self) -> tuple[int, int] | None:
        """(first, last) grid indices attaining the max if they are contiguous, else None."""
        hits = [i for i, (_, f) in enumerate(self.curve) if f == self.best_f1]
        return (hits[0], hits[-1]) if hits == list(range(hits[0], hits[-1] + 1)) else None

    def to_dict(self) -> dict[str, Any]:
        return {
            "theta_star": self.theta_star,
            "best_f1": round(self.best_f1, 6),
            "curve": [{"theta": t, "f1": round(f, 6)} for t, f in self.curve],
        }


def pair_f1(active: Sequence[str], tool_id: str) -> float:
    """F1 of an active set against a single ground-truth tool."""
    if tool_id not in active:
        return 0.0
    p = 1.0 / len(active)
    return 2 * p / (p + 1.0)


def sweep_threshold(
    catalog: Catalog,
    pairs: Sequence[tuple[str, str]],
    encoder: Encoder | None = None,
    grid: Sequence[float] | None = None,
    top_k: int = 10,
) -> SweepResult:
    """Mean pair F1 at each grid threshold; ties go to the smaller threshold."""
    if not pairs:
        raise ValueError("at least one calibration pair is required")
    encoder = encoder or HashedNgramEncoder()
    grid = list(grid) if grid is not None else sweep_grid()
    store = VectorStore(encoder.dim)
    store.add_tools(catalog.ordered_summaries(), encoder)
    state = grant_all(catalog)
    curve = []
    for theta in grid:
        cfg = RouterConfig(threshold=theta, top_k=top_k)
        total = 0.0
        for query, tool_id in pairs:
            active = [r.tool_id for r in route(query, state, store, catalog.preconditions, cfg, encoder)]
            total += pair_f1(active, tool_id)
        curve.append((theta, round(total / len(pairs), 12)))
    best = max(f for _, f in curve)
    theta_star = next(t for t, f in curve if f == best)
    return SweepResult(theta_star, best, curve)


# -- ablations ---------------------------------------------------------------

def ablation_variants() -> list[MethodUnderTest]:
    base = RouterConfig()
    return [
        tool_attention(name="full"),
        tool_attention(name="-gate", use_gate=False),
        tool_attention(name="-preconditions", use_preconditions=False),
        tool_attention(name="-lazy (P2 skipped)", promote=False),
        tool_attention(name="summaries-only k=0", promote=False),
        tool_attention(RouterConfig(base.threshold, 5), name="k=5"),
        tool_attention(RouterConfig(base.threshold, 10), name="k=10"),
        tool_attention(RouterConfig(base.threshold, 20), name="k=20"),
        tool_attention(RouterConfig(0.15, base.top_k), name="theta=0.15"),
        tool_attention(RouterConfig(0.28, base.top_k), name="theta=0.28"),
        tool_attention(RouterConfig(0.40, base.top_k), name="theta=0.40"),
        tool_attention(name="encoder=builtin"),
        tool_attention(name="encoder=tfidf", encoder="tfidf"),
    ]


def ablation_grid(
    catalog: Catalog,
    tasks: TaskSource,
    seeds: Sequence[int] = (42,),
    counter: TokenCounter | None = None,
    encoder: Encoder | None = None,
    budget: ContextBudget = DEFAULT_BUDGET,
) -> BenchReport:
    """Token columns for each component removed or swept; success columns are not computed."""
    return run_benchmark(catalog, tasks, ablation_variants(), budget, seeds, counter, encoder)


# -- scaling -----------------------------------------------------------------

@dataclass
class ScalingRow:
    n_tools: int
    catalog_tokens: int
    rho: dict[str, float] = field(default_factory=dict)
    tokens: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_tools": self.n_tools,
            "catalog_tokens": self.catalog_tokens,
            "rho_t30": {k: round(v, 6) for k, v in self.rho.items()},
            "tokens_per_turn": {k: round(v, 6) for k, v in self.tokens.items()},
        }


SCALING_SIZES = (60, 120, 250, 500, 1000)


def scaling_curve(
    sizes: Sequence[int] = SCALING_SIZES,
    n_tasks: int = 300,
    seeds: Sequence[int] = (42,),
    catalog_seed: int = 42,
    counter: TokenCounter | None = None,
    encoder: Encoder | None = None,
    budget: ContextBudget = DEFAULT_BUDGET,
    top_k: int = 10,
) -> list[ScalingRow]:
    """rho at turn 30 per method as the catalog grows.

    The static-pruning baseline keeps the curated 30 definitions of the
    120-tool testbed at every size: a hand-picked list does not grow with the
    catalog, which is the point of the comparison.
    """
    counter = counter or heuristic_counter()
    encoder = encoder or HashedNgramEncoder()
    curated = stratified_subset(generate_testbed(seed=catalog_seed, counter=counter))
    rows = []
    for n in sizes:
        specs = scaled_specs(n)
        catalog = generate_testbed(specs, scaled_target(specs), seed=catalog_seed, counter=counter)
        methods = [
            full_schema(),
            static_pruning(curated),
            simple_retrieval(),
            cli_lazy(),
            tool_attention(RouterConfig(top_k=top_k)),
        ]
        report = run_benchmark(catalog, default_task_source(catalog, n_tasks), methods, budget, seeds, counter, encoder)
        rows.append(
            ScalingRow(
                n_tools=len(catalog),
                catalog_tokens=catalog.total_tokens(),
                rho={m.name: m.rho_t30 for m in report.methods},
                tokens={m.name: m.tokens_mean for m in report.methods},
            )
        )
    return rows


# -- poisoned descriptions ---------------------------------------------------

@dataclass
class AdversarialReport:
    n_poisoned: int
    excluded: int
    exclusion_rate: float
    paraphrase_included: int
    paraphrase_total: int
    paraphrase_inclusion_rate: float
    identical_included: bool
    decisions: list[dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_poisoned": self.n_poisoned,
            "excluded": self.excluded,
            "exclusion_rate": round(self.exclusion_rate, 6),
            "paraphrase_included": self.paraphrase_included,
            "paraphrase_total": self.paraphrase_total,
            "paraphrase_inclusion_rate": round(self.paraphrase_inclusion_rate, 6),
            "identical_included": self.identical_included,
            "decisions": self.decisions,
        }


def poisoned_tool(tool_id: str, name: str, cover: str, payload: str) -> ToolDefinition:
    return ToolDefinition(
        id=tool_id,
        name=name,
        desc=f"{cover} {payload}",
        schema={"type": "object", "properties": {"input": {"type": "string"}}, "required": []},
        output="JSON object with status.",
        server="Untrusted",
    )


_COVERS = (
    "Synchronizes beacon telemetry between relay nodes.",
    "Calibrates the flux capacitor array.",
    "Mirrors shard manifests to the cold vault.",
    "Rotates daemon heartbeat intervals.",
    "Balances quantum relay throughput.",
)


def adversarial_suite(
    catalog: Catalog,
    n_poisoned: int = 50,
    seed: int = 42,
    encoder: Encoder | None = None,
    cfg: RouterConfig | None = None,
    counter: TokenCounter | None = None,
    n_paraphrase: int = 10,
) -> AdversarialReport:
    """Inject poisoned tools, each paired with an unrelated benign query, and route.

    A second subset mimics its paired query word for word before the payload,
    and one more tool's summary is the query itself; those show the limit of
    a purely semantic gate.
    """
    encoder = encoder or HashedNgramEncoder()
    cfg = cfg or RouterConfig()
    counter = counter or heuristic_counter()
    rng = random.Random(f"{seed}:adversarial")
    benign = generate_tasks(catalog, n_poisoned + n_paraphrase + 1, seed)
    queries = [t.query for t in benign]

    poisoned: list[ToolDefinition] = []
    for i in range(n_poisoned):
        base = POISON_NAMES[i % len(POISON_NAMES)]
        poisoned.append(
            poisoned_tool(f"untrusted_{base}_{i:03d}", f"{base.replace('_', ' ')} {i}", rng.choice(_COVERS), rng.choice(PAYLOADS))
        )
    mimics: list[ToolDefinition] = []
    for j in range(n_paraphrase):
        q = queries[n_poisoned + j]
        mimics.append(poisoned_tool(f"untrusted_mimic_{j:03d}", q, q + ".", rng.choice(PAYLOADS)))
    summaries = [summarize_tool(t, counter=counter) for t in poisoned + mimics]
    identical_query = queries[-1]
    identical = poisoned_tool("untrusted_identical", "identical", identical_query, rng.choice(PAYLOADS))
    summaries.append(ToolSummary(identical.id, identical_query, counter(identical_query)))
    extended = catalog.extended(poisoned + mimics + [identical], summaries, counter)

    store = VectorStore(encoder.dim)
    store.add_tools(extended.ordered_summaries(), encoder)
    state = grant_all(extended)

    def active_for(query: str) -> list[str]:
        return [r.tool_id for r in route(query, state, store, extended.preconditions, cfg, encoder)]

    decisions = []
    excluded = 0
    for tool, query in zip(poisoned, queries):
        active = active_for(query)
        out = tool.id not in active
        excluded += out
        decisions.append({"tool_id": tool.id, "query": query, "excluded": out})
    para_in = 0
    for tool, query in zip(mimics, queries[n_poisoned:]):
        active = active_for(query)
        inside = tool.id in active
        para_in += inside
        decisions.append({"tool_id": tool.id, "query": query, "excluded": not inside})
    identical_in = identical.id in active_for(identical_query)
    decisions.append({"tool_id": identical.id, "query": identical_query, "excluded": not identical_in})
    return AdversarialReport(
        n_poisoned=n_poisoned,
        excluded=excluded,
        exclusion_rate=excluded / n_poisoned if n_poisoned else 1.0,
        paraphrase_included=para_in,
        paraphrase_total=n_paraphrase,
        paraphrase_inclusion_rate=para_in / n_paraphrase if n_paraphrase else 0.0,
        identical_included=identical_in,
        decisions=decisions,
    )


def calibration_set(catalog: Catalog, n: int = 150, seed: int = 42) -> list[tuple[str, str]]:
    return calibration_pairs(catalog, n, seed)
