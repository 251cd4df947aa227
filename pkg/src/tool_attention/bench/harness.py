"""Benchmark loop, aggregation with bootstrap intervals, and report rendering."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from ..attention import after_model, parse_sections
from ..catalog import Catalog
from ..embed import Encoder
from ..state import AgentState, advance_turn, record_tool_result
from ..tokens import DEFAULT_BUDGET, ContextBudget, TokenCounter, effective_utilization
from .methods import HISTORY_TAIL, MethodUnderTest, Runner, method_names
from .tasks import Task, generate_tasks

log = logging.getLogger(__name__)

RHO_TURN = 30
BOOTSTRAP_RESAMPLES = 1000
DEFAULT_SEEDS = (42, 43, 44)

TaskSource = Sequence[Task] | Callable[[int], Sequence[Task]]


@dataclass
class MethodStats:
    name: str
    params: dict[str, Any]
    turns: int = 0
    tokens_mean: float = 0.0
    tokens_ci: tuple[float, float] = (0.0, 0.0)
    rho_t30: float = 0.0
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None
    gate_trigger_rate: float | None = None
    phase1_mean: float | None = None
    phase2_mean: float | None = None
    violations: int = 0

    def to_dict(self) -> dict[str, Any]:
        r = _round
        d = {
            "name": self.name,
            "params": self.params,
            "turns": self.turns,
            "tokens_per_turn": r(self.tokens_mean),
            "tokens_ci95": [r(self.tokens_ci[0]), r(self.tokens_ci[1])],
            "rho_t30": r(self.rho_t30),
            "precision": r(self.precision),
            "recall": r(self.recall),
            "f1": r(self.f1),
            "gate_trigger_rate": r(self.gate_trigger_rate),
        }
        if self.phase1_mean is not None:
            d["phase1_tokens"] = r(self.phase1_mean)
            d["phase2_tokens"] = r(self.phase2_mean)
            d["total_tokens"] = r(self.phase1_mean + self.phase2_mean)
        if self.violations:
            d["gate_violations"] = self.violations
        return d


@dataclass(frozen=True)
class LinearProjection:
    """User-supplied rates turning measured tokens/turn into a projected quantity.

    value = intercept + per_token * tokens_per_turn. No default rates ship with
    the harness; projected numbers are labelled as such in the report.
    """

    label: str
    per_token: float
    intercept: float = 0.0
    unit: str = ""

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "LinearProjection":
        return cls(str(data["label"]), float(data["per_token"]), float(data.get("intercept", 0.0)), str(data.get("unit", "")))

    def apply(self, tokens_per_turn: float) -> float:
        return self.intercept + self.per_token * tokens_per_turn


@dataclass
class BenchReport:
    metadata: dict[str, Any]
    methods: list[MethodStats] = field(default_factory=list)
    projections: dict[str, dict[str, float]] = field(default_factory=dict)

    def method(self, name: str) -> MethodStats:
        for m in self.methods:
            if m.name == name:
                return m
        raise KeyError(name)

    def project(self, projections: Sequence[LinearProjection]) -> None:
        """Attach projected (not measured) values per method, keyed by projection label."""
        for p in projections:
            self.projections[p.label] = {m.name: round(p.apply(m.tokens_mean), 6) for m in self.methods}
        if projections:
            self.metadata["projection_units"] = {p.label: p.unit for p in projections}

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"metadata": self.metadata, "methods": [m.to_dict() for m in self.methods]}
        if self.projections:
            out["projected"] = self.projections
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_markdown(self) -> str:
        lines = [
            "| Method | Tokens/turn (tools) | 95% CI | rho @ T30 | Precision | Recall | F1 | Gate triggers |",
            "|---|---:|---:|---:|---:|---:|---:|---:|",
        ]
        for m in self.methods:
            lines.append(
                f"| {m.name} | {m.tokens_mean:,.1f} | [{m.tokens_ci[0]:,.1f}, {m.tokens_ci[1]:,.1f}] | {m.rho_t30:.3f} "
                f"| {_fmt(m.precision)} | {_fmt(m.recall)} | {_fmt(m.f1)} | {_fmt(m.gate_trigger_rate)} |"
            )
        split = [m for m in self.methods if m.phase1_mean is not None]
        if split:
            lines += ["", "| Method | Phase-1 pool | Phase-2 promoted | Marginal (warm cache) |", "|---|---:|---:|---:|"]
            for m in split:
                lines.append(f"| {m.name} | {m.phase1_mean:,.1f} | {m.phase2_mean:,.1f} | {m.tokens_mean:,.1f} |")
        meta = ", ".join(f"{k}={v}" for k, v in sorted(self.metadata.items()) if not isinstance(v, dict))
        return "\n".join(lines) + f"\n\n{meta}\n"


def _round(x: float | None, places: int = 6) -> float | None:
    return None if x is None else round(float(x), places)


def _fmt(x: float | None) -> str:
    return "n/a" if x is None else f"{x:.3f}"


def _tasks_for(source: TaskSource, seed: int) -> Sequence[Task]:
    return source(seed) if callable(source) else source


def prf(retrieved: set[str], truth: frozenset[str]) -> tuple[float, float, float]:
    hit = len(retrieved & truth)
    p = hit / len(retrieved) if retrieved else 0.0
    r = hit / len(truth)
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def audit_prompt(text: str, visible: Sequence[str]) -> bool:
    """True when the prompt's schema section holds exactly the visible tools."""
    promoted = [t["id"] for t in parse_sections(text)["tools"]]
    return promoted == list(visible)


@dataclass
class _TaskOutcome:
    tokens: int
    turns: int
    phase1: int
    phase2: int
    retrieved: set[str]
    triggers: int


def run_task(runner: Runner, task: Task, audit: bool = False) -> tuple[_TaskOutcome, int]:
    """One task through one method. A simulated agent asks for each turn's target tool."""
    state = task.initial_state
    history: list[str] = []
    out = _TaskOutcome(0, 0, 0, 0, set(), 0)
    violations = 0
    for query, wanted in zip(task.queries, task.turn_tools):
        rec = runner.turn(query, state, history[-HISTORY_TAIL:])
        out.tokens += rec.tokens
        out.turns += 1
        out.phase1 += rec.phase1
        out.phase2 += rec.phase2
        history.append(f"user: {query}")
        if rec.visible is None:
            history.append(f"assistant: ran discovery for {wanted}")
            state = advance_turn(record_tool_result(state, wanted, True))
            continue
        if audit and not audit_prompt(rec.prompt.text, rec.visible):
            violations += 1
        out.retrieved.update(rec.visible)
        rejection = after_model(rec.visible, wanted)
        if rejection is None:
            history.append(f"assistant: called {wanted}")
            state = record_tool_result(state, wanted, True)
        else:
            out.triggers += 1
            history.append(f"assistant: {rejection['error']}")
        state = advance_turn(state)
    return out, violations


def bootstrap_ci(
    sums: np.ndarray, counts: np.ndarray, seed: int, resamples: int = BOOTSTRAP_RESAMPLES
) -> tuple[float, float]:
    """Percentile 95% interval of the turn-weighted mean, resampling tasks."""
    if len(sums) == 0:
        return (0.0, 0.0)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(sums), size=(resamples, len(sums)))
    means = sums[idx].sum(axis=1) / counts[idx].sum(axis=1)
    lo, hi = np.percentile(means, [2.5, 97.5])
    return float(lo), float(hi)


def run_benchmark(
    catalog: Catalog,
    tasks: TaskSource,
    methods: Sequence[MethodUnderTest],
    budget: ContextBudget = DEFAULT_BUDGET,
    seeds: Sequence[int] = DEFAULT_SEEDS,
    counter: TokenCounter | None = None,
    encoder: Encoder | None = None,
    audit: bool = False,
) -> BenchReport:
    """Every method over every task of every seed; ``tasks`` is a list or a seed -> tasks function."""
    if not methods:
        raise ValueError("at least one method is required")
    if not seeds:
        raise ValueError("at least one seed is required")
    method_names(methods)
    if counter is None:
        from ..tokens import heuristic_counter

        counter = heuristic_counter()
    if encoder is None:
        from ..embed import HashedNgramEncoder

        encoder = HashedNgramEncoder()

    task_sets = {seed: list(_tasks_for(tasks, seed)) for seed in seeds}
    n_tasks = sum(len(v) for v in task_sets.values())
    report = BenchReport(
        metadata={
            "seeds": list(seeds),
            "counter": counter.name,
            "encoder": encoder.name,
            "catalog_tools": len(catalog),
            "catalog_tokens": catalog.total_tokens(),
            "catalog_seed": catalog.seed,
            "tasks": n_tasks,
            "rho_turn": RHO_TURN,
            "budget": {"c_max": budget.c_max, "c_sys": budget.c_sys, "c_task_per_turn": budget.c_task_per_turn},
        }
    )
    for m in methods:
        runner = m.bind(catalog, counter, encoder)
        sums, counts, prfs = [], [], []
        p1 = p2 = triggers = violations = 0
        for seed in seeds:
            for task in task_sets[seed]:
                out, bad = run_task(runner, task, audit)
                violations += bad
                sums.append(out.tokens)
                counts.append(out.turns)
                p1 += out.phase1
                p2 += out.phase2
                triggers += out.triggers
                if runner.retrieves:
                    prfs.append(prf(out.retrieved, task.ground_truth_tools))
        s, c = np.asarray(sums, dtype=np.float64), np.asarray(counts, dtype=np.float64)
        turns = int(c.sum())
        mean = float(s.sum() / turns)
        stats = MethodStats(
            name=m.name,
            params=_jsonable(dict(m.params)),
            turns=turns,
            tokens_mean=mean,
            tokens_ci=bootstrap_ci(s, c, seeds[0]),
            rho_t30=effective_utilization(budget, mean, RHO_TURN),
            violations=violations,
        )
        if runner.retrieves:
            arr = np.asarray(prfs)
            stats.precision, stats.recall, stats.f1 = (float(v) for v in arr.mean(axis=0))
            stats.gate_trigger_rate = triggers / turns
        if m.kind == "tool_attention":
            stats.phase1_mean, stats.phase2_mean = p1 / turns, p2 / turns
        report.methods.append(stats)
        log.info("%s: %.1f tokens/turn over %d turns", m.name, mean, turns)
    return report


def _jsonable(params: dict[str, Any]) -> dict[str, Any]:
    return {k: v for k, v in params.items() if isinstance(v, (str, int, float, bool)) or v is None}


def default_task_source(catalog: Catalog, n: int = 500) -> Callable[[int], list[Task]]:
    return lambda seed: generate_tasks(catalog, n, seed)


def initial_state(task: Task) -> AgentState:
    return task.initial_state
