"""Acceptance gate: one test per criterion, each printed as PASS/FAIL in the terminal summary."""

import json
import random
import statistics
import time

import numpy as np
import pytest

from tool_attention.attention import build_attention
from tool_attention.bench import (
    adversarial_suite,
    calibration_set,
    default_methods,
    default_task_source,
    full_schema,
    generate_tasks,
    grant_all,
    run_benchmark,
    scaling_curve,
    sweep_grid,
    sweep_threshold,
    tool_attention,
)
from tool_attention.catalog import generate_testbed
from tool_attention.catalog.generator import scaled_specs, scaled_target
from tool_attention.cli import main as cli_main
from tool_attention.gateway import Gateway
from tool_attention.index import VectorStore
from tool_attention.loader import SchemaCache
from tool_attention.router import IntentRouter, RouterConfig
from tool_attention.state import AgentState

B1, B2, B3, B4, TA = "B1_full_schema", "B2_static_pruning", "B3_simple_retrieval", "B4_cli_lazy", "tool_attention"


@pytest.fixture(scope="module")
def default_run(testbed, counter, encoder):
    started = time.perf_counter()
    report = run_benchmark(testbed, default_task_source(testbed, 500), default_methods(), counter=counter, encoder=encoder, audit=True)
    return report, time.perf_counter() - started


# -- independent oracles -----------------------------------------------------

def _holds(pre, state):
    if pre.kind == "requires_auth":
        return pre.arg in state.auth_scopes
    if pre.kind == "milestone_reached":
        return pre.arg in state.milestones
    if pre.kind == "has_prior_tool_output":
        return any(ok and t.startswith(pre.arg) for t, ok in state.prior_tool_calls)
    return True


def oracle_route(query, state, tools, encoder, preconds, theta, k):
    """Score every tool, keep the eligible ones, sort by score then insertion order, cut at k."""
    q = np.asarray(encoder.encode(query).values, dtype=np.float64)
    scored = []
    for index, (tool_id, vec) in enumerate(tools):
        score = float(np.dot(vec, q))
        if score >= theta and all(_holds(p, state) for p in preconds.get(tool_id, ())):
            scored.append((-score, index, tool_id, score))
    scored.sort()
    return [(tool_id, score) for _, _, tool_id, score in scored[:k]]


def _unit_rows(catalog, encoder):
    rows = []
    for s in catalog.ordered_summaries():
        v = np.asarray(encoder.encode(s.text).values, dtype=np.float64)
        n = np.linalg.norm(v)
        rows.append((s.tool_id, v / n if n else v))
    return rows


# -- criteria ----------------------------------------------------------------

def test_criterion_01_b1_token_reproduction(counter, record_property):
    started = time.perf_counter()
    catalog = generate_testbed(seed=42, counter=counter)
    report = run_benchmark(catalog, default_task_source(catalog, 500), [full_schema()], seeds=(42,), counter=counter)
    elapsed = time.perf_counter() - started
    tokens = report.method(B1).tokens_mean
    record_property("b1_tokens_per_turn", round(tokens, 1))
    record_property("seconds", round(elapsed, 2))
    assert 47_102 <= tokens <= 47_522
    assert elapsed < 10.0


def test_criterion_02_reduction(default_run, testbed, record_property):
    report, elapsed = default_run
    b1, ta = report.method(B1).tokens_mean, report.method(TA).tokens_mean
    pool = sum(s.token_count for s in testbed.ordered_summaries())
    record_property("ta_marginal", round(ta, 1))
    record_property("ratio", round(ta / b1, 4))
    record_property("phase1_pool", pool)
    record_property("bench_seconds", round(elapsed, 2))
    assert report.metadata["tasks"] >= 500
    assert ta <= 0.10 * b1
    assert 4_320 <= pool <= 5_280
    assert elapsed < 30.0


def test_criterion_03_rho_ordering(default_run, record_property):
    report, _ = default_run
    rho = {m.name: m.rho_t30 for m in report.methods}
    for name in (B1, B2, B3, B4, TA):
        record_property(name, round(rho[name], 4))
    assert rho[B1] < rho[B2] < rho[B3] < rho[TA] <= rho[B4] + 0.05
    assert rho[B1] <= 0.30
    assert rho[TA] >= 0.85


def test_criterion_04_router_oracle_equivalence(testbed, encoder, counter, record_property):
    specs = scaled_specs(1000)
    big = generate_testbed(specs, scaled_target(specs), seed=42, counter=counter)
    rng = random.Random(4)
    compared = 0
    for catalog, n_queries in ((testbed, 500), (big, 500)):
        rows = _unit_rows(catalog, encoder)
        store = VectorStore(encoder.dim)
        store.add_tools(catalog.ordered_summaries(), encoder)
        scopes = sorted({p.arg for ps in catalog.preconditions.values() for p in ps if p.kind == "requires_auth"})
        milestones = sorted({p.arg for ps in catalog.preconditions.values() for p in ps if p.kind == "milestone_reached"})
        words = [w for s in catalog.ordered_summaries() for w in s.text.lower().split()[:6]]
        task_queries = [q for t in generate_tasks(catalog, 300, 4) for q in t.queries]
        for _ in range(n_queries):
            query = rng.choice(task_queries) if rng.random() < 0.7 else " ".join(rng.sample(words, rng.randint(1, 8)))
            state = AgentState(
                auth_scopes=frozenset(rng.sample(scopes, rng.randint(0, len(scopes)))),
                milestones=frozenset(rng.sample(milestones, rng.randint(0, len(milestones)))),
            )
            cfg = RouterConfig(threshold=rng.choice([0.1, 0.2, 0.28, 0.35, 0.5]), top_k=rng.choice([1, 3, 5, 10, 20]))
            got = IntentRouter(store, encoder, catalog.preconditions, cfg).route(query, state)
            want = oracle_route(query, state, rows, encoder, catalog.preconditions, cfg.threshold, cfg.top_k)
            assert [r.tool_id for r in got] == [t for t, _ in want], query
            assert all(abs(r.score - s) <= 1e-9 for r, (_, s) in zip(got, want))
            compared += 1
    record_property("queries", compared)
    assert compared == 1000


def test_criterion_05_gate_soundness(default_run, testbed, encoder, counter, record_property):
    report, _ = default_run
    bench_violations = sum(m.violations for m in report.methods)

    gateway = Gateway(build_attention(testbed, encoder, counter))
    rng = random.Random(5)
    queries = [q for t in generate_tasks(testbed, 200, 5) for q in t.queries]
    ids = testbed.ids
    sessions: dict[str, list[str]] = {}
    rid = 0
    list_checks = call_checks = 0

    def rpc(method, params):
        nonlocal rid
        rid += 1
        reply = gateway.handle({"jsonrpc": "2.0", "id": rid, "method": method, "params": params})
        assert reply["id"] == rid
        return reply

    for _ in range(10_000):
        op = rng.random()
        if not sessions or op < 0.03:
            sid = rpc("initialize", {})["result"]["session_id"]
            sessions[sid] = []
            continue
        sid = rng.choice(sorted(sessions))
        if op < 0.35:
            patch = {"auth_scopes": rng.sample(sorted({p.arg for ps in testbed.preconditions.values() for p in ps if p.kind == "requires_auth"}), 2)} if rng.random() < 0.5 else {}
            result = rpc("attention/route", {"session_id": sid, "query": rng.choice(queries), "state_patch": patch})["result"]
            sessions[sid] = [a["tool_id"] for a in result["active"]]
            assert len(sessions[sid]) <= 10
        elif op < 0.65:
            tools = rpc("tools/list", {"session_id": sid})["result"]["tools"]
            assert [t["name"] for t in tools] == ids
            with_schema = {t["name"] for t in tools if "inputSchema" in t}
            assert with_schema == set(sessions[sid])
            list_checks += 1
        else:
            active = sessions[sid]
            name = rng.choice(active) if active and rng.random() < 0.5 else rng.choice(ids)
            result = rpc("tools/call", {"session_id": sid, "name": name, "arguments": {}})["result"]
            if name in active:
                assert "content" in result and not result["isError"]
            else:
                assert result == {"error": "tool_not_available", "available": active}
            call_checks += 1
    record_property("bench_violations", bench_violations)
    record_property("list_checks", list_checks)
    record_property("call_checks", call_checks)
    assert bench_violations == 0


def test_criterion_06_lru_correctness(record_property):
    from collections import OrderedDict

    rng = random.Random(6)
    capacity = 32
    fetches = []

    def fetch(tool_id):
        fetches.append(tool_id)
        return {"id": tool_id}

    cache = SchemaCache(fetch, capacity)
    ref: OrderedDict = OrderedDict()
    ref_misses = 0
    for _ in range(10_000):
        key = f"t{int(rng.paretovariate(1.2)) % 100:03d}"
        assert cache.get(key) == {"id": key}
        if key in ref:
            ref.move_to_end(key)
        else:
            ref_misses += 1
            ref[key] = True
            if len(ref) > capacity:
                ref.popitem(last=False)
        assert len(cache.keys()) <= capacity
    record_property("misses", cache.miss_count)
    assert cache.keys() == list(ref)
    assert cache.miss_count == ref_misses == len(fetches)


def test_criterion_07_threshold_sweep(testbed, encoder, record_property):
    pairs = calibration_set(testbed, 150, 42)
    result = sweep_threshold(testbed, pairs, encoder)
    grid = sweep_grid()
    assert len(grid) == 21 and grid[0] == 0.10 and grid[-1] == 0.50
    rows = _unit_rows(testbed, encoder)
    state = grant_all(testbed)
    oracle_curve = []
    for theta in grid:
        total = 0.0
        for query, tool_id in pairs:
            active = [t for t, _ in oracle_route(query, state, rows, encoder, testbed.preconditions, theta, 10)]
            total += (2 * (1 / len(active)) / (1 / len(active) + 1)) if tool_id in active else 0.0
        oracle_curve.append(total / len(pairs))
    best = max(oracle_curve)
    oracle_star = grid[next(i for i, f in enumerate(oracle_curve) if abs(f - best) <= 1e-12)]
    record_property("theta_star", result.theta_star)
    record_property("best_f1", round(result.best_f1, 4))
    record_property("argmax_segment", result.argmax_segment())
    assert [t for t, _ in result.curve] == grid
    assert all(abs(f - o) <= 1e-12 for (_, f), o in zip(result.curve, oracle_curve))
    assert result.theta_star == oracle_star
    assert result.argmax_segment() is not None


def test_criterion_08_ablation_orderings(testbed, counter, encoder, record_property):
    base = RouterConfig()
    methods = [
        tool_attention(RouterConfig(base.threshold, 5), name="k=5"),
        tool_attention(RouterConfig(base.threshold, 10), name="k=10"),
        tool_attention(RouterConfig(base.threshold, 20), name="k=20"),
        tool_attention(RouterConfig(0.15, base.top_k), name="theta=0.15"),
        tool_attention(RouterConfig(0.40, base.top_k), name="theta=0.40"),
    ]
    report = run_benchmark(testbed, default_task_source(testbed, 500), methods, seeds=(42,), counter=counter, encoder=encoder)
    t = {m.name: m.tokens_mean for m in report.methods}
    for name, value in t.items():
        record_property(name, round(value, 1))
    assert t["k=5"] < t["k=10"] < t["k=20"]
    assert t["theta=0.40"] < t["k=10"] < t["theta=0.15"]


def test_criterion_09_scaling(counter, encoder, record_property):
    rows = scaling_curve(counter=counter, encoder=encoder)
    sizes = [r.n_tools for r in rows]
    b1 = [r.rho[B1] for r in rows]
    record_property("sizes", sizes)
    record_property("b1_rho", [round(x, 4) for x in b1])
    record_property("ta_rho_1000", round(rows[-1].rho[TA], 4))
    assert sizes == [60, 120, 250, 500, 1000]
    assert all(a > b for a, b in zip(b1, b1[1:]))
    assert rows[-1].rho[TA] >= 0.85


def test_criterion_10_performance(testbed, encoder, counter, record_property):
    rng = np.random.default_rng(10)
    store = VectorStore(384)
    vecs = rng.standard_normal((10_000, 384))
    store.add_vectors([(f"t{i}", v) for i, v in enumerate(vecs)])
    queries = rng.standard_normal((200, 384))
    store.search(queries[0], 10)
    per_query = []
    for q in queries:
        t0 = time.perf_counter()
        store.search(q, 10)
        per_query.append(time.perf_counter() - t0)
    search_ms = statistics.median(per_query) * 1e3

    ta = build_attention(testbed, encoder, counter)
    task_queries = [q for t in generate_tasks(testbed, 100, 10) for q in t.queries][:200]
    state = grant_all(testbed)
    passes = []
    for q in task_queries:
        t0 = time.perf_counter()
        ta.before_model(q, state)
        passes.append(time.perf_counter() - t0)
    route_ms = statistics.median(passes) * 1e3
    record_property("search_ms_p50", round(search_ms, 3))
    record_property("route_pass_ms_p50", round(route_ms, 3))
    assert search_ms < 5.0
    assert route_ms < 70.0


def test_criterion_11_adversarial(testbed, encoder, counter, record_property):
    rep = adversarial_suite(testbed, n_poisoned=50, seed=42, encoder=encoder, counter=counter)
    record_property("exclusion_rate", rep.exclusion_rate)
    record_property("identical_included", rep.identical_included)
    assert rep.exclusion_rate >= 0.8
    assert rep.identical_included


def test_criterion_12_determinism(tmp_path, record_property):
    outs = [tmp_path / "run1.json", tmp_path / "run2.json"]
    for out in outs:
        assert cli_main(["bench", "--seed", "42", "--out", str(out), "--log-level", "WARNING"]) == 0
    a, b = (p.read_bytes() for p in outs)
    record_property("bytes", len(a))
    assert a == b
    assert json.loads(a)["methods"]
