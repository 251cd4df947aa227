import pytest

from tool_attention.bench import (
    BenchReport,
    LinearProjection,
    adversarial_suite,
    calibration_set,
    cli_lazy,
    default_methods,
    discovery_prompt,
    full_schema,
    generate_tasks,
    run_benchmark,
    scaling_curve,
    simple_retrieval,
    static_pruning,
    sweep_grid,
    sweep_threshold,
    tool_attention,
)
from tool_attention.bench.experiments import ablation_variants, pair_f1
from tool_attention.bench.harness import bootstrap_ci, prf
from tool_attention.state import satisfied


@pytest.fixture(scope="module")
def tasks(testbed):
    return generate_tasks(testbed, 500, 42)


def test_tasks_are_valid(testbed, tasks):
    assert len(tasks) == 500
    assert len({t.id for t in tasks}) == 500
    for t in tasks:
        assert t.ground_truth_tools <= set(testbed.ids)
        assert set(t.turn_tools) <= t.ground_truth_tools
        assert len(t.queries) == len(t.turn_tools)
        for tool_id in t.ground_truth_tools:
            assert satisfied(testbed.preconditions.get(tool_id, ()), t.initial_state)


def test_tasks_deterministic(testbed, tasks):
    assert [t.to_dict() for t in generate_tasks(testbed, 500, 42)] == [t.to_dict() for t in tasks]
    assert generate_tasks(testbed, 50, 43) != tasks[:50]


def test_single_tasks_bind_one_tool(tasks):
    singles = [t for t in tasks if t.horizon == "single"]
    assert singles
    assert all(len(t.ground_truth_tools) == 1 and t.turns == 1 for t in singles)
    assert {t.horizon for t in tasks} == {"single", "multi", "long"}


@pytest.fixture(scope="module")
def small_report(testbed, counter, encoder, tasks):
    return run_benchmark(testbed, tasks[:100], default_methods(), seeds=(42,), counter=counter, encoder=encoder)


def test_b1_equals_catalog_total(small_report, testbed):
    b1 = small_report.method("B1_full_schema")
    assert b1.tokens_mean == testbed.total_tokens()
    assert 47_102 <= b1.tokens_mean <= 47_522


def test_b2_is_thirty_tools(testbed, counter, encoder, tasks):
    report = run_benchmark(testbed, tasks[:5], [static_pruning()], seeds=(1,), counter=counter, encoder=encoder)
    runner = static_pruning().bind(testbed, counter, encoder)
    assert len(runner.turn("q", None, []).visible) == 30
    assert report.method("B2_static_pruning").tokens_mean < testbed.total_tokens()


def test_b4_discovery_prompt(small_report, counter):
    assert abs(small_report.method("B4_cli_lazy").tokens_mean - 480) <= 30
    assert counter(discovery_prompt(counter, 480)) == 480
    assert small_report.method("B4_cli_lazy").f1 is None


def test_tool_attention_reduction(small_report):
    ta = small_report.method("tool_attention")
    assert ta.tokens_mean <= 0.10 * small_report.method("B1_full_schema").tokens_mean
    assert ta.phase2_mean < 4_000
    assert 0.0 <= ta.recall <= 1.0


def test_report_determinism(testbed, counter, encoder, tasks):
    methods = [full_schema(), simple_retrieval(), cli_lazy(), tool_attention()]
    a = run_benchmark(testbed, tasks[:60], methods, seeds=(42, 43), counter=counter, encoder=encoder).to_json()
    b = run_benchmark(testbed, tasks[:60], methods, seeds=(42, 43), counter=counter, encoder=encoder).to_json()
    assert a == b


def test_benchmark_rejects_empty_inputs(testbed):
    with pytest.raises(ValueError):
        run_benchmark(testbed, [], [], seeds=(42,))
    with pytest.raises(ValueError):
        run_benchmark(testbed, [], [full_schema()], seeds=())
    with pytest.raises(ValueError):
        run_benchmark(testbed, [], [full_schema(), full_schema()], seeds=(42,))


def test_markdown_rendering(small_report):
    md = small_report.to_markdown()
    assert "| B1_full_schema |" in md and "Phase-1 pool" in md


def test_projection_is_linear_and_labelled(small_report):
    report = BenchReport(dict(small_report.metadata), list(small_report.methods))
    report.project([LinearProjection("usd_per_turn", per_token=2e-6, intercept=0.01, unit="USD")])
    projected = report.to_dict()["projected"]["usd_per_turn"]
    b1 = small_report.method("B1_full_schema").tokens_mean
    assert projected["B1_full_schema"] == pytest.approx(0.01 + 2e-6 * b1)
    assert "projected" not in small_report.to_dict()


def test_prf_and_pair_f1():
    assert prf({"a", "b"}, frozenset({"a"})) == (0.5, 1.0, pytest.approx(2 / 3))
    assert prf(set(), frozenset({"a"})) == (0.0, 0.0, 0.0)
    assert pair_f1(["a"], "a") == 1.0
    assert pair_f1(["a", "b", "c", "d"], "a") == pytest.approx(0.4)
    assert pair_f1(["b"], "a") == 0.0


def test_bootstrap_ci_brackets_mean():
    import numpy as np

    sums = np.array([10.0, 20.0, 30.0, 40.0])
    counts = np.ones(4)
    lo, hi = bootstrap_ci(sums, counts, 42)
    assert lo <= 25.0 <= hi
    assert bootstrap_ci(sums, counts, 42) == (lo, hi)


def test_sweep_grid_points():
    grid = sweep_grid()
    assert len(grid) == 21
    assert grid[0] == 0.10 and grid[-1] == 0.50
    assert all(abs(b - a - 0.02) < 1e-9 for a, b in zip(grid, grid[1:]))


def test_sweep_single_pair(testbed, encoder):
    pair = calibration_set(testbed, 1, 3)
    result = sweep_threshold(testbed, pair, encoder)
    assert result.theta_star in sweep_grid()
    assert result.best_f1 == max(f for _, f in result.curve)


def test_sweep_needs_pairs(testbed):
    with pytest.raises(ValueError):
        sweep_threshold(testbed, [])


def test_summaries_only_variant_skips_phase2(testbed, counter, encoder, tasks):
    variant = next(m for m in ablation_variants() if m.name == "summaries-only k=0")
    report = run_benchmark(testbed, tasks[:20], [variant], seeds=(42,), counter=counter, encoder=encoder)
    assert report.method(variant.name).phase2_mean == 0
    assert report.method(variant.name).tokens_mean == 0


def test_ablation_variant_names():
    names = [m.name for m in ablation_variants()]
    assert len(names) == len(set(names)) == 13
    assert {"-gate", "-preconditions", "k=5", "k=20", "theta=0.15", "theta=0.40", "encoder=tfidf"} <= set(names)


def test_scaling_small(counter, encoder):
    rows = scaling_curve(sizes=(60, 120, 250), n_tasks=20, counter=counter, encoder=encoder)
    b1 = [r.rho["B1_full_schema"] for r in rows]
    b2 = [r.rho["B2_static_pruning"] for r in rows]
    assert b1[0] > b1[1] > b1[2]
    assert b2[0] == b2[1] == b2[2]
    assert [r.n_tools for r in rows] == [60, 120, 250]


def test_adversarial_determinism(testbed, encoder, counter):
    a = adversarial_suite(testbed, 20, seed=7, encoder=encoder, counter=counter, n_paraphrase=4)
    b = adversarial_suite(testbed, 20, seed=7, encoder=encoder, counter=counter, n_paraphrase=4)
    assert a.to_dict() == b.to_dict()
    assert a.identical_included
    assert len(a.decisions) == 20 + 4 + 1
