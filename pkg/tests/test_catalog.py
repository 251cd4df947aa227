import dataclasses

import pytest
from hypothesis import given, settings, strategies as st

from tool_attention.catalog import generate_testbed, load_registry, save_registry
from tool_attention.catalog.generator import scaled_specs, scaled_target
from tool_attention.catalog.registry import index_document
from tool_attention.catalog.types import (
    TESTBED_SPECS,
    ServerSpec,
    ToolDefinition,
    summarize_tool,
    token_breakdown,
)
from tool_attention.errors import MissingSchemaError


def test_testbed_totals(testbed, counter):
    assert len(testbed) == 120
    assert testbed.servers == [s.name for s in TESTBED_SPECS]
    total = sum(token_breakdown(t, counter).total for t in testbed.tools)
    assert 47_102 <= total <= 47_522
    assert total == testbed.total_tokens()


def test_per_server_means_follow_rescaled_table(testbed):
    weighted = sum(s.tool_count * s.avg_schema_tokens for s in TESTBED_SPECS)
    scale = testbed.total_tokens() / weighted
    for spec in TESTBED_SPECS:
        tokens = [testbed.breakdowns[t.id].total for t in testbed.tools if t.server == spec.name]
        assert len(tokens) == spec.tool_count
        mean = sum(tokens) / len(tokens)
        assert abs(mean - spec.avg_schema_tokens * scale) <= 0.05 * spec.avg_schema_tokens * scale, spec.name


def test_schemas_are_objects_with_properties(testbed):
    for tool in testbed.tools:
        assert tool.schema["type"] == "object" and isinstance(tool.schema["properties"], dict)
        assert tool.name


def test_summaries_fit_budget(testbed, counter):
    for s in testbed.ordered_summaries():
        assert s.token_count == counter(s.text) <= 60


def test_single_tool_calibration(counter):
    catalog = generate_testbed([ServerSpec("A", 1, 100)], 100, seed=1, counter=counter)
    assert len(catalog) == 1
    assert abs(token_breakdown(catalog.tools[0], counter).total - 100) <= 2


def test_generation_is_deterministic(counter, tmp_path):
    a = generate_testbed(seed=42, counter=counter)
    b = generate_testbed(seed=42, counter=counter)
    assert a == b
    save_registry(a, tmp_path / "a")
    save_registry(b, tmp_path / "b")
    for path in sorted((tmp_path / "a").iterdir()):
        assert path.read_bytes() == (tmp_path / "b" / path.name).read_bytes()


def test_seed_changes_catalog(counter):
    assert generate_testbed(seed=1, counter=counter).tools != generate_testbed(seed=2, counter=counter).tools


@settings(max_examples=8, deadline=None)
@given(st.integers(20, 300), st.integers(0, 10_000))
def test_calibration_sound_for_scaled_catalogs(n, seed):
    from tool_attention.tokens import heuristic_counter

    counter = heuristic_counter()
    specs = scaled_specs(n)
    catalog = generate_testbed(specs, scaled_target(specs), seed=seed, counter=counter)
    assert len(catalog) == n
    assert sum(token_breakdown(t, counter).total for t in catalog.tools) == catalog.total_tokens()
    assert all(s.token_count <= 60 for s in catalog.ordered_summaries())


def _order_tool(desc):
    name = "search_customer_orders_by_date_status_and_amount"
    return ToolDefinition(id=name, name=name, desc=desc, schema={"type": "object", "properties": {}}, output="rows", server="A")


def test_summarize_example(counter):
    s = summarize_tool(_order_tool("Search customer orders filtered by date, status, and amount. Returns paginated rows."), 60, counter)
    assert s.text == "search customer orders by date status and amount — Search customer orders filtered by date, status, and amount."
    assert s.token_count <= 60


def test_summarize_empty_description(counter):
    assert summarize_tool(_order_tool(""), 60, counter).text == "search customer orders by date status and amount"


def test_summarize_truncates_at_word(counter):
    s = summarize_tool(_order_tool("Anything."), 8, counter)
    assert s.text == "search customer orders by date"
    assert s.token_count == 8


def test_summarize_rejects_tiny_budget(counter):
    with pytest.raises(ValueError):
        summarize_tool(_order_tool(""), 4, counter)


def test_registry_round_trip_small(testbed, tmp_path):
    small = dataclasses.replace(
        testbed,
        tools=testbed.tools[:3],
        summaries={t.id: testbed.summaries[t.id] for t in testbed.tools[:3]},
        preconditions={k: v for k, v in testbed.preconditions.items() if k in testbed.ids[:3]},
        breakdowns={t.id: testbed.breakdowns[t.id] for t in testbed.tools[:3]},
    )
    save_registry(small, tmp_path)
    assert load_registry(tmp_path) == small


def test_registry_missing_file(testbed, tmp_path):
    save_registry(testbed, tmp_path)
    victim = testbed.tools[7].id
    (tmp_path / f"{victim}.json").unlink()
    with pytest.raises(MissingSchemaError) as info:
        load_registry(tmp_path)
    assert victim in str(info.value)


def test_registry_full_round_trip(testbed, registry_dir):
    assert len(list(registry_dir.glob("*.json"))) == 121
    loaded = load_registry(registry_dir)
    assert len(loaded.tools) == 120
    assert loaded == testbed
    assert index_document(loaded)["total_tokens"] == testbed.total_tokens()


def test_token_breakdown_parts(counter):
    tool = ToolDefinition(id="t", name="abcd", desc="abcdefgh", schema={"type": "object", "properties": {}}, output="x", server="A")
    b = token_breakdown(tool, counter)
    assert (b.name_tokens, b.desc_tokens, b.output_tokens) == (1, 2, 1)
    assert b.total == b.name_tokens + b.desc_tokens + b.schema_tokens + b.output_tokens
    assert token_breakdown(tool.to_dict(), counter) == b


@pytest.mark.parametrize("word,plural", [("issue", "issues"), ("branch", "branches"), ("index", "indexes"), ("library", "libraries"), ("day", "days"), ("address", "addresses")])
def test_plural_of(word, plural):
    from tool_attention.catalog.vocab import plural_of

    assert plural_of(word) == plural
