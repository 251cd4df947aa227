import json
import random

from hypothesis import given, strategies as st

from tool_attention.state import (
    AgentState,
    Precondition,
    advance_turn,
    apply_patch,
    evaluate,
    preconditions_from_json,
    preconditions_to_json,
    record_tool_result,
    satisfied,
)


def test_requires_auth():
    assert evaluate(Precondition.requires_auth("github:write"), AgentState(auth_scopes={"github:write"}))


def test_prior_output_on_empty_history():
    assert not evaluate(Precondition.has_prior_tool_output("search_"), AgentState())


def test_conjunction():
    pres = [Precondition.requires_auth("a"), Precondition.milestone_reached("plan_confirmed")]
    assert not satisfied(pres, AgentState(auth_scopes={"a"}))
    assert satisfied(pres, AgentState(auth_scopes={"a"}, milestones={"plan_confirmed"}))


def test_empty_set_is_satisfied():
    assert satisfied([], AgentState())
    assert evaluate(Precondition.always(), AgentState())


def test_record_appends_in_order():
    s = record_tool_result(AgentState(), "search_issues", True)
    assert len(s.prior_tool_calls) == 1
    s = record_tool_result(s, "get_issue", False)
    assert s.prior_tool_calls == (("search_issues", True), ("get_issue", False))


def test_failed_call_does_not_count():
    s = record_tool_result(AgentState(), "search_issues", False)
    assert not evaluate(Precondition.has_prior_tool_output("search_"), s)
    s = record_tool_result(s, "search_issues", True)
    assert evaluate(Precondition.has_prior_tool_output("search_"), s)


def test_advance_turn():
    assert advance_turn(advance_turn(AgentState())).turn == 2


def test_apply_patch():
    s = apply_patch(AgentState(auth_scopes={"a", "b"}), {
        "auth_scopes": ["c"],
        "revoke_scopes": ["b"],
        "milestones": ["m"],
        "prior_tool_calls": [{"tool_id": "x", "success": True}, ["y", False]],
    })
    assert s.auth_scopes == {"a", "c"}
    assert s.milestones == {"m"}
    assert s.prior_tool_calls == (("x", True), ("y", False))
    assert apply_patch(s, None) is s


def test_state_to_dict():
    s = AgentState(auth_scopes={"b", "a"}, prior_tool_calls=[("x", True)], milestones={"m"}, turn=3)
    assert json.loads(json.dumps(s.to_dict())) == {
        "auth_scopes": ["a", "b"],
        "prior_tool_calls": [{"tool_id": "x", "success": True}],
        "milestones": ["m"],
        "turn": 3,
    }


def test_invalid_kind_and_missing_arg():
    import pytest

    with pytest.raises(ValueError):
        Precondition("sometimes", "x")
    with pytest.raises(ValueError):
        Precondition("requires_auth")


def _random_pair(rng):
    kind = rng.choice(["requires_auth", "has_prior_tool_output", "milestone_reached", "always"])
    arg = "" if kind == "always" else rng.choice(["a", "b", "search_", "plan"])
    state = AgentState(
        auth_scopes=frozenset(rng.sample(["a", "b", "c"], rng.randint(0, 3))),
        prior_tool_calls=tuple((rng.choice(["search_x", "get_y"]), rng.random() < 0.5) for _ in range(rng.randint(0, 3))),
        milestones=frozenset(rng.sample(["plan", "done"], rng.randint(0, 2))),
    )
    return Precondition(kind, arg), state


def test_purity():
    rng = random.Random(0)
    pairs = [_random_pair(rng) for _ in range(1000)]
    first = [evaluate(p, s) for p, s in pairs]
    assert [evaluate(p, s) for p, s in pairs] == first


names = st.text("abcxyz_:", min_size=1, max_size=8)
preconditions = st.one_of(
    st.builds(Precondition.requires_auth, names),
    st.builds(Precondition.has_prior_tool_output, names),
    st.builds(Precondition.milestone_reached, names),
    st.just(Precondition.always()),
)


@given(st.lists(preconditions, max_size=6))
def test_json_round_trip(pres):
    text = json.dumps(preconditions_to_json(pres))
    assert list(preconditions_from_json(json.loads(text))) == pres
