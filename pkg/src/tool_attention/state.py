"""Agent execution state and the closed precondition DSL evaluated against it.

Preconditions only ever look at authoritative state (scopes, prior calls,
milestones); no free text reaches ``evaluate``, so a crafted tool description
cannot talk its way past them.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Sequence

KINDS = ("requires_auth", "has_prior_tool_output", "milestone_reached", "always")


@dataclass(frozen=True)
class AgentState:
    auth_scopes: frozenset[str] = frozenset()
    prior_tool_calls: tuple[tuple[str, bool], ...] = ()
    milestones: frozenset[str] = frozenset()
    turn: int = 0

    def __post_init__(self) -> None:
        if self.turn < 0:
            raise ValueError("turn must be >= 0")
        object.__setattr__(self, "auth_scopes", frozenset(self.auth_scopes))
        object.__setattr__(self, "milestones", frozenset(self.milestones))
        object.__setattr__(self, "prior_tool_calls", tuple((str(t), bool(ok)) for t, ok in self.prior_tool_calls))

    def to_dict(self) -> dict[str, Any]:
        return {
            "auth_scopes": sorted(self.auth_scopes),
            "prior_tool_calls": [{"tool_id": t, "success": ok} for t, ok in self.prior_tool_calls],
            "milestones": sorted(self.milestones),
            "turn": self.turn,
        }


@dataclass(frozen=True)
class Precondition:
    kind: str
    arg: str = ""

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown precondition kind {self.kind!r}")
        if self.kind != "always" and not self.arg:
            raise ValueError(f"{self.kind} needs an argument")

    @classmethod
    def requires_auth(cls, scope: str) -> "Precondition":
        return cls("requires_auth", scope)

    @classmethod
    def has_prior_tool_output(cls, prefix: str) -> "Precondition":
        return cls("has_prior_tool_output", prefix)

    @classmethod
    def milestone_reached(cls, name: str) -> "Precondition":
        return cls("milestone_reached", name)

    @classmethod
    def always(cls) -> "Precondition":
        return cls("always")

    def to_dict(self) -> dict[str, str]:
        return {"kind": self.kind, "arg": self.arg}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Precondition":
        return cls(str(data["kind"]), str(data.get("arg", "") or ""))


def evaluate(pre: Precondition, state: AgentState) -> bool:
    if pre.kind == "requires_auth":
        return pre.arg in state.auth_scopes
    if pre.kind == "has_prior_tool_output":
        return any(ok and tool_id.startswith(pre.arg) for tool_id, ok in state.prior_tool_calls)
    if pre.kind == "milestone_reached":
        return pre.arg in state.milestones
    return True


def satisfied(preconditions: Iterable[Precondition], state: AgentState) -> bool:
    """Conjunction over the set; an empty set is satisfied."""
    return all(evaluate(p, state) for p in preconditions)


def record_tool_result(state: AgentState, tool_id: str, success: bool) -> AgentState:
    return replace(state, prior_tool_calls=state.prior_tool_calls + ((tool_id, bool(success)),))


def advance_turn(state: AgentState) -> AgentState:
    return replace(state, turn=state.turn + 1)


def apply_patch(state: AgentState, patch: Mapping[str, Any] | None) -> AgentState:
    """Merge a wire-level state patch.

    Recognized keys: ``auth_scopes`` and ``milestones`` (added), ``revoke_scopes``
    (removed), ``prior_tool_calls`` (appended; ``{"tool_id", "success"}`` objects
    or ``[tool_id, success]`` pairs).
    """
    if not patch:
        return state
    scopes = set(state.auth_scopes) | set(patch.get("auth_scopes", ()))
    scopes -= set(patch.get("revoke_scopes", ()))
    calls = list(state.prior_tool_calls)
    for item in patch.get("prior_tool_calls", ()):
        if isinstance(item, Mapping):
            calls.append((str(item["tool_id"]), bool(item.get("success", True))))
        else:
            tool_id, ok = item
            calls.append((str(tool_id), bool(ok)))
    return replace(
        state,
        auth_scopes=frozenset(scopes),
        milestones=frozenset(set(state.milestones) | set(patch.get("milestones", ()))),
        prior_tool_calls=tuple(calls),
    )


def preconditions_to_json(pres: Sequence[Precondition]) -> list[dict[str, str]]:
    return [p.to_dict() for p in pres]


def preconditions_from_json(items: Sequence[Mapping[str, Any]]) -> tuple[Precondition, ...]:
    return tuple(Precondition.from_dict(d) for d in items)
