"""Token counting and the cost formulas built on it (Tools Tax, context utilization)."""

from __future__ import annotations

import hashlib
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Any, Callable, Literal, Sequence

from .errors import CounterUnavailableError, UndefinedUtilizationError

if TYPE_CHECKING:
    from .catalog import Catalog


def content_hash(text: str) -> int:
    """64-bit content hash used for caches and prompt-prefix identity."""
    return int.from_bytes(hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "big")


@dataclass(frozen=True)
class TokenCounter:
    name: str
    count: Callable[[str], int] = field(compare=False)

    def __call__(self, text: str) -> int:
        return self.count(text)


def _heuristic_count(text: str) -> int:
    return -(-len(text) // 4)


def heuristic_counter() -> TokenCounter:
    """ceil(chars / 4), the usual back-of-envelope BPE approximation."""
    return TokenCounter("heuristic", _heuristic_count)


class _CachedCount:
    def __init__(self, adapter: Callable[[str], Any]) -> None:
        self._adapter = adapter
        self._cache: dict[int, int] = {}
        self._lock = threading.Lock()
        self.calls = 0

    def __call__(self, text: str) -> int:
        if text == "":
            return 0
        key = content_hash(text)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        try:
            reply = self._adapter(text)
        except Exception as exc:  # any adapter failure means the counter is gone
            raise CounterUnavailableError(f"token counter adapter failed: {exc}") from exc
        n = reply["tokens"] if isinstance(reply, dict) else reply
        if not isinstance(n, int) or isinstance(n, bool) or n < 0:
            raise CounterUnavailableError(f"adapter returned invalid token count {n!r}")
        with self._lock:
            self.calls += 1
            self._cache[key] = n
        return n


def external_counter(adapter: Callable[[str], Any], name: str = "external") -> TokenCounter:
    """Wrap a byte-exact counting endpoint.

    ``adapter`` maps text to either an int or a ``{"tokens": n}`` reply (a
    :class:`~tool_attention.adapters.LineJsonProcess` qualifies). Results are
    cached by content hash.
    """
    return TokenCounter(name, _CachedCount(adapter))


def fallback_counter(primary: TokenCounter, fallback: TokenCounter | None = None) -> TokenCounter:
    """Use ``primary`` but drop to ``fallback`` (heuristic by default) when it is unavailable."""
    fallback = fallback or heuristic_counter()

    def count(text: str) -> int:
        try:
            return primary(text)
        except CounterUnavailableError:
            return fallback(text)

    return TokenCounter(f"{primary.name}|{fallback.name}", count)


@dataclass(frozen=True)
class ToolsTaxReport:
    N: int
    K: int
    per_turn_tokens: int
    session_tokens: int
    alpha_estimate: Fraction


def tools_tax_from_tokens(per_tool_tokens: Sequence[int], K: int) -> ToolsTaxReport:
    if K < 1:
        raise ValueError("K must be >= 1")
    per_turn = sum(per_tool_tokens)
    n = len(per_tool_tokens)
    alpha = Fraction(per_turn, n) if n else Fraction(0)
    return ToolsTaxReport(N=n, K=K, per_turn_tokens=per_turn, session_tokens=K * per_turn, alpha_estimate=alpha)


def tools_tax(catalog: "Catalog", K: int, counter: TokenCounter) -> ToolsTaxReport:
    """Per-session cost of re-serializing every tool definition on each of K turns."""
    from .catalog import token_breakdown

    return tools_tax_from_tokens([token_breakdown(t, counter).total for t in catalog.tools], K)


@dataclass(frozen=True)
class ContextBudget:
    c_max: int = 200_000
    c_sys: int = 500
    c_task_per_turn: int = 500

    def __post_init__(self) -> None:
        if min(self.c_max, self.c_sys, self.c_task_per_turn) < 0:
            raise ValueError("budget terms must be non-negative")
        if self.c_sys + self.c_task_per_turn > self.c_max:
            raise ValueError("c_sys + c_task_per_turn exceeds c_max")


# Calibrated so that B1 at turn 30 lands on rho ~= 0.24.
DEFAULT_BUDGET = ContextBudget(c_max=200_000, c_sys=500, c_task_per_turn=500)

UtilizationMode = Literal["cumulative", "per_turn"]


def effective_utilization(
    budget: ContextBudget,
    tool_tokens_per_turn: float,
    K: int,
    mode: UtilizationMode = "per_turn",
) -> float:
    """Fraction of prompt tokens that are task-useful at turn K.

    ``cumulative`` charges the tool tax once per elapsed turn (K x tokens);
    ``per_turn`` charges it once, as a single prompt at turn K would carry it.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    c_task = K * budget.c_task_per_turn
    if mode == "cumulative":
        tax = K * tool_tokens_per_turn
    elif mode == "per_turn":
        tax = tool_tokens_per_turn
    else:
        raise ValueError(f"unknown mode {mode!r}")
    denom = c_task + tax + budget.c_sys
    if denom == 0:
        raise UndefinedUtilizationError("all utilization terms are zero")
    return min(1.0, max(0.0, c_task / denom))
