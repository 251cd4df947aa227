"""IntentRouter: embed the query, over-fetch from the store, gate, keep the top k."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .embed import EmbeddingVector, Encoder
from .errors import ConfigurationError, RoutingUnavailableError
from .index import VectorStore
from .state import AgentState, Precondition, satisfied

QueryAugmenter = Callable[[str, AgentState], str]


@dataclass(frozen=True)
class RouterConfig:
    threshold: float = 0.28
    top_k: int = 10
    overfetch_factor: int = 4
    overfetch_floor: int = 20

    def __post_init__(self) -> None:
        if not -1.0 <= self.threshold <= 1.0:
            raise ConfigurationError("threshold must lie in [-1, 1]")
        if self.top_k < 1:
            raise ConfigurationError("top_k must be >= 1")
        if self.overfetch_factor < 1:
            raise ConfigurationError("overfetch_factor must be >= 1")

    @property
    def fetch_size(self) -> int:
        return max(self.top_k * self.overfetch_factor, self.overfetch_floor)


@dataclass(frozen=True)
class RoutingResult:
    tool_id: str
    score: float


@dataclass
class RouteTrace:
    """Everything a routing pass looked at, for observability."""

    query_vector: EmbeddingVector
    candidates: list[str] = field(default_factory=list)
    scores: list[float] = field(default_factory=list)
    gated_out_by_state: list[str] = field(default_factory=list)
    active: list[RoutingResult] = field(default_factory=list)


def gate(score: float, threshold: float, pre_ok: bool) -> int:
    """Product of the score-threshold indicator and the precondition indicator."""
    return int(score >= threshold and pre_ok)


def route_trace(
    query: str,
    state: AgentState,
    store: VectorStore,
    preconds: Mapping[str, Sequence[Precondition]],
    cfg: RouterConfig,
    encoder: Encoder,
    augment: QueryAugmenter | None = None,
) -> RouteTrace:
    text = augment(query, state) if augment is not None else query
    try:
        e_q = encoder.encode(text)
    except Exception as exc:
        raise RoutingUnavailableError(f"query encoding failed: {exc}") from exc
    trace = RouteTrace(query_vector=e_q)
    if len(store) == 0:
        return trace

    fetch = cfg.fetch_size
    while True:
        slate = store.search(e_q, fetch)
        trace.candidates, trace.scores, trace.gated_out_by_state, active = [], [], [], []
        for tool_id, score in slate:
            if score < cfg.threshold:
                break  # slate is sorted, nothing further can pass
            trace.candidates.append(tool_id)
            trace.scores.append(score)
            if not satisfied(preconds.get(tool_id, ()), state):
                trace.gated_out_by_state.append(tool_id)
                continue
            if len(active) < cfg.top_k:
                active.append(RoutingResult(tool_id, score))
        # Gating can eat the whole over-fetch; widen until k survive or the slate runs dry.
        exhausted = len(slate) < fetch or slate[-1][1] < cfg.threshold
        if len(active) >= cfg.top_k or exhausted:
            break
        fetch *= 2
    trace.active = active
    return trace


def route(
    query: str,
    state: AgentState,
    store: VectorStore,
    preconds: Mapping[str, Sequence[Precondition]],
    cfg: RouterConfig,
    encoder: Encoder,
    augment: QueryAugmenter | None = None,
) -> list[RoutingResult]:
    return route_trace(query, state, store, preconds, cfg, encoder, augment).active


class IntentRouter:
    """Binds a store, encoder, precondition table and config into a callable router."""

    def __init__(
        self,
        store: VectorStore,
        encoder: Encoder,
        preconds: Mapping[str, Sequence[Precondition]] | None = None,
        cfg: RouterConfig | None = None,
        augment: QueryAugmenter | None = None,
    ) -> None:
        self.store = store
        self.encoder = encoder
        self.preconds = dict(preconds or {})
        self.cfg = cfg or RouterConfig()
        self.augment = augment

    def trace(self, query: str, state: AgentState | None = None) -> RouteTrace:
        return route_trace(query, state or AgentState(), self.store, self.preconds, self.cfg, self.encoder, self.augment)

    def route(self, query: str, state: AgentState | None = None) -> list[RoutingResult]:
        return self.trace(query, state).active
