"""Tool definitions, the calibrated synthetic testbed, and the on-disk registry."""

from .generator import generate_testbed, scaled_specs, scaled_target
from .registry import load_registry, save_registry
from .types import (
    TESTBED_SPECS,
    TESTBED_TOTAL_TOKENS,
    Catalog,
    ServerSpec,
    TokenBreakdown,
    ToolDefinition,
    ToolSummary,
    first_sentence,
    schema_text,
    summarize_tool,
    token_breakdown,
)

__all__ = [
    "TESTBED_SPECS",
    "TESTBED_TOTAL_TOKENS",
    "Catalog",
    "ServerSpec",
    "TokenBreakdown",
    "ToolDefinition",
    "ToolSummary",
    "first_sentence",
    "generate_testbed",
    "load_registry",
    "save_registry",
    "scaled_specs",
    "scaled_target",
    "schema_text",
    "summarize_tool",
    "token_breakdown",
]
