"""Exception hierarchy shared by every module in the package."""

from __future__ import annotations


class ToolAttentionError(Exception):
    """Base class for all errors raised by this package."""


class CalibrationError(ToolAttentionError):
    def __init__(self, server: str, message: str) -> None:
        super().__init__(f"calibration failed for server {server!r}: {message}")
        self.server = server


class MissingSchemaError(ToolAttentionError, KeyError):
    """No full schema exists for the requested tool id."""

    def __init__(self, tool_id: str) -> None:
        super().__init__(f"no schema for {tool_id!r}")
        self.tool_id = tool_id

    def __str__(self) -> str:  # KeyError would repr() the message
        return self.args[0]


class FetchError(ToolAttentionError):
    """I/O or protocol failure while fetching a schema (not the same as a missing one)."""


class CounterUnavailableError(ToolAttentionError):
    pass


class EncoderUnavailableError(ToolAttentionError):
    pass


class RoutingUnavailableError(ToolAttentionError):
    pass


class ConfigurationError(ToolAttentionError, ValueError):
    pass


class DimensionMismatchError(ToolAttentionError, ValueError):
    pass


class DuplicateToolError(ToolAttentionError, ValueError):
    def __init__(self, tool_id: str) -> None:
        super().__init__(f"tool {tool_id!r} is already in the store")
        self.tool_id = tool_id


class UndefinedUtilizationError(ToolAttentionError, ZeroDivisionError):
    pass
