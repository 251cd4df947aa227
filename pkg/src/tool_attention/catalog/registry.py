"""On-disk schema registry: ``catalog.json`` index plus one ``<tool_id>.json`` per tool."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from ..errors import MissingSchemaError
from ..state import preconditions_from_json, preconditions_to_json
from .types import Catalog, TokenBreakdown, ToolDefinition, ToolSummary

INDEX_NAME = "catalog.json"
FORMAT_VERSION = 1


def dumps_stable(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def index_document(catalog: Catalog) -> dict[str, Any]:
    entries = []
    for tool in catalog.tools:
        entry: dict[str, Any] = {
            "id": tool.id,
            "server": tool.server,
            "summary": catalog.summaries[tool.id].to_dict(),
            "preconditions": preconditions_to_json(catalog.preconditions.get(tool.id, ())),
        }
        if tool.id in catalog.breakdowns:
            entry["tokens"] = catalog.breakdowns[tool.id].to_dict()
        entries.append(entry)
    return {
        "format_version": FORMAT_VERSION,
        "seed": catalog.seed,
        "counter_name": catalog.counter_name,
        "tool_count": len(catalog.tools),
        "total_tokens": catalog.total_tokens(),
        "tools": entries,
    }


def save_registry(catalog: Catalog, directory: str | Path) -> Path:
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    for tool in catalog.tools:
        (root / f"{tool.id}.json").write_text(dumps_stable(tool.to_dict()), encoding="utf-8")
    (root / INDEX_NAME).write_text(dumps_stable(index_document(catalog)), encoding="utf-8")
    return root


def load_registry(directory: str | Path) -> Catalog:
    root = Path(directory)
    index = json.loads((root / INDEX_NAME).read_text(encoding="utf-8"))
    tools, summaries, pre, brk = [], {}, {}, {}
    for entry in index["tools"]:
        tool_id = entry["id"]
        path = root / f"{tool_id}.json"
        if not path.exists():
            raise MissingSchemaError(tool_id)
        tools.append(ToolDefinition.from_dict(json.loads(path.read_text(encoding="utf-8"))))
        summaries[tool_id] = ToolSummary.from_dict(entry["summary"])
        if entry.get("preconditions"):
            pre[tool_id] = preconditions_from_json(entry["preconditions"])
        if "tokens" in entry:
            brk[tool_id] = TokenBreakdown.from_dict(entry["tokens"])
    return Catalog(tools, summaries, int(index["seed"]), index["counter_name"], pre, brk)
