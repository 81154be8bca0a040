"""Loading Spider-format question files."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

from .errors import MalformedDataset, MissingDatabase


@dataclass(frozen=True)
class TaskItem:
    item_id: str
    db_id: str
    question: str
    gold_sql: Optional[str] = None


def database_path(db_root: str | os.PathLike, db_id: str) -> Path:
    return Path(db_root) / db_id / f"{db_id}.sqlite"


def load_dataset(
    path: str | os.PathLike, db_root: str | os.PathLike | None = None
) -> List[TaskItem]:
    """Read a JSON array of ``{"db_id", "question", "query"?, "id"?}`` objects.

    Items keep file order. When ``db_root`` is given every referenced
    database must exist at ``<db_root>/<db_id>/<db_id>.sqlite``.
    """
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedDataset(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise MalformedDataset(f"{path}: top-level value must be an array")

    width = max(4, len(str(max(len(raw) - 1, 0))))
    items: List[TaskItem] = []
    seen: set = set()
    for idx, obj in enumerate(raw):
        if not isinstance(obj, dict):
            raise MalformedDataset(f"item {idx}: expected an object")
        for key in ("db_id", "question"):
            if key not in obj:
                raise MalformedDataset(f"item {idx}: missing required key {key!r}")
            if not isinstance(obj[key], str):
                raise MalformedDataset(f"item {idx}: {key!r} must be a string")
        if not obj["question"].strip():
            raise MalformedDataset(f"item {idx}: question is empty")
        gold = obj.get("query")
        if gold is not None and not isinstance(gold, str):
            raise MalformedDataset(f"item {idx}: 'query' must be a string")
        if "id" in obj:
            if not isinstance(obj["id"], (str, int)) or isinstance(obj["id"], bool):
                raise MalformedDataset(f"item {idx}: 'id' must be a string or integer")
            item_id = str(obj["id"])
        else:
            item_id = str(idx).zfill(width)
        if item_id in seen:
            raise MalformedDataset(f"item {idx}: duplicate id {item_id!r}")
        seen.add(item_id)
        items.append(TaskItem(item_id, obj["db_id"], obj["question"], gold))

    if db_root is not None:
        for db_id in sorted({it.db_id for it in items}):
            p = database_path(db_root, db_id)
            if not p.is_file():
                raise MissingDatabase(db_id, p)
    return items
