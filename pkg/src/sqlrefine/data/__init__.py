"""Bundled toy databases and question sets.

Layout follows ``<db_root>/<db_id>/<db_id>.sqlite``. Each database directory
also carries the ``.sql`` script it was built from; :func:`build_databases`
regenerates the ``.sqlite`` files from those scripts.
"""

from __future__ import annotations

import os
import sqlite3
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent
DB_IDS = ("concert_singer", "school", "store")


def db_root() -> Path:
    return DATA_DIR / "databases"


def dataset_path() -> Path:
    """The 60-question fixture set over all three databases."""
    return DATA_DIR / "dev.json"


def mini_dataset_path() -> Path:
    """A 5-question subset used for record/replay checks."""
    return DATA_DIR / "mini.json"


def tables_json_path() -> Path:
    return DATA_DIR / "tables.json"


def build_databases(dest: str | os.PathLike | None = None) -> Path:
    """Execute every bundled ``.sql`` script into ``<dest>/<db_id>/<db_id>.sqlite``."""
    dest = Path(dest) if dest is not None else db_root()
    for db_id in DB_IDS:
        script = (db_root() / db_id / f"{db_id}.sql").read_text(encoding="utf-8")
        target = dest / db_id / f"{db_id}.sqlite"
        target.parent.mkdir(parents=True, exist_ok=True)
        if target.exists():
            target.unlink()
        conn = sqlite3.connect(target)
        try:
            conn.executescript(script)
            conn.commit()
        finally:
            conn.close()
    return dest

