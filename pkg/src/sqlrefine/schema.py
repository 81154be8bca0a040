"""Database schema model and the two loaders (SQLite catalog, Spider tables.json)."""

from __future__ import annotations

import enum
import os
import sqlite3
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Sequence, Tuple
from urllib.parse import quote

from .errors import CorruptCatalog, MalformedTablesJson, UnreadableDatabase


class DataType(str, enum.Enum):
    INTEGER = "INTEGER"
    REAL = "REAL"
    TEXT = "TEXT"
    BLOB = "BLOB"
    UNKNOWN = "UNKNOWN"


# Spider's coarse column vocabulary; anything else goes through affinity rules.
_SPIDER_TYPES = {
    "number": DataType.REAL,
    "text": DataType.TEXT,
    "time": DataType.UNKNOWN,
    "boolean": DataType.UNKNOWN,
    "others": DataType.UNKNOWN,
}


def normalize_type(declared: str | None) -> DataType:
    """Collapse a declared column type using SQLite's affinity rules.

    A missing type and NUMERIC affinity both map to UNKNOWN.
    """
    t = (declared or "").upper()
    if not t.strip():
        return DataType.UNKNOWN
    if "INT" in t:
        return DataType.INTEGER
    if "CHAR" in t or "CLOB" in t or "TEXT" in t:
        return DataType.TEXT
    if "BLOB" in t:
        return DataType.BLOB
    if "REAL" in t or "FLOA" in t or "DOUB" in t:
        return DataType.REAL
    return DataType.UNKNOWN


@dataclass(frozen=True)
class ColumnDef:
    name: str
    data_type: DataType = DataType.UNKNOWN
    not_null: bool = False
    is_primary_key: bool = False


@dataclass(frozen=True)
class ForeignKey:
    columns: Tuple[str, ...]
    ref_table: str
    ref_columns: Tuple[str, ...]


@dataclass(frozen=True)
class TableDef:
    name: str
    columns: Tuple[ColumnDef, ...]
    primary_key: Tuple[str, ...] = ()
    foreign_keys: Tuple[ForeignKey, ...] = ()

    def column(self, name: str) -> ColumnDef | None:
        low = name.lower()
        for col in self.columns:
            if col.name.lower() == low:
                return col
        return None

    @property
    def column_names(self) -> List[str]:
        return [c.name for c in self.columns]


@dataclass(frozen=True)
class DatabaseSchema:
    db_id: str
    tables: Tuple[TableDef, ...] = field(default_factory=tuple)

    def table(self, name: str) -> TableDef | None:
        low = name.lower()
        for t in self.tables:
            if t.name.lower() == low:
                return t
        return None

    def to_dict(self) -> dict:
        return {
            "db_id": self.db_id,
            "tables": [
                {
                    "name": t.name,
                    "columns": [
                        {
                            "name": c.name,
                            "type": c.data_type.value,
                            "not_null": c.not_null,
                            "primary_key": c.is_primary_key,
                        }
                        for c in t.columns
                    ],
                    "primary_key": list(t.primary_key),
                    "foreign_keys": [
                        [list(fk.columns), fk.ref_table, list(fk.ref_columns)]
                        for fk in t.foreign_keys
                    ],
                }
                for t in self.tables
            ],
        }


def open_readonly(db_path: str | os.PathLike) -> sqlite3.Connection:
    """Open ``db_path`` read-only, raising UnreadableDatabase when that is impossible."""
    path = Path(db_path)
    if not path.is_file():
        raise UnreadableDatabase(f"database file not found: {path}")
    try:
        with open(path, "rb") as fh:
            header = fh.read(16)
    except OSError as exc:
        raise UnreadableDatabase(f"cannot read {path}: {exc}") from exc
    if header and header != b"SQLite format 3\x00":
        raise UnreadableDatabase(f"{path} is not an SQLite database")
    uri = f"file:{quote(str(path.resolve()))}?mode=ro"
    try:
        return sqlite3.connect(uri, uri=True, check_same_thread=False)
    except sqlite3.Error as exc:
        raise UnreadableDatabase(f"cannot open {path}: {exc}") from exc


def _quote_ident(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def introspect_schema(db_path: str | os.PathLike, db_id: str) -> DatabaseSchema:
    conn = open_readonly(db_path)
    try:
        try:
            names = [
                row[0]
                for row in conn.execute(
                    "SELECT name FROM sqlite_master WHERE type = 'table' "
                    "AND name NOT LIKE 'sqlite\\_%' ESCAPE '\\' ORDER BY rowid"
                )
            ]
        except sqlite3.DatabaseError as exc:
            if "not a database" in str(exc) or "malformed" in str(exc):
                raise UnreadableDatabase(f"{db_path}: {exc}") from exc
            raise CorruptCatalog(f"{db_path}: {exc}") from exc

        tables = []
        try:
            for name in names:
                info = conn.execute(f"PRAGMA table_info({_quote_ident(name)})").fetchall()
                pk_cols = sorted((r[5], r[1]) for r in info if r[5])
                pk_names = {n for _, n in pk_cols}
                columns = tuple(
                    ColumnDef(
                        name=r[1],
                        data_type=normalize_type(r[2]),
                        not_null=bool(r[3]),
                        is_primary_key=r[1] in pk_names,
                    )
                    for r in info
                )
                # id 0 is the last declared key; sort descending for declaration order.
                fk_rows = conn.execute(
                    f"PRAGMA foreign_key_list({_quote_ident(name)})"
                ).fetchall()
                grouped: dict[int, list] = {}
                for r in fk_rows:
                    grouped.setdefault(r[0], []).append(r)
                fks = []
                for fk_id in sorted(grouped, reverse=True):
                    rows = sorted(grouped[fk_id], key=lambda r: r[1])
                    ref_table = rows[0][2]
                    local = tuple(r[3] for r in rows)
                    refs = [r[4] for r in rows]
                    if any(ref is None for ref in refs):
                        refs = _implicit_ref_columns(conn, ref_table, len(rows))
                    fks.append(ForeignKey(local, ref_table, tuple(refs)))
                tables.append(
                    TableDef(
                        name=name,
                        columns=columns,
                        primary_key=tuple(n for _, n in pk_cols),
                        foreign_keys=tuple(fks),
                    )
                )
        except sqlite3.Error as exc:
            raise CorruptCatalog(f"{db_path}: {exc}") from exc
        return DatabaseSchema(db_id=db_id, tables=tuple(tables))
    finally:
        conn.close()


def _implicit_ref_columns(conn, ref_table: str, arity: int) -> List[str]:
    # "REFERENCES t" with no column list points at t's primary key.
    info = conn.execute(f"PRAGMA table_info({_quote_ident(ref_table)})").fetchall()
    pk = [n for _, n in sorted((r[5], r[1]) for r in info if r[5])]
    if len(pk) != arity:
        raise CorruptCatalog(f"cannot resolve implicit foreign key target {ref_table}")
    return pk


def schema_from_tables_json(entry: dict) -> DatabaseSchema:
    try:
        db_id = entry["db_id"]
        table_names = list(entry["table_names_original"])
        raw_columns = list(entry["column_names_original"])
        types = list(entry["column_types"])
        primary_keys = list(entry.get("primary_keys", []))
        foreign_keys = list(entry.get("foreign_keys", []))
    except (KeyError, TypeError) as exc:
        raise MalformedTablesJson(f"missing tables.json field: {exc}") from exc
    if len(raw_columns) != len(types):
        raise MalformedTablesJson(
            f"{db_id}: {len(raw_columns)} columns but {len(types)} column types"
        )

    def column_at(idx) -> Tuple[int, str]:
        if not isinstance(idx, int) or not 0 <= idx < len(raw_columns):
            raise MalformedTablesJson(f"{db_id}: column index {idx!r} out of range")
        tidx, cname = raw_columns[idx]
        if tidx < 0:
            raise MalformedTablesJson(f"{db_id}: column index {idx} refers to '*'")
        return tidx, cname

    pk_by_table: dict[int, list] = {}
    for pk in primary_keys:
        group = pk if isinstance(pk, list) else [pk]
        for idx in group:
            tidx, cname = column_at(idx)
            pk_by_table.setdefault(tidx, []).append(cname)

    fk_by_table: dict[int, list] = {}
    for pair in foreign_keys:
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise MalformedTablesJson(f"{db_id}: foreign key entry {pair!r} is not a pair")
        lt, lc = column_at(pair[0])
        rt, rc = column_at(pair[1])
        fk_by_table.setdefault(lt, []).append(ForeignKey((lc,), table_names[rt], (rc,)))

    cols_by_table: dict[int, list] = {i: [] for i in range(len(table_names))}
    for idx, (tidx, cname) in enumerate(raw_columns):
        if tidx < 0:
            continue
        if tidx >= len(table_names):
            raise MalformedTablesJson(f"{db_id}: table index {tidx} out of range")
        ctype = str(types[idx]).lower()
        dtype = _SPIDER_TYPES.get(ctype) or normalize_type(ctype)
        pks = pk_by_table.get(tidx, [])
        cols_by_table[tidx].append(
            ColumnDef(cname, dtype, not_null=False, is_primary_key=cname in pks)
        )

    tables = tuple(
        TableDef(
            name=tname,
            columns=tuple(cols_by_table[i]),
            primary_key=tuple(pk_by_table.get(i, [])),
            foreign_keys=tuple(fk_by_table.get(i, [])),
        )
        for i, tname in enumerate(table_names)
    )
    return DatabaseSchema(db_id=db_id, tables=tables)


def validate_schema(schema: DatabaseSchema) -> List[str]:
    violations: List[str] = []
    seen_tables: set = set()
    for table in schema.tables:
        tlow = table.name.lower()
        if not table.name:
            violations.append("table with empty name")
        if tlow in seen_tables:
            violations.append(f"duplicate table name {table.name!r}")
        seen_tables.add(tlow)
        seen_cols: set = set()
        for col in table.columns:
            if not col.name:
                violations.append(f"table {table.name!r}: column with empty name")
            elif col.name.lower() in seen_cols:
                violations.append(f"table {table.name!r}: duplicate column {col.name!r}")
            seen_cols.add(col.name.lower())
        for name in table.primary_key:
            if table.column(name) is None:
                violations.append(
                    f"table {table.name!r}: primary key column {name!r} does not exist"
                )
        for fk in table.foreign_keys:
            for name in fk.columns:
                if table.column(name) is None:
                    violations.append(
                        f"table {table.name!r}: foreign key column {name!r} does not exist"
                    )
            target = schema.table(fk.ref_table)
            if target is None:
                violations.append(
                    f"table {table.name!r}: foreign key references missing table "
                    f"{fk.ref_table!r}"
                )
                continue
            if len(fk.ref_columns) != len(fk.columns):
                violations.append(
                    f"table {table.name!r}: foreign key arity mismatch with {fk.ref_table!r}"
                )
            for name in fk.ref_columns:
                if target.column(name) is None:
                    violations.append(
                        f"table {table.name!r}: foreign key references missing column "
                        f"{fk.ref_table}.{name}"
                    )
    return violations


def make_table(
    name: str,
    columns: Sequence[Tuple[str, str] | Tuple[str, str, bool]],
    primary_key: Sequence[str] = (),
    foreign_keys: Sequence[Tuple[Sequence[str], str, Sequence[str]]] = (),
) -> TableDef:
    """Convenience constructor: ``columns`` are ``(name, type[, not_null])`` tuples."""
    pk = tuple(primary_key)
    cols = []
    for spec in columns:
        cname, ctype = spec[0], spec[1]
        not_null = bool(spec[2]) if len(spec) > 2 else False
        cols.append(ColumnDef(cname, DataType(ctype), not_null, cname in pk))
    fks = tuple(ForeignKey(tuple(lc), rt, tuple(rc)) for lc, rt, rc in foreign_keys)
    return TableDef(name, tuple(cols), pk, fks)
