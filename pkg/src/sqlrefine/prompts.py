"""Prompt construction: schema serialization plus the question, and repair rounds."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Tuple

from .errors import EmptyFeedback, InvalidSchema
from .schema import DatabaseSchema, DataType, TableDef, validate_schema

PREAMBLE = (
    "Write a SQL query that answers the question using only the schema below. "
    "Output SQL only."
)
REPAIR_INSTRUCTIONS = "Revise the SQL to fix the error. Output SQL only."


class SchemaStyle(str, enum.Enum):
    DDL = "ddl"
    COMPACT = "compact"


_PLAIN_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
SQLITE_KEYWORDS = frozenset(
    """
    abort action add after all alter always analyze and as asc attach autoincrement
    before begin between by cascade case cast check collate column commit conflict
    constraint create cross current current_date current_time current_timestamp
    database default deferrable deferred delete desc detach distinct do drop each
    else end escape except exclude exclusive exists explain fail filter first
    following for foreign from full generated glob group groups having if ignore
    immediate in index indexed initially inner insert instead intersect into is
    isnull join key last left like limit match materialized natural no not nothing
    notnull null nulls of offset on or order others outer over partition plan
    pragma preceding primary query raise range recursive references regexp reindex
    release rename replace restrict returning right rollback row rows savepoint
    select set table temp temporary then ties to transaction trigger unbounded
    union unique update using vacuum values view virtual when where window with
    without
    """.split()
)


def quote_identifier(name: str) -> str:
    if _PLAIN_IDENT.match(name) and name.lower() not in SQLITE_KEYWORDS:
        return name
    return '"' + name.replace('"', '""') + '"'


def _type_sql(dtype: DataType) -> str:
    # NUMERIC affinity introspects back to UNKNOWN.
    return "NUMERIC" if dtype is DataType.UNKNOWN else dtype.value


def _table_ddl(table: TableDef) -> str:
    inline_pk = len(table.primary_key) == 1
    parts = []
    for col in table.columns:
        piece = f"{quote_identifier(col.name)} {_type_sql(col.data_type)}"
        if col.not_null:
            piece += " NOT NULL"
        if inline_pk and col.name == table.primary_key[0]:
            piece += " PRIMARY KEY"
        parts.append(piece)
    if len(table.primary_key) > 1:
        cols = ", ".join(quote_identifier(c) for c in table.primary_key)
        parts.append(f"PRIMARY KEY ({cols})")
    for fk in table.foreign_keys:
        local = ", ".join(quote_identifier(c) for c in fk.columns)
        ref = ", ".join(quote_identifier(c) for c in fk.ref_columns)
        parts.append(
            f"FOREIGN KEY ({local}) REFERENCES {quote_identifier(fk.ref_table)} ({ref})"
        )
    return f"CREATE TABLE {quote_identifier(table.name)} ({', '.join(parts)});"


def serialize_schema(schema: DatabaseSchema, style: SchemaStyle | str = SchemaStyle.DDL) -> str:
    """Render ``schema`` one table per line.

    DDL style emits ``CREATE TABLE`` statements that SQLite can execute;
    COMPACT emits ``table(col1, col2)``.
    """
    style = SchemaStyle(style)
    violations = validate_schema(schema)
    if violations:
        raise InvalidSchema(violations)
    if style is SchemaStyle.DDL:
        lines = [_table_ddl(t) for t in schema.tables]
    else:
        lines = [
            f"{quote_identifier(t.name)}({', '.join(quote_identifier(c.name) for c in t.columns)})"
            for t in schema.tables
        ]
    return "\n".join(lines)


def render_prompt(
    preamble: str, schema_block: str, question: str, attempts: Tuple[Tuple[str, str], ...]
) -> str:
    out = [f"### Task\n{preamble}\n### Schema\n{schema_block}\n### Question\n{question}\n"]
    if attempts:
        for k, (sql, message) in enumerate(attempts, start=1):
            out.append(f"### Previous attempt {k}\n{sql}\n### Error\n{message}\n")
        out.append(f"### Instructions\n{REPAIR_INSTRUCTIONS}\n")
    out.append("### SQL\n")
    return "".join(out)


@dataclass(frozen=True)
class PromptEnvelope:
    preamble: str
    schema_block: str
    question: str
    attempts: Tuple[Tuple[str, str], ...] = ()
    rendered: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(
            self,
            "rendered",
            render_prompt(self.preamble, self.schema_block, self.question, self.attempts),
        )


def build_initial_prompt(
    schema: DatabaseSchema, question: str, style: SchemaStyle | str = SchemaStyle.DDL
) -> PromptEnvelope:
    if not question or not question.strip():
        raise ValueError("question must be non-empty")
    return PromptEnvelope(PREAMBLE, serialize_schema(schema, style), question)


def build_repair_prompt(base: PromptEnvelope, failed_sql: str, error_message: str) -> PromptEnvelope:
    if not failed_sql or not failed_sql.strip():
        raise EmptyFeedback("failed_sql must be non-empty")
    if not error_message or not error_message.strip():
        raise EmptyFeedback("error_message must be non-empty")
    return PromptEnvelope(
        base.preamble,
        base.schema_block,
        base.question,
        base.attempts + ((failed_sql, error_message),),
    )
