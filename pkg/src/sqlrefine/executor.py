"""Read-only SQL execution with a wall-clock budget, and result-set comparison."""

from __future__ import annotations

import enum
import math
import os
import re
import sqlite3
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, List, Optional, Tuple

from .errors import UnreadableDatabase
from .lexer import strip_leading_comments, top_level_semicolon
from .schema import open_readonly

DEFAULT_TIMEOUT_MS = 5000
REL_TOL = 1e-6


class OutcomeKind(str, enum.Enum):
    RESULT = "RESULT"
    ERROR = "ERROR"
    TIMEOUT = "TIMEOUT"


class ErrorKind(str, enum.Enum):
    SYNTAX = "SYNTAX"
    NO_SUCH_TABLE = "NO_SUCH_TABLE"
    NO_SUCH_COLUMN = "NO_SUCH_COLUMN"
    NON_READONLY = "NON_READONLY"
    OTHER = "OTHER"


@dataclass(frozen=True)
class ExecutionOutcome:
    kind: OutcomeKind
    rows: Optional[Tuple[tuple, ...]] = None
    column_names: Optional[Tuple[str, ...]] = None
    error_kind: Optional[ErrorKind] = None
    message: Optional[str] = None
    elapsed: float = field(default=0.0, compare=False)

    @classmethod
    def result(cls, columns, rows, elapsed=0.0):
        return cls(OutcomeKind.RESULT, tuple(tuple(r) for r in rows), tuple(columns), elapsed=elapsed)

    @classmethod
    def error(cls, kind: ErrorKind, message: str, elapsed=0.0):
        return cls(OutcomeKind.ERROR, error_kind=kind, message=message, elapsed=elapsed)

    @classmethod
    def timeout(cls, elapsed=0.0, budget_ms=None):
        msg = "query exceeded the time limit"
        if budget_ms is not None:
            msg += f" of {budget_ms} ms"
        return cls(OutcomeKind.TIMEOUT, message=msg, elapsed=elapsed)

    @property
    def ok(self) -> bool:
        return self.kind is OutcomeKind.RESULT

    def feedback(self) -> str:
        """Message shown to the generator when this outcome is a failure."""
        if self.kind is OutcomeKind.TIMEOUT:
            return self.message or "query timed out"
        return self.message or ""

    def to_dict(self) -> dict:
        # Wall-clock time is deliberately left out so logs stay reproducible.
        out: dict = {"kind": self.kind.value}
        if self.kind is OutcomeKind.RESULT:
            out["column_names"] = list(self.column_names)
            out["row_count"] = len(self.rows)
        elif self.kind is OutcomeKind.ERROR:
            out["error_kind"] = self.error_kind.value
            out["message"] = self.message
        else:
            out["message"] = self.message
        return out


_ALLOWED_ACTIONS = frozenset(
    {
        sqlite3.SQLITE_SELECT,
        sqlite3.SQLITE_READ,
        sqlite3.SQLITE_FUNCTION,
        getattr(sqlite3, "SQLITE_RECURSIVE", 33),
    }
)


def _authorizer(action, arg1, arg2, db_name, trigger):
    return sqlite3.SQLITE_OK if action in _ALLOWED_ACTIONS else sqlite3.SQLITE_DENY


_READ_START = re.compile(r"^(?:select|with)\b", re.IGNORECASE)


def readonly_gate(sql: str) -> Optional[str]:
    """Return a rejection message if ``sql`` is not a single SELECT/WITH query."""
    body = strip_leading_comments(sql)
    if not _READ_START.match(body):
        first = body.split(None, 1)[0] if body.split() else ""
        return f"only SELECT/WITH queries are allowed (got {first[:20]!r})"
    cut = top_level_semicolon(body)
    if cut >= 0 and strip_leading_comments(body[cut + 1 :]).strip(" \t\r\n;"):
        return "multiple statements are not allowed"
    return None


def classify_error(message: str) -> ErrorKind:
    low = message.lower()
    if "not authorized" in low or "readonly" in low or "read-only" in low:
        return ErrorKind.NON_READONLY
    if "no such table" in low:
        return ErrorKind.NO_SUCH_TABLE
    if "no such column" in low:
        return ErrorKind.NO_SUCH_COLUMN
    if "syntax error" in low or "incomplete input" in low or "unrecognized token" in low:
        return ErrorKind.SYNTAX
    return ErrorKind.OTHER


def execute_readonly(db_path: str | os.PathLike, sql: str, timeout: float = DEFAULT_TIMEOUT_MS) -> ExecutionOutcome:
    """Run ``sql`` on a read-only connection. Failures are returned, not raised."""
    start = time.monotonic()
    rejection = readonly_gate(sql)
    if rejection is not None:
        return ExecutionOutcome.error(ErrorKind.NON_READONLY, rejection)

    conn = open_readonly(db_path)
    deadline = start + timeout / 1000.0
    timed_out = False

    def _check_deadline():
        nonlocal timed_out
        if time.monotonic() > deadline:
            timed_out = True
            return 1
        return 0

    try:
        conn.set_authorizer(_authorizer)
        conn.set_progress_handler(_check_deadline, 1000)
        try:
            cur = conn.execute(sql)
            rows = cur.fetchall()
            columns = [d[0] for d in cur.description or ()]
        except sqlite3.Warning as exc:
            # Raised for trailing statements the gate did not catch.
            return ExecutionOutcome.error(ErrorKind.NON_READONLY, str(exc), _ms_since(start))
        except sqlite3.Error as exc:
            if timed_out:
                return ExecutionOutcome.timeout(_ms_since(start), timeout)
            msg = str(exc)
            if "file is not a database" in msg:
                raise UnreadableDatabase(f"{db_path}: {msg}") from exc
            return ExecutionOutcome.error(classify_error(msg), msg, _ms_since(start))
        except (ValueError, OverflowError) as exc:
            return ExecutionOutcome.error(ErrorKind.OTHER, str(exc), _ms_since(start))
        return ExecutionOutcome.result(columns, rows, _ms_since(start))
    finally:
        conn.close()


def _ms_since(start: float) -> float:
    return (time.monotonic() - start) * 1000.0


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def cells_equal(a: Any, b: Any) -> bool:
    if a is None or b is None:
        return a is None and b is None
    if _is_number(a) and _is_number(b):
        if isinstance(a, int) and isinstance(b, int):
            return a == b
        return math.isclose(a, b, rel_tol=REL_TOL)
    if _is_number(a) or _is_number(b):
        return False
    return type(a) is type(b) and a == b


def rows_equal(a: tuple, b: tuple) -> bool:
    return len(a) == len(b) and all(cells_equal(x, y) for x, y in zip(a, b))


def _exact_key(row: tuple) -> tuple:
    return tuple(
        ("n", v) if _is_number(v) else (type(v).__name__, v) for v in row
    )


def compare_results(predicted: ExecutionOutcome, gold: ExecutionOutcome, order_sensitive: bool = False) -> bool:
    if not (predicted.ok and gold.ok):
        return False
    prows, grows = predicted.rows, gold.rows
    if len(prows) != len(grows):
        return False
    if prows and len(prows[0]) != len(grows[0]):
        return False
    if len(predicted.column_names) != len(gold.column_names):
        return False
    if order_sensitive:
        return all(rows_equal(p, g) for p, g in zip(prows, grows))

    # Multiset match: cancel exactly-equal rows first, then pair up the rest
    # under the numeric tolerance.
    pending = Counter(_exact_key(r) for r in grows)
    leftover_pred: List[tuple] = []
    for row in prows:
        key = _exact_key(row)
        if pending[key] > 0:
            pending[key] -= 1
        else:
            leftover_pred.append(row)
    if not leftover_pred:
        return True
    leftover_gold: List[tuple] = []
    remaining = +pending
    for row in grows:
        key = _exact_key(row)
        if remaining[key] > 0:
            remaining[key] -= 1
            leftover_gold.append(row)
    for row in leftover_pred:
        for i, candidate in enumerate(leftover_gold):
            if rows_equal(row, candidate):
                del leftover_gold[i]
                break
        else:
            return False
    return not leftover_gold
