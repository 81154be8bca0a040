"""Canonical clause components of a parsed query, and the Exact Set Match test."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Dict, FrozenSet, List, NamedTuple, Optional, Tuple

from ..errors import AmbiguousColumn, ParseFailure
from ..schema import DatabaseSchema
from .parser import RawSelect, parse_raw

VALUE = ("val", "VALUE")
_MIRROR = {"<": ">", ">": "<", "<=": ">=", ">=": "<=", "=": "=", "!=": "!="}
_COMMUTATIVE = frozenset({"+", "*"})


class ValueMode(str, enum.Enum):
    EXACT = "exact"
    IGNORE = "ignore"


class Predicate(NamedTuple):
    left: Optional[tuple]
    op: str
    right: Optional[tuple]
    negated: bool = False


@dataclass(frozen=True)
class QueryComponents:
    """Clause-by-clause canonical form of one SELECT (plus any set operation).

    Column references are ``("col", "table.column")`` after alias resolution.
    Unordered clauses are frozensets; ``subqueries`` is a multiset stored as
    ``frozenset({(components, count)})``.
    """

    distinct: bool
    select: FrozenSet[tuple]
    from_tables: FrozenSet[str]
    join_conditions: FrozenSet[Tuple[tuple, str, tuple]]
    where: FrozenSet[Predicate]
    where_connectives: Tuple[str, ...]
    group_by: FrozenSet[tuple]
    having: FrozenSet[Predicate]
    having_connectives: Tuple[str, ...]
    order_by: Tuple[Tuple[tuple, str], ...]
    limit: Optional[object]
    set_op: Optional[Tuple[str, "QueryComponents"]]
    subqueries: FrozenSet[Tuple["QueryComponents", int]]

    @property
    def subquery_count(self) -> int:
        return sum(n for _, n in self.subqueries)


class _Scope:
    def __init__(self, parent: Optional["_Scope"] = None):
        self.parent = parent
        self.aliases: Dict[str, str] = {}
        self.entries: List[Tuple[str, str]] = []  # (alias or name, canonical table)

    def chain(self):
        scope = self
        while scope is not None:
            yield scope
            scope = scope.parent


def _multiset(items) -> frozenset:
    return frozenset(Counter(items).items())


def _normalize_number(text: str) -> str:
    try:
        d = Decimal(text).normalize()
    except InvalidOperation:
        return text
    if d == d.to_integral_value():
        return str(int(d))
    return format(d, "f")


class Canonicalizer:
    def __init__(self, schema: Optional[DatabaseSchema], value_mode: ValueMode = ValueMode.IGNORE):
        self.schema = schema
        self.value_mode = ValueMode(value_mode)

    # tables and columns
    def _table_name(self, name: str, pos: int) -> str:
        if self.schema is None:
            return name.lower()
        table = self.schema.table(name)
        if table is None:
            raise ParseFailure(f"no such table {name!r}", pos)
        return table.name.lower()

    def _has_column(self, table: str, column: str) -> bool:
        if self.schema is None:
            return True
        t = self.schema.table(table)
        return t is not None and t.column(column) is not None

    def _resolve_column(self, qual, name, pos, scope: _Scope, select_aliases) -> tuple:
        col = name.lower()
        if qual is not None:
            q = qual.lower()
            for s in scope.chain():
                if q in s.aliases:
                    table = s.aliases[q]
                    if not self._has_column(table, col):
                        raise ParseFailure(f"no such column {qual}.{name}", pos)
                    return ("col", f"{table}.{col}")
            raise ParseFailure(f"unknown table or alias {qual!r}", pos)
        for s in scope.chain():
            matches = [(key, t) for key, t in s.entries if self._has_column(t, col)]
            if len(matches) == 1:
                return ("col", f"{matches[0][1]}.{col}")
            if len(matches) > 1:
                raise AmbiguousColumn(name, [key for key, _ in matches], pos)
        if select_aliases and col in select_aliases:
            return select_aliases[col]
        raise ParseFailure(f"no such column {name!r}", pos)

    # expressions
    def expr(self, node, scope: _Scope, aliases=None, prefer_alias=False) -> tuple:
        tag = node[0]
        if tag == "col":
            _, qual, name, pos = node
            if prefer_alias and qual is None and aliases and name.lower() in aliases:
                return aliases[name.lower()]
            return self._resolve_column(qual, name, pos, scope, aliases)
        if tag == "star":
            if node[1] is None:
                return ("star", "*")
            q = node[1].lower()
            for s in scope.chain():
                if q in s.aliases:
                    return ("star", f"{s.aliases[q]}.*")
            raise ParseFailure(f"unknown table or alias {node[1]!r}")
        if tag == "num":
            if self.value_mode is ValueMode.IGNORE:
                return VALUE
            return ("val", "n:" + _normalize_number(node[1]))
        if tag == "str":
            if self.value_mode is ValueMode.IGNORE:
                return VALUE
            return ("val", "s:" + node[1])
        if tag == "null":
            return ("null",)
        if tag == "neg":
            return ("neg", self.expr(node[1], scope, aliases, prefer_alias))
        if tag == "binop":
            left = self.expr(node[2], scope, aliases, prefer_alias)
            right = self.expr(node[3], scope, aliases, prefer_alias)
            if node[1] in _COMMUTATIVE and sort_key(right) < sort_key(left):
                left, right = right, left
            return ("binop", node[1], left, right)
        if tag == "agg":
            return ("agg", node[1], node[2], self.expr(node[3], scope, aliases, prefer_alias))
        if tag == "func":
            return ("func", node[1], tuple(self.expr(a, scope, aliases, prefer_alias) for a in node[2]))
        if tag == "sub":
            return ("sub", self.query(node[1], scope))
        raise ParseFailure(f"unsupported expression {tag!r}")

    # conditions
    def _flatten(self, cond, out_preds: list, out_conns: list, negate: bool = False):
        tag = cond[0]
        if tag == "not":
            self._flatten(cond[1], out_preds, out_conns, not negate)
        elif tag in ("and", "or"):
            if negate:
                raise ParseFailure("NOT applied to a compound condition is outside the supported grammar")
            out_conns.extend([tag] * (len(cond[1]) - 1))
            for part in cond[1]:
                self._flatten(part, out_preds, out_conns)
        else:
            _, op, left, right, neg = cond
            out_preds.append((op, left, right, neg != negate))

    def predicate(self, raw, scope: _Scope, aliases=None) -> Predicate:
        op, left, right, negated = raw
        if op == "exists":
            return Predicate(None, "exists", self.expr(right, scope), negated)
        lhs = self.expr(left, scope, aliases)
        if op == "in":
            if right[0] == "sub":
                rhs = ("sub", self.query(right[1], scope))
            elif self.value_mode is ValueMode.IGNORE and all(v[0] in ("num", "str") for v in right[1]):
                rhs = VALUE
            else:
                vals = sorted({self.expr(v, scope, aliases) for v in right[1]}, key=sort_key)
                rhs = ("list", tuple(vals))
            return Predicate(lhs, "in", rhs, negated)
        if op == "between":
            rhs = ("range", self.expr(right[1], scope, aliases), self.expr(right[2], scope, aliases))
            return Predicate(lhs, "between", rhs, negated)
        if op == "is":
            return Predicate(lhs, "is", ("null",), negated)
        rhs = self.expr(right, scope, aliases)
        if op in _MIRROR:
            lhs_const = lhs[0] in ("val", "null")
            rhs_const = rhs[0] in ("val", "null")
            if (lhs_const and not rhs_const) or (
                lhs_const == rhs_const and op in ("=", "!=") and sort_key(rhs) < sort_key(lhs)
            ):
                lhs, rhs, op = rhs, lhs, _MIRROR[op]
        return Predicate(lhs, op, rhs, negated)

    def condition(self, cond, scope, aliases=None):
        preds: list = []
        conns: list = []
        if cond is not None:
            self._flatten(cond, preds, conns)
        return [self.predicate(p, scope, aliases) for p in preds], conns

    # queries
    def query(self, raw: RawSelect, parent: Optional[_Scope] = None) -> QueryComponents:
        scope = _Scope(parent)
        for ref in raw.tables:
            table = self._table_name(ref.name, ref.pos)
            key = (ref.alias or ref.name).lower()
            if key in scope.aliases and ref.alias is not None:
                raise ParseFailure(f"duplicate table alias {ref.alias!r}", ref.pos)
            scope.aliases[key] = table
            scope.aliases.setdefault(ref.name.lower(), table)
            scope.entries.append((key, table))

        select_exprs = []
        aliases: Dict[str, tuple] = {}
        for node, alias in raw.items:
            e = self.expr(node, scope)
            select_exprs.append(e)
            if alias:
                aliases[alias.lower()] = e

        where_preds, where_conns = self.condition(raw.where, scope, aliases)
        joins = set()
        for on in raw.join_on:
            preds, conns = self.condition(on, scope, aliases)
            if any(c != "and" for c in conns):
                raise ParseFailure("OR inside JOIN ... ON is outside the supported grammar")
            for p in preds:
                if _is_join_predicate(p, scope):
                    joins.add(_join_tuple(p))
                else:
                    if where_preds:
                        where_conns.append("and")
                    where_preds.append(p)

        # Comma joins: move table-linking equalities out of an all-AND WHERE.
        if where_preds and all(c == "and" for c in where_conns):
            kept = []
            for p in where_preds:
                if _is_join_predicate(p, scope):
                    joins.add(_join_tuple(p))
                else:
                    kept.append(p)
            where_preds = kept
            where_conns = ["and"] * max(len(kept) - 1, 0)

        having_preds, having_conns = self.condition(raw.having, scope, aliases)
        group_by = frozenset(self.expr(g, scope, aliases) for g in raw.group_by)
        order_by = tuple(
            (self.expr(e, scope, aliases, prefer_alias=True), d) for e, d in raw.order_by
        )
        if raw.limit is None:
            limit = None
        elif self.value_mode is ValueMode.IGNORE:
            limit = "VALUE"
        else:
            limit = int(raw.limit)

        set_op = None
        if raw.set_op is not None:
            set_op = (raw.set_op[0], self.query(raw.set_op[1], parent))

        subs = []
        for e in select_exprs + list(group_by) + [e for e, _ in order_by]:
            subs.extend(_find_subqueries(e))
        for p in where_preds + having_preds:
            for part in (p.left, p.right):
                if part is not None:
                    subs.extend(_find_subqueries(part))

        return QueryComponents(
            distinct=raw.distinct,
            select=frozenset(select_exprs),
            from_tables=frozenset(t for _, t in scope.entries),
            join_conditions=frozenset(joins),
            where=frozenset(where_preds),
            where_connectives=tuple(sorted(where_conns)),
            group_by=group_by,
            having=frozenset(having_preds),
            having_connectives=tuple(sorted(having_conns)),
            order_by=order_by,
            limit=limit,
            set_op=set_op,
            subqueries=_multiset(subs),
        )


def _is_join_predicate(p: Predicate, scope: _Scope) -> bool:
    if p.op != "=" or p.negated or p.left is None or p.right is None:
        return False
    if p.left[0] != "col" or p.right[0] != "col":
        return False
    lt = p.left[1].rsplit(".", 1)[0]
    rt = p.right[1].rsplit(".", 1)[0]
    local = {t for _, t in scope.entries}
    return lt != rt and lt in local and rt in local


def _join_tuple(p: Predicate) -> Tuple[tuple, str, tuple]:
    a, b = sorted((p.left, p.right), key=sort_key)
    return (a, "=", b)


def _find_subqueries(node) -> List["QueryComponents"]:
    """Subqueries directly inside ``node`` (not those nested in other subqueries)."""
    if isinstance(node, QueryComponents):
        return []
    if isinstance(node, tuple):
        if len(node) == 2 and node[0] == "sub" and isinstance(node[1], QueryComponents):
            return [node[1]]
        found = []
        for part in node:
            found.extend(_find_subqueries(part))
        return found
    return []


# Deterministic rendering, used for sorting and for human-readable diffs.
def render(node) -> str:
    if node is None:
        return "-"
    if isinstance(node, QueryComponents):
        return "{" + "; ".join(f"{k}={v}" for k, v in component_texts(node).items()) + "}"
    if isinstance(node, Predicate):
        neg = "not " if node.negated else ""
        if node.op == "exists":
            return f"{neg}exists {render(node.right)}"
        return f"{render(node.left)} {neg}{node.op} {render(node.right)}"
    if isinstance(node, tuple) and node and isinstance(node[0], str):
        tag = node[0]
        if tag == "col":
            return node[1]
        if tag == "star":
            return node[1]
        if tag == "val":
            if node[1] == "VALUE":
                return "VALUE"
            if node[1].startswith("s:"):
                return repr(node[1][2:])
            return node[1][2:]
        if tag == "null":
            return "null"
        if tag == "neg":
            return f"-({render(node[1])})"
        if tag == "binop":
            return f"({render(node[2])} {node[1]} {render(node[3])})"
        if tag == "agg":
            inner = ("distinct " if node[2] else "") + render(node[3])
            return f"{node[1]}({inner})"
        if tag == "func":
            return f"{node[1]}(" + ", ".join(render(a) for a in node[2]) + ")"
        if tag == "sub":
            return "(" + render(node[1]) + ")"
        if tag == "list":
            return "(" + ", ".join(render(v) for v in node[1]) + ")"
        if tag == "range":
            return f"{render(node[1])} and {render(node[2])}"
    if isinstance(node, tuple):
        return "(" + ", ".join(render(x) for x in node) + ")"
    return str(node)


def sort_key(node) -> str:
    return render(node)


def _sorted_set(items) -> str:
    return "[" + ", ".join(sorted(render(x) for x in items)) + "]"


def component_texts(q: QueryComponents) -> Dict[str, str]:
    """One deterministic string per clause field."""
    return {
        "distinct": str(q.distinct).lower(),
        "select": _sorted_set(q.select),
        "from": _sorted_set(q.from_tables),
        "join": "[" + ", ".join(sorted(f"{render(a)} = {render(b)}" for a, _, b in q.join_conditions)) + "]",
        "where": _sorted_set(q.where),
        "where_connectives": "[" + ", ".join(q.where_connectives) + "]",
        "group_by": _sorted_set(q.group_by),
        "having": _sorted_set(q.having),
        "having_connectives": "[" + ", ".join(q.having_connectives) + "]",
        "order_by": "[" + ", ".join(f"{render(e)} {d}" for e, d in q.order_by) + "]",
        "limit": "-" if q.limit is None else str(q.limit),
        "set_op": "-" if q.set_op is None else f"{q.set_op[0]} {render(q.set_op[1])}",
        "subqueries": "["
        + ", ".join(sorted(f"{render(s)}x{n}" for s, n in q.subqueries))
        + "]",
    }


def parse_sql(
    sql: str,
    schema: Optional[DatabaseSchema] = None,
    value_mode: ValueMode | str = ValueMode.IGNORE,
) -> QueryComponents:
    """Parse ``sql`` into canonical components.

    Raises ParseFailure for out-of-grammar input and AmbiguousColumn when an
    unqualified column matches more than one table in scope.
    """
    raw = parse_raw(sql)
    return Canonicalizer(schema, ValueMode(value_mode)).query(raw)


def exact_set_match(pred: QueryComponents, gold: QueryComponents) -> bool:
    return pred == gold


def component_diff(a: QueryComponents, b: QueryComponents) -> Dict[str, Tuple[str, str]]:
    ta, tb = component_texts(a), component_texts(b)
    return {k: (ta[k], tb[k]) for k in ta if ta[k] != tb[k]}

