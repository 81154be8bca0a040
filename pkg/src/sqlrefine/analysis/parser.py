"""Recursive-descent parser for the supported SELECT subset.

Produces an unresolved syntax tree: column references still carry their
written qualifier (alias or table name). Expressions and conditions are
plain tuples tagged by their first element:

    ("col", qualifier | None, name, pos)   ("star", qualifier | None)
    ("num", text)  ("str", text)  ("null",)  ("neg", expr)
    ("binop", op, left, right)   ("agg", name, distinct, arg)
    ("func", name, args)         ("sub", RawSelect)

    ("and", [cond, ...])  ("or", [cond, ...])  ("not", cond)
    ("pred", op, left, right, negated)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from ..errors import ParseFailure
from ..lexer import Token, tokenize

AGGREGATES = frozenset({"count", "sum", "avg", "min", "max"})
COMPARISONS = {"=": "=", "==": "=", "!=": "!=", "<>": "!=", "<": "<", ">": ">", "<=": "<=", ">=": ">="}
SET_OPS = ("union", "intersect", "except")


@dataclass
class TableRef:
    name: str
    alias: Optional[str]
    pos: int


@dataclass
class RawSelect:
    distinct: bool = False
    items: List[Tuple[tuple, Optional[str]]] = field(default_factory=list)
    tables: List[TableRef] = field(default_factory=list)
    join_on: List[tuple] = field(default_factory=list)
    where: Optional[tuple] = None
    group_by: List[tuple] = field(default_factory=list)
    having: Optional[tuple] = None
    order_by: List[Tuple[tuple, str]] = field(default_factory=list)
    limit: Optional[str] = None
    set_op: Optional[Tuple[str, "RawSelect"]] = None


class Parser:
    def __init__(self, sql: str):
        self.sql = sql
        self.tokens: List[Token] = tokenize(sql)
        self.i = 0

    # token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        raise ParseFailure(message, tok.pos)

    def accept_kw(self, *words: str) -> Optional[str]:
        if self.tok.is_kw(*words):
            return self.advance().value.lower()
        return None

    def expect_kw(self, word: str):
        if not self.accept_kw(word):
            self.fail(f"expected {word.upper()}, found {self.tok.value or 'end of input'!r}")

    def expect(self, kind: str, what: str):
        if self.tok.kind != kind:
            self.fail(f"expected {what}, found {self.tok.value or 'end of input'!r}")
        return self.advance()

    # entry point
    def parse(self) -> RawSelect:
        query = self.parse_query()
        while self.tok.kind == "SEMI":
            self.advance()
        if self.tok.kind != "EOF":
            self.fail(f"unexpected trailing input {self.tok.value!r}")
        return query

    def parse_query(self) -> RawSelect:
        if self.tok.is_kw("with"):
            self.fail("WITH clauses are outside the supported grammar")
        if self.tok.is_kw("values"):
            self.fail("VALUES queries are outside the supported grammar")
        core = self.parse_select_core()
        op = self.accept_kw(*SET_OPS)
        if op:
            if self.tok.is_kw("all"):
                self.fail(f"{op.upper()} ALL is outside the supported grammar")
            core.set_op = (op, self.parse_query())
        return core

    def parse_select_core(self) -> RawSelect:
        self.expect_kw("select")
        q = RawSelect()
        if self.accept_kw("distinct"):
            q.distinct = True
        else:
            self.accept_kw("all")
        q.items.append(self.parse_select_item())
        while self.tok.kind == "COMMA":
            self.advance()
            q.items.append(self.parse_select_item())
        if self.accept_kw("from"):
            self.parse_from(q)
        if self.accept_kw("where"):
            q.where = self.parse_cond()
        if self.accept_kw("group"):
            self.expect_kw("by")
            q.group_by.append(self.parse_expr())
            while self.tok.kind == "COMMA":
                self.advance()
                q.group_by.append(self.parse_expr())
        if self.accept_kw("having"):
            q.having = self.parse_cond()
        if self.accept_kw("order"):
            self.expect_kw("by")
            q.order_by.append(self.parse_order_item())
            while self.tok.kind == "COMMA":
                self.advance()
                q.order_by.append(self.parse_order_item())
        if self.accept_kw("limit"):
            tok = self.expect("NUMBER", "a LIMIT count")
            if "." in tok.value or "e" in tok.value.lower():
                self.fail("LIMIT must be an integer", tok)
            q.limit = tok.value
            if self.tok.is_kw("offset") or self.tok.kind == "COMMA":
                self.fail("LIMIT offsets are outside the supported grammar")
        return q

    def parse_select_item(self):
        if self.tok.kind == "OP" and self.tok.value == "*":
            self.advance()
            return ("star", None), None
        if (
            self.tok.kind in ("WORD", "QIDENT")
            and self.peek().kind == "DOT"
            and self.peek(2).kind == "OP"
            and self.peek(2).value == "*"
        ):
            qual = self.advance().value
            self.advance()
            self.advance()
            return ("star", qual), None
        expr = self.parse_expr()
        return expr, self.parse_alias()

    def parse_alias(self) -> Optional[str]:
        if self.accept_kw("as"):
            tok = self.tok
            if tok.kind in ("QIDENT", "STRING") or (tok.kind == "WORD" and tok.keyword is None):
                return self.advance().value
            self.fail("expected an alias after AS")
        if self.tok.kind == "QIDENT" or (self.tok.kind == "WORD" and self.tok.keyword is None):
            return self.advance().value
        return None

    def parse_order_item(self):
        expr = self.parse_expr()
        direction = self.accept_kw("asc", "desc") or "asc"
        if self.tok.is_kw("nulls") or self.tok.is_kw("collate"):
            self.fail("ORDER BY modifiers are outside the supported grammar")
        return expr, direction

    def parse_table_ref(self) -> TableRef:
        if self.tok.kind == "LPAREN":
            self.fail("derived tables in FROM are outside the supported grammar")
        tok = self.tok
        if not (tok.kind == "QIDENT" or (tok.kind == "WORD" and tok.keyword is None)):
            self.fail(f"expected a table name, found {tok.value or 'end of input'!r}")
        self.advance()
        if self.tok.kind == "DOT":
            self.fail("schema-qualified table names are outside the supported grammar")
        return TableRef(tok.value, self.parse_alias(), tok.pos)

    def parse_from(self, q: RawSelect):
        q.tables.append(self.parse_table_ref())
        while True:
            if self.tok.kind == "COMMA":
                self.advance()
                q.tables.append(self.parse_table_ref())
                continue
            if self.tok.is_kw("left", "right", "full", "natural", "outer"):
                self.fail("outer and natural joins are outside the supported grammar")
            if self.tok.is_kw("inner", "cross") and self.peek().is_kw("join"):
                self.advance()
            if self.accept_kw("join"):
                q.tables.append(self.parse_table_ref())
                if self.accept_kw("on"):
                    q.join_on.append(self.parse_cond())
                elif self.tok.is_kw("using"):
                    self.fail("JOIN ... USING is outside the supported grammar")
                continue
            return

    # conditions
    def parse_cond(self):
        parts = [self.parse_and()]
        while self.accept_kw("or"):
            parts.append(self.parse_and())
        return parts[0] if len(parts) == 1 else ("or", parts)

    def parse_and(self):
        parts = [self.parse_not()]
        while self.accept_kw("and"):
            parts.append(self.parse_not())
        return parts[0] if len(parts) == 1 else ("and", parts)

    def parse_not(self):
        if self.tok.is_kw("not"):
            self.advance()
            return ("not", self.parse_not())
        if self.tok.kind == "LPAREN" and not self.peek().is_kw("select"):
            saved = self.i
            try:
                self.advance()
                cond = self.parse_cond()
                self.expect("RPAREN", "')'")
            except ParseFailure:
                self.i = saved
            else:
                nxt = self.tok
                continues_expr = (nxt.kind == "OP") or nxt.is_kw(
                    "in", "like", "between", "is", "not", "glob"
                )
                if not continues_expr:
                    return cond
                self.i = saved
        return self.parse_predicate()

    def parse_predicate(self):
        if self.tok.is_kw("exists"):
            self.advance()
            return ("pred", "exists", None, self.parse_paren_subquery(), False)
        left = self.parse_expr()
        negated = bool(self.accept_kw("not"))
        tok = self.tok
        if self.accept_kw("in"):
            self.expect("LPAREN", "'(' after IN")
            if self.tok.is_kw("select"):
                right = ("sub", self.parse_query())
            else:
                values = [self.parse_expr()]
                while self.tok.kind == "COMMA":
                    self.advance()
                    values.append(self.parse_expr())
                right = ("list", values)
            self.expect("RPAREN", "')'")
            return ("pred", "in", left, right, negated)
        if self.accept_kw("like"):
            right = self.parse_expr()
            if self.tok.is_kw("escape"):
                self.fail("LIKE ... ESCAPE is outside the supported grammar")
            return ("pred", "like", left, right, negated)
        if self.accept_kw("between"):
            lo = self.parse_expr()
            self.expect_kw("and")
            hi = self.parse_expr()
            return ("pred", "between", left, ("range", lo, hi), negated)
        if negated:
            self.fail("NOT must be followed by IN, LIKE or BETWEEN here", tok)
        if self.accept_kw("is"):
            neg = bool(self.accept_kw("not"))
            if not self.accept_kw("null"):
                self.fail("only IS [NOT] NULL is supported")
            return ("pred", "is", left, ("null",), neg)
        if tok.kind == "OP" and tok.value in COMPARISONS:
            self.advance()
            right = self.parse_expr()
            return ("pred", COMPARISONS[tok.value], left, right, False)
        if tok.is_kw("glob"):
            self.fail("GLOB is outside the supported grammar")
        self.fail(f"expected a comparison, found {tok.value or 'end of input'!r}")

    def parse_paren_subquery(self):
        self.expect("LPAREN", "'('")
        if not self.tok.is_kw("select"):
            self.fail("expected a subquery")
        sub = self.parse_query()
        self.expect("RPAREN", "')'")
        return ("sub", sub)

    # expressions
    def parse_expr(self):
        left = self.parse_term()
        while self.tok.kind == "OP" and self.tok.value in ("+", "-", "||"):
            op = self.advance().value
            left = ("binop", op, left, self.parse_term())
        return left

    def parse_term(self):
        left = self.parse_unary()
        while self.tok.kind == "OP" and self.tok.value in ("*", "/", "%"):
            op = self.advance().value
            left = ("binop", op, left, self.parse_unary())
        return left

    def parse_unary(self):
        if self.tok.kind == "OP" and self.tok.value in ("-", "+"):
            sign = self.advance().value
            operand = self.parse_unary()
            if operand[0] == "num":
                return ("num", operand[1]) if sign == "+" else ("num", "-" + operand[1])
            return operand if sign == "+" else ("neg", operand)
        return self.parse_primary()

    def parse_primary(self):
        tok = self.tok
        if tok.kind == "NUMBER":
            self.advance()
            return ("num", tok.value)
        if tok.kind == "STRING":
            self.advance()
            return ("str", tok.value)
        if tok.kind == "LPAREN":
            if self.peek().is_kw("select"):
                return self.parse_paren_subquery()
            self.advance()
            expr = self.parse_expr()
            self.expect("RPAREN", "')'")
            return expr
        if tok.is_kw("null"):
            self.advance()
            return ("null",)
        if tok.kind == "WORD" and self.peek().kind == "LPAREN":
            name = tok.value.lower()
            if tok.keyword is not None:
                self.fail(f"unexpected keyword {tok.value!r}")
            self.advance()
            self.advance()
            if name in AGGREGATES:
                distinct = bool(self.accept_kw("distinct"))
                if self.tok.kind == "OP" and self.tok.value == "*":
                    self.advance()
                    arg = ("star", None)
                else:
                    arg = self.parse_expr()
                self.expect("RPAREN", "')'")
                return ("agg", name, distinct, arg)
            args = []
            if self.tok.kind != "RPAREN":
                args.append(self.parse_expr())
                while self.tok.kind == "COMMA":
                    self.advance()
                    args.append(self.parse_expr())
            self.expect("RPAREN", "')'")
            return ("func", name, args)
        if tok.kind == "QIDENT" or (tok.kind == "WORD" and tok.keyword is None):
            self.advance()
            if self.tok.kind == "DOT":
                self.advance()
                col = self.tok
                if not (col.kind == "QIDENT" or col.kind == "WORD"):
                    self.fail("expected a column name after '.'")
                self.advance()
                return ("col", tok.value, col.value, tok.pos)
            return ("col", None, tok.value, tok.pos)
        if tok.kind == "EOF":
            self.fail("unexpected end of input")
        self.fail(f"unexpected token {tok.value!r}")


def parse_raw(sql: str) -> RawSelect:
    if not sql or not sql.strip():
        raise ParseFailure("empty SQL", 0)
    return Parser(sql).parse()
