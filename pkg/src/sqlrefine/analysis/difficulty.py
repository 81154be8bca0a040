"""Structural difficulty buckets for gold queries."""

from __future__ import annotations

import enum

from .components import QueryComponents


class Difficulty(str, enum.Enum):
    EASY = "EASY"
    MEDIUM = "MEDIUM"
    HARD = "HARD"


def _count_aggregates(node) -> int:
    if isinstance(node, QueryComponents):
        return 0
    if isinstance(node, tuple):
        own = 1 if len(node) == 4 and node[0] == "agg" else 0
        return own + sum(_count_aggregates(part) for part in node)
    return 0


def difficulty_score(q: QueryComponents) -> int:
    """Additive structure score.

    One point per join condition, per subquery, and for each of: more than
    one WHERE predicate, GROUP BY, HAVING, ORDER BY, more than one aggregate
    (counted over SELECT, HAVING and ORDER BY of the outer query). A set
    operation adds two.
    """
    n_aggs = sum(_count_aggregates(e) for e in q.select)
    n_aggs += sum(_count_aggregates(tuple(p)) for p in q.having)
    n_aggs += sum(_count_aggregates(e) for e, _ in q.order_by)
    return (
        len(q.join_conditions)
        + (1 if len(q.where) > 1 else 0)
        + (1 if q.group_by else 0)
        + (1 if q.having else 0)
        + (1 if q.order_by else 0)
        + q.subquery_count
        + (2 if q.set_op is not None else 0)
        + (1 if n_aggs > 1 else 0)
    )


def classify_difficulty(q: QueryComponents) -> Difficulty:
    score = difficulty_score(q)
    if score <= 1:
        return Difficulty.EASY
    if score <= 3:
        return Difficulty.MEDIUM
    return Difficulty.HARD
