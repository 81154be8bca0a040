from .components import (
    Predicate,
    QueryComponents,
    ValueMode,
    component_diff,
    component_texts,
    exact_set_match,
    parse_sql,
)
from .difficulty import Difficulty, classify_difficulty, difficulty_score

__all__ = [
    "Difficulty",
    "Predicate",
    "QueryComponents",
    "ValueMode",
    "classify_difficulty",
    "component_diff",
    "component_texts",
    "difficulty_score",
    "exact_set_match",
    "parse_sql",
]
