"""Per-item EX/EM scoring, aggregation by difficulty, and report rendering."""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Dict, Iterable, List, Optional, Tuple

from .analysis import Difficulty, ValueMode, classify_difficulty, exact_set_match, parse_sql
from .dataset import TaskItem
from .errors import ParseFailure
from .executor import DEFAULT_TIMEOUT_MS, OutcomeKind, compare_results, execute_readonly
from .refinement import FinalStatus, RefinementTrace, gold_has_order_by
from .schema import DatabaseSchema, introspect_schema

DASH = "—"
BUCKETS = (Difficulty.EASY, Difficulty.MEDIUM, Difficulty.HARD)

# Note flags
UNSCORED = "unscored"
UNPARSED_PRED = "unparsed-pred"
GOLD_PARSE_FAILURE = "gold-parse-failure"
GOLD_EXEC_FAILURE = "gold-exec-failure"
TIMEOUT = "timeout"
NO_SQL = "no-sql"
BACKEND_ERROR = "backend-error"


class ReportFormat(str, enum.Enum):
    JSON = "json"
    MARKDOWN = "markdown"


@dataclass(frozen=True)
class ItemEvaluation:
    item_id: str
    ex_correct: Optional[bool]
    em_correct: Optional[bool]
    difficulty: Optional[Difficulty]
    rounds_used: int
    notes: Tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "ex_correct": self.ex_correct,
            "em_correct": self.em_correct,
            "difficulty": self.difficulty.value if self.difficulty else None,
            "rounds_used": self.rounds_used,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ItemEvaluation":
        return cls(
            d["item_id"],
            d["ex_correct"],
            d["em_correct"],
            Difficulty(d["difficulty"]) if d["difficulty"] else None,
            d["rounds_used"],
            tuple(d["notes"]),
        )


def percentage(correct: int, denominator: int) -> Optional[float]:
    """100 * correct / denominator at one decimal, rounding half up."""
    if denominator == 0:
        return None
    value = (Decimal(correct) * 100 / Decimal(denominator)).quantize(
        Decimal("0.1"), rounding=ROUND_HALF_UP
    )
    return float(value)


@dataclass(frozen=True)
class MetricSummary:
    n: int
    ex_scored: int
    ex_correct: int
    em_scored: int
    em_correct: int

    @property
    def ex_pct(self) -> Optional[float]:
        return percentage(self.ex_correct, self.ex_scored)

    @property
    def em_pct(self) -> Optional[float]:
        return percentage(self.em_correct, self.em_scored)

    @property
    def ex_excluded(self) -> int:
        return self.n - self.ex_scored

    @property
    def em_excluded(self) -> int:
        return self.n - self.em_scored

    @classmethod
    def of(cls, evals: Iterable[ItemEvaluation]) -> "MetricSummary":
        evals = list(evals)
        return cls(
            n=len(evals),
            ex_scored=sum(e.ex_correct is not None for e in evals),
            ex_correct=sum(e.ex_correct is True for e in evals),
            em_scored=sum(e.em_correct is not None for e in evals),
            em_correct=sum(e.em_correct is True for e in evals),
        )

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "ex_pct": self.ex_pct,
            "em_pct": self.em_pct,
            "ex_scored": self.ex_scored,
            "ex_correct": self.ex_correct,
            "ex_excluded": self.ex_excluded,
            "em_scored": self.em_scored,
            "em_correct": self.em_correct,
            "em_excluded": self.em_excluded,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricSummary":
        return cls(d["n"], d["ex_scored"], d["ex_correct"], d["em_scored"], d["em_correct"])


@dataclass(frozen=True)
class EvaluationReport:
    per_item: Tuple[ItemEvaluation, ...]
    overall: MetricSummary
    by_difficulty: Dict[Difficulty, MetricSummary]
    unclassified: int = 0
    config_echo: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "overall": self.overall.to_dict(),
            "by_difficulty": {d.value: self.by_difficulty[d].to_dict() for d in BUCKETS},
            "unclassified": self.unclassified,
            "per_item": [e.to_dict() for e in self.per_item],
            "config": self.config_echo,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationReport":
        return cls(
            per_item=tuple(ItemEvaluation.from_dict(e) for e in d["per_item"]),
            overall=MetricSummary.from_dict(d["overall"]),
            by_difficulty={
                Difficulty(k): MetricSummary.from_dict(v) for k, v in d["by_difficulty"].items()
            },
            unclassified=d.get("unclassified", 0),
            config_echo=d.get("config", {}),
        )


def score_item(
    trace: RefinementTrace,
    item: TaskItem,
    db_path: str | os.PathLike,
    value_mode: ValueMode | str = ValueMode.IGNORE,
    schema: Optional[DatabaseSchema] = None,
    timeout_ms: float = DEFAULT_TIMEOUT_MS,
    extra_notes: Iterable[str] = (),
) -> ItemEvaluation:
    """Score one finished trace against the item's gold SQL.

    EX re-executes the final SQL and the gold SQL; a trace that did not end
    in SUCCESS is EX-incorrect. EM compares the last candidate produced,
    even for exhausted traces. Problems become notes rather than exceptions.
    """
    notes: List[str] = list(extra_notes)
    # A backend failure leaves an empty trace; the failed call still counts.
    rounds_used = max(1, len(trace.rounds))
    if item.gold_sql is None:
        return ItemEvaluation(item.item_id, None, None, None, rounds_used, tuple(notes + [UNSCORED]))
    if schema is None:
        schema = introspect_schema(db_path, item.db_id)

    try:
        gold_q = parse_sql(item.gold_sql, schema, value_mode)
        difficulty = classify_difficulty(gold_q)
    except ParseFailure:
        gold_q = None
        difficulty = Difficulty.HARD
        notes.append(GOLD_PARSE_FAILURE)

    gold_out = execute_readonly(db_path, item.gold_sql, timeout_ms)
    if gold_out.kind is not OutcomeKind.RESULT:
        ex = None
        notes.append(GOLD_EXEC_FAILURE)
    elif trace.final_status is not FinalStatus.SUCCESS or trace.final_sql is None:
        ex = False
        if trace.rounds and trace.rounds[-1].outcome is not None:
            if trace.rounds[-1].outcome.kind is OutcomeKind.TIMEOUT:
                notes.append(TIMEOUT)
    else:
        pred_out = execute_readonly(db_path, trace.final_sql, timeout_ms)
        if pred_out.kind is OutcomeKind.TIMEOUT:
            notes.append(TIMEOUT)
        ex = compare_results(pred_out, gold_out, gold_has_order_by(item.gold_sql))

    pred_sql = trace.final_sql or trace.last_sql
    if pred_sql is None:
        notes.append(NO_SQL)
    if gold_q is None:
        em = None
    elif pred_sql is None:
        em = False
    else:
        try:
            em = exact_set_match(parse_sql(pred_sql, schema, value_mode), gold_q)
        except ParseFailure:
            em = False
            notes.append(UNPARSED_PRED)
    return ItemEvaluation(item.item_id, ex, em, difficulty, rounds_used, tuple(notes))


def aggregate(evals: Iterable[ItemEvaluation], config_echo: Optional[dict] = None) -> EvaluationReport:
    ordered = tuple(sorted(evals, key=lambda e: e.item_id))
    by_difficulty = {
        d: MetricSummary.of(e for e in ordered if e.difficulty is d) for d in BUCKETS
    }
    return EvaluationReport(
        per_item=ordered,
        overall=MetricSummary.of(ordered),
        by_difficulty=by_difficulty,
        unclassified=sum(e.difficulty is None for e in ordered),
        config_echo=dict(config_echo or {}),
    )


def _fmt(value: Optional[float]) -> str:
    return DASH if value is None else f"{value:.1f}"


def render_report(report: EvaluationReport, format: ReportFormat | str = ReportFormat.MARKDOWN) -> str:
    if ReportFormat(format) is ReportFormat.JSON:
        return json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    label = report.config_echo.get("label", "run")
    o = report.overall
    lines = [
        "# Evaluation report",
        "",
        "## Overall",
        "",
        "| Method | EX | EM | N |",
        "| --- | --- | --- | --- |",
        f"| {label} | {_fmt(o.ex_pct)} | {_fmt(o.em_pct)} | {o.n} |",
        "",
        "## By difficulty (EX/EM)",
        "",
        "| Method | Easy | Medium | Hard |",
        "| --- | --- | --- | --- |",
        f"| {label} | "
        + " | ".join(
            f"{_fmt(report.by_difficulty[d].ex_pct)}/{_fmt(report.by_difficulty[d].em_pct)}"
            for d in BUCKETS
        )
        + " |",
        "",
        "## Denominators",
        "",
        "| Bucket | N | EX scored | EX excluded | EM scored | EM excluded |",
        "| --- | --- | --- | --- | --- | --- |",
    ]
    for name, s in [("overall", o)] + [(d.value.lower(), report.by_difficulty[d]) for d in BUCKETS]:
        lines.append(
            f"| {name} | {s.n} | {s.ex_scored} | {s.ex_excluded} | {s.em_scored} | {s.em_excluded} |"
        )
    if report.unclassified:
        lines += ["", f"Items without a difficulty bucket (no gold SQL): {report.unclassified}"]
    note_counts: Dict[str, int] = {}
    for e in report.per_item:
        for note in e.notes:
            note_counts[note] = note_counts.get(note, 0) + 1
    if note_counts:
        lines += ["", "## Notes", ""]
        lines += [f"- {k}: {v}" for k, v in sorted(note_counts.items())]
    if report.config_echo:
        lines += ["", "## Configuration", ""]
        lines += [
            f"- {k}: {json.dumps(v, sort_keys=True)}" for k, v in sorted(report.config_echo.items())
        ]
    return "\n".join(lines) + "\n"


def report_from_json(text: str) -> EvaluationReport:
    return EvaluationReport.from_dict(json.loads(text))
