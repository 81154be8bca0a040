"""The generate -> execute -> repair loop for one task item."""

from __future__ import annotations

import enum
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Tuple

from .backends import (
    DEFAULT_MAX_TOKENS,
    DEFAULT_STOP,
    DEFAULT_TEMPERATURE,
    Backend,
    GenerationRequest,
    SqlCandidate,
    extract_sql,
    prompt_digest,
)
from .dataset import TaskItem
from .errors import NoSqlFound, ParseFailure
from .executor import (
    DEFAULT_TIMEOUT_MS,
    ExecutionOutcome,
    OutcomeKind,
    compare_results,
    execute_readonly,
)
from .lexer import tokenize
from .prompts import PromptEnvelope, SchemaStyle, build_initial_prompt, build_repair_prompt
from .schema import DatabaseSchema

logger = logging.getLogger(__name__)

NO_SQL_MESSAGE = "output was not a SQL query"
MISMATCH_MESSAGE = "result mismatch"


class RefineOn(str, enum.Enum):
    EXECUTION_ERROR = "error"
    ORACLE_MISMATCH = "oracle"


class FinalStatus(str, enum.Enum):
    SUCCESS = "SUCCESS"
    EXHAUSTED = "EXHAUSTED"
    NO_SQL = "NO_SQL"


@dataclass(frozen=True)
class Decoding:
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS
    stop: Tuple[str, ...] = DEFAULT_STOP


@dataclass(frozen=True)
class RefinementConfig:
    max_rounds: int = 3
    style: SchemaStyle = SchemaStyle.DDL
    decoding: Decoding = field(default_factory=Decoding)
    refine_on: RefineOn = RefineOn.EXECUTION_ERROR
    timeout_ms: float = DEFAULT_TIMEOUT_MS

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")


@dataclass(frozen=True)
class Round:
    prompt: str
    raw_completion: str
    candidate: Optional[SqlCandidate]
    outcome: Optional[ExecutionOutcome]
    feedback: Optional[str] = None

    @property
    def no_sql(self) -> bool:
        return self.candidate is None


@dataclass(frozen=True)
class RefinementTrace:
    item_id: str
    rounds: Tuple[Round, ...]
    final_status: FinalStatus
    final_sql: Optional[str] = None

    @property
    def last_sql(self) -> Optional[str]:
        """SQL of the most recent round that produced any."""
        for r in reversed(self.rounds):
            if r.candidate is not None:
                return r.candidate.sql
        return None

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "rounds": [
                {
                    "round": k,
                    "prompt_digest": prompt_digest(r.prompt),
                    "raw_completion": r.raw_completion,
                    "sql": r.candidate.sql if r.candidate else None,
                    "outcome": r.outcome.to_dict() if r.outcome else None,
                    "feedback": r.feedback,
                }
                for k, r in enumerate(self.rounds, start=1)
            ],
            "final_status": self.final_status.value,
            "final_sql": self.final_sql,
        }


def run_pipeline(
    item: TaskItem,
    schema: DatabaseSchema,
    backend: Backend,
    config: RefinementConfig = RefinementConfig(),
    *,
    db_path: str | os.PathLike,
) -> RefinementTrace:
    """Generate SQL for ``item`` and repair it from execution feedback.

    Round 1 uses the initial prompt. Every later round appends the previous
    round's SQL and error to the prompt. The loop ends at the first round whose
    SQL executes (and, in oracle mode, matches the gold result) or when
    ``config.max_rounds`` rounds have been spent. Backend errors propagate.
    """
    backend = backend.bind(item)
    oracle = config.refine_on is RefineOn.ORACLE_MISMATCH
    gold_outcome = None
    if oracle:
        if item.gold_sql is None:
            raise ValueError("oracle refinement requires gold SQL")
        gold_outcome = execute_readonly(db_path, item.gold_sql, config.timeout_ms)

    envelope: PromptEnvelope = build_initial_prompt(schema, item.question, config.style)
    rounds: List[Round] = []
    for k in range(1, config.max_rounds + 1):
        request = GenerationRequest(
            envelope.rendered,
            config.decoding.temperature,
            config.decoding.max_tokens,
            tuple(config.decoding.stop),
        )
        result = backend.generate(request)
        try:
            candidate = extract_sql(result.completion, k)
        except NoSqlFound:
            rounds.append(Round(envelope.rendered, result.completion, None, None, NO_SQL_MESSAGE))
            failed_text = result.completion.strip() or "(empty output)"
            envelope = build_repair_prompt(envelope, failed_text, NO_SQL_MESSAGE)
            continue

        outcome = execute_readonly(db_path, candidate.sql, config.timeout_ms)
        if outcome.kind is OutcomeKind.RESULT:
            if not oracle:
                rounds.append(Round(envelope.rendered, result.completion, candidate, outcome))
                return RefinementTrace(item.item_id, tuple(rounds), FinalStatus.SUCCESS, candidate.sql)
            order_sensitive = gold_has_order_by(item.gold_sql)
            if compare_results(outcome, gold_outcome, order_sensitive):
                rounds.append(Round(envelope.rendered, result.completion, candidate, outcome))
                return RefinementTrace(item.item_id, tuple(rounds), FinalStatus.SUCCESS, candidate.sql)
            message = MISMATCH_MESSAGE
        else:
            message = outcome.feedback()
        rounds.append(Round(envelope.rendered, result.completion, candidate, outcome, message))
        envelope = build_repair_prompt(envelope, candidate.sql, message)

    status = FinalStatus.EXHAUSTED
    if all(r.no_sql for r in rounds):
        status = FinalStatus.NO_SQL
    return RefinementTrace(item.item_id, tuple(rounds), status, None)


def gold_has_order_by(sql: str) -> bool:
    """True when ``sql`` has an ORDER BY outside any parentheses."""
    try:
        tokens = tokenize(sql)
    except ParseFailure:
        return " order by " in f" {sql.lower()} "
    depth = 0
    for tok, nxt in zip(tokens, tokens[1:]):
        if tok.kind == "LPAREN":
            depth += 1
        elif tok.kind == "RPAREN":
            depth -= 1
        elif depth == 0 and tok.is_kw("order") and nxt.is_kw("by"):
            return True
    return False


def write_traces(traces: Iterable[RefinementTrace], path: str | os.PathLike) -> None:
    ordered = sorted(traces, key=lambda t: t.item_id)
    with open(Path(path), "w", encoding="utf-8") as fh:
        for trace in ordered:
            fh.write(json.dumps(trace.to_dict(), sort_keys=True, ensure_ascii=False) + "\n")
