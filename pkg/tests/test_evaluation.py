import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqlrefine.analysis import Difficulty, ValueMode
from sqlrefine.backends import EchoGoldBackend, ScriptedBackend
from sqlrefine.dataset import TaskItem, database_path, load_dataset
from sqlrefine.evaluation import (
    GOLD_EXEC_FAILURE,
    GOLD_PARSE_FAILURE,
    UNPARSED_PRED,
    UNSCORED,
    ItemEvaluation,
    ReportFormat,
    aggregate,
    percentage,
    render_report,
    report_from_json,
    score_item,
)
from sqlrefine.refinement import FinalStatus, RefinementConfig, run_pipeline


def trace_for(item, schema, db, script, **kw):
    return run_pipeline(item, schema, ScriptedBackend(script), RefinementConfig(**kw), db_path=db)


def test_echo_gold_item_scores_true(schemas, singer_db):
    item = TaskItem("1", "concert_singer", "q", "SELECT name FROM singer WHERE age > 40")
    trace = run_pipeline(item, schemas["concert_singer"], EchoGoldBackend(), db_path=singer_db)
    ev = score_item(trace, item, singer_db, schema=schemas["concert_singer"])
    assert (ev.ex_correct, ev.em_correct, ev.rounds_used) == (True, True, 1)


def test_count_star_vs_count_pk(schemas, singer_db):
    item = TaskItem("1", "concert_singer", "q", "SELECT count(singer_id) FROM singer")
    trace = trace_for(item, schemas["concert_singer"], singer_db, ["SELECT count(*) FROM singer"])
    ev = score_item(trace, item, singer_db)
    assert ev.ex_correct is True and ev.em_correct is False
    assert ev.difficulty is Difficulty.EASY


def test_exhausted_trace_ex_false_em_from_last(schemas, singer_db):
    item = TaskItem("1", "concert_singer", "q", "SELECT name FROM singer")
    # "nam" is not a column, so every round errors and the parser rejects it too
    trace = trace_for(item, schemas["concert_singer"], singer_db, ["SELECT nam FROM singer"] * 2, max_rounds=2)
    ev = score_item(trace, item, singer_db, schema=schemas["concert_singer"])
    assert trace.final_status is FinalStatus.EXHAUSTED
    assert ev.ex_correct is False
    assert ev.em_correct is False and UNPARSED_PRED in ev.notes
    # a parseable last candidate that errors at runtime still gets EM
    item2 = TaskItem("2", "concert_singer", "q", "SELECT abs(1, 2) FROM singer")
    trace2 = trace_for(item2, schemas["concert_singer"], singer_db, ["SELECT abs(1, 2) FROM singer"], max_rounds=1)
    ev2 = score_item(trace2, item2, singer_db)
    assert ev2.ex_correct is None and GOLD_EXEC_FAILURE in ev2.notes
    assert ev2.em_correct is True


def test_gold_parse_failure(schemas, singer_db):
    gold = "SELECT name FROM singer UNION ALL SELECT name FROM singer"
    item = TaskItem("1", "concert_singer", "q", gold)
    trace = trace_for(item, schemas["concert_singer"], singer_db, [gold])
    ev = score_item(trace, item, singer_db)
    assert ev.em_correct is None and GOLD_PARSE_FAILURE in ev.notes
    assert ev.ex_correct is True


def test_unscored_without_gold(schemas, singer_db):
    item = TaskItem("1", "concert_singer", "q")
    trace = trace_for(item, schemas["concert_singer"], singer_db, ["SELECT 1"])
    ev = score_item(trace, item, singer_db)
    assert (ev.ex_correct, ev.em_correct, ev.difficulty) == (None, None, None)
    assert UNSCORED in ev.notes


def test_exact_value_mode(schemas, singer_db):
    item = TaskItem("1", "concert_singer", "q", "SELECT name FROM singer WHERE age > 40")
    trace = trace_for(item, schemas["concert_singer"], singer_db, ["SELECT name FROM singer WHERE age > 45"])
    assert score_item(trace, item, singer_db, ValueMode.IGNORE).em_correct is True
    assert score_item(trace, item, singer_db, ValueMode.EXACT).em_correct is False


# -- percentages and rendering ---------------------------------------------------


@pytest.mark.parametrize(
    "correct,den,expected",
    [(141, 200, 70.5), (118, 199, 59.3), (92, 108, 85.2), (83, 108, 76.9), (1, 8, 12.5), (1, 3, 33.3),
     (2, 3, 66.7), (0, 5, 0.0), (5, 5, 100.0), (0, 0, None)],
)
def test_percentage_half_up(correct, den, expected):
    assert percentage(correct, den) == expected


def test_percentage_rounds_half_up_not_to_even():
    # 1/8 = 12.5 exactly; 1/16 = 6.25 -> 6.3 under half-up, 6.2 under banker's rounding
    assert percentage(1, 16) == 6.3


def synthetic_table1_vector():
    """200 items: 141 EX-correct; one gold parse failure leaves 199 EM-scored, 118 correct."""
    evals = []
    for i in range(200):
        em = None if i == 199 else i < 118
        evals.append(ItemEvaluation(f"{i:04d}", i < 141, em, Difficulty.EASY, 1,
                                    (GOLD_PARSE_FAILURE,) if i == 199 else ()))
    return evals


def test_table1_row_renders():
    report = aggregate(synthetic_table1_vector(), {"label": "Ours"})
    assert report.overall.ex_pct == 70.5 and report.overall.em_pct == 59.3
    md = render_report(report, ReportFormat.MARKDOWN)
    assert "| Ours | 70.5 | 59.3 | 200 |" in md
    assert "| 70.5 | 59.3 |" in md


def test_difficulty_cell_renders():
    evals = [ItemEvaluation(f"{i:04d}", i < 92, i < 83, Difficulty.EASY, 1) for i in range(108)]
    md = render_report(aggregate(evals), "markdown")
    assert "| run | 85.2/76.9 | —/— | —/— |" in md


def test_empty_report():
    report = aggregate([])
    assert report.overall.n == 0
    md = render_report(report)
    assert "| run | — | — | 0 |" in md


def random_evals(rng, n):
    levels = list(Difficulty) + [None]
    out = []
    for i in range(n):
        ex = rng.choice([True, False, None])
        em = rng.choice([True, False, None])
        out.append(ItemEvaluation(f"{i:04d}", ex, em, rng.choice(levels), rng.randint(1, 3)))
    return out


@settings(max_examples=100)
@given(st.integers(0, 10**6), st.integers(0, 60))
def test_aggregate_invariants(seed, n):
    rng = random.Random(seed)
    evals = random_evals(rng, n)
    report = aggregate(evals)
    shuffled = list(evals)
    rng.shuffle(shuffled)
    assert render_report(aggregate(shuffled), "json") == render_report(report, "json")
    o = report.overall
    assert o.ex_scored + o.ex_excluded == o.n == n
    assert sum(s.n for s in report.by_difficulty.values()) + report.unclassified == n
    for s in [o, *report.by_difficulty.values()]:
        if s.ex_scored:
            assert abs(s.ex_pct - 100 * s.ex_correct / s.ex_scored) <= 0.05 + 1e-9


def test_json_round_trip_byte_stable():
    report = aggregate(random_evals(random.Random(3), 40), {"label": "x", "max_rounds": 3})
    for fmt in ReportFormat:
        text = render_report(report, fmt)
        again = render_report(report_from_json(render_report(report, "json")), fmt)
        assert again == text


def test_bundled_echo_gold_report(dev_path, bundled_root, schemas):
    evals = []
    for item in load_dataset(dev_path, bundled_root):
        db = database_path(bundled_root, item.db_id)
        trace = run_pipeline(item, schemas[item.db_id], EchoGoldBackend(), db_path=db)
        evals.append(score_item(trace, item, db, schema=schemas[item.db_id]))
    report = aggregate(evals)
    assert (report.overall.ex_pct, report.overall.em_pct) == (100.0, 100.0)
    assert {d: s.n for d, s in report.by_difficulty.items()} == {
        Difficulty.EASY: 30, Difficulty.MEDIUM: 20, Difficulty.HARD: 10}
