import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES
from schema_gen import random_schema
from sqlrefine.errors import EmptyFeedback, InvalidSchema
from sqlrefine.prompts import (
    PREAMBLE,
    REPAIR_INSTRUCTIONS,
    SchemaStyle,
    build_initial_prompt,
    build_repair_prompt,
    quote_identifier,
    serialize_schema,
)
from sqlrefine.schema import DatabaseSchema, make_table

TINY = DatabaseSchema("tiny", (make_table("t", [("a", "INTEGER"), ("b", "TEXT")], ["a"]),))


def test_ddl_single_table():
    assert serialize_schema(TINY) == "CREATE TABLE t (a INTEGER PRIMARY KEY, b TEXT);"


def test_compact_single_table():
    assert serialize_schema(TINY, SchemaStyle.COMPACT) == "t(a, b)"
    assert serialize_schema(TINY, "compact") == "t(a, b)"


def test_quoting():
    assert quote_identifier("name") == "name"
    assert quote_identifier("order") == '"order"'
    assert quote_identifier("first name") == '"first name"'
    assert quote_identifier('a"b') == '"a""b"'


def test_invalid_schema_rejected():
    bad = DatabaseSchema("d", (make_table("t", [("a", "TEXT"), ("A", "TEXT")]),))
    with pytest.raises(InvalidSchema):
        serialize_schema(bad)


def test_initial_prompt_template():
    env = build_initial_prompt(TINY, "How many rows?")
    assert env.rendered == (
        "### Task\n" + PREAMBLE + "\n"
        "### Schema\nCREATE TABLE t (a INTEGER PRIMARY KEY, b TEXT);\n"
        "### Question\nHow many rows?\n"
        "### SQL\n"
    )
    assert env.attempts == ()


def test_initial_prompt_golden(schemas):
    env = build_initial_prompt(schemas["concert_singer"], "How many singers are there?")
    assert env.rendered == (FIXTURES / "prompt_initial.txt").read_text(encoding="utf-8")
    assert build_initial_prompt(schemas["concert_singer"], "How many singers are there?").rendered == env.rendered


def test_repair_prompt_golden(schemas):
    env = build_initial_prompt(schemas["concert_singer"], "How many singers are there?")
    env = build_repair_prompt(env, "SELECT count(*) FROM singers", "no such table: singers")
    env = build_repair_prompt(env, "SELECT count(*) FROM singer WHERE nme = 1", "no such column: nme")
    assert env.rendered == (FIXTURES / "prompt_repair.txt").read_text(encoding="utf-8")


def test_repair_adds_attempts_in_order():
    base = build_initial_prompt(TINY, "q")
    one = build_repair_prompt(base, "SELEC 1", "syntax error near SELEC")
    assert len(one.attempts) == 1
    assert "syntax error near SELEC" in one.rendered
    assert REPAIR_INSTRUCTIONS in one.rendered
    two = build_repair_prompt(one, "SELECT 2", "second")
    assert two.rendered.index("### Previous attempt 1") < two.rendered.index("### Previous attempt 2")
    assert base.attempts == ()  # envelopes are values


@pytest.mark.parametrize("sql,msg", [("", "m"), ("SELECT 1", ""), ("   ", "m"), ("SELECT 1", "  ")])
def test_empty_feedback(sql, msg):
    with pytest.raises(EmptyFeedback):
        build_repair_prompt(build_initial_prompt(TINY, "q"), sql, msg)


def test_empty_question():
    with pytest.raises(ValueError):
        build_initial_prompt(TINY, "  ")


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9), st.text(min_size=1).filter(str.strip), st.text(min_size=1).filter(str.strip),
       st.text(min_size=1).filter(str.strip), st.sampled_from(list(SchemaStyle)))
def test_render_properties(seed, question, sql, message, style):
    schema = random_schema(random.Random(seed))
    env = build_initial_prompt(schema, question, style)
    assert build_initial_prompt(schema, question, style).rendered == env.rendered
    repaired = build_repair_prompt(env, sql, message)
    assert env.schema_block in repaired.rendered
    assert question in repaired.rendered
    assert message in repaired.rendered and sql in repaired.rendered
    if question + "?" != question:
        assert build_initial_prompt(schema, question + "?", style).rendered != env.rendered
