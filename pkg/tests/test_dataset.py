import json
import shutil

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqlrefine.dataset import TaskItem, load_dataset
from sqlrefine.errors import MalformedDataset, MissingDatabase


def write(tmp_path, obj, name="d.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


def test_single_item(tmp_path):
    p = write(tmp_path, [{"db_id": "toy", "question": "How many singers are there?",
                          "query": "SELECT count(*) FROM singer"}])
    assert load_dataset(p) == [TaskItem("0000", "toy", "How many singers are there?", "SELECT count(*) FROM singer")]


def test_empty(tmp_path):
    assert load_dataset(write(tmp_path, [])) == []


def test_gold_optional_and_extra_keys_ignored(tmp_path):
    items = load_dataset(write(tmp_path, [{"db_id": "a", "question": "q?", "query_toks": ["x"]}]))
    assert items[0].gold_sql is None


def test_explicit_ids(tmp_path):
    items = load_dataset(write(tmp_path, [{"id": "a7", "db_id": "a", "question": "q"}]))
    assert items[0].item_id == "a7"
    with pytest.raises(MalformedDataset):
        load_dataset(write(tmp_path, [{"id": 1, "db_id": "a", "question": "q"}] * 2))


@pytest.mark.parametrize(
    "payload",
    [
        {"db_id": "a"},
        [{"db_id": "a"}],
        [{"db_id": "a", "question": "   "}],
        [{"db_id": 3, "question": "q"}],
        [{"db_id": "a", "question": "q", "query": 5}],
        ["not an object"],
    ],
)
def test_malformed(tmp_path, payload):
    with pytest.raises(MalformedDataset):
        load_dataset(write(tmp_path, payload))


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("[{")
    with pytest.raises(MalformedDataset):
        load_dataset(p)


def test_missing_database_named(tmp_path, scratch_root):
    items = [
        {"db_id": "concert_singer", "question": "a", "query": "SELECT 1"},
        {"db_id": "school", "question": "b", "query": "SELECT 1"},
        {"db_id": "school", "question": "c", "query": "SELECT 1"},
    ]
    p = write(tmp_path, items)
    assert len(load_dataset(p, scratch_root)) == 3
    assert {d.name for d in scratch_root.iterdir()} >= {"concert_singer", "school"}
    shutil.rmtree(scratch_root / "school")
    with pytest.raises(MissingDatabase) as exc:
        load_dataset(p, scratch_root)
    assert exc.value.db_id == "school"


def test_bundled_dev_set(dev_path, bundled_root):
    items = load_dataset(dev_path, bundled_root)
    assert len(items) == 60
    assert len({i.item_id for i in items}) == 60
    assert all(i.gold_sql for i in items)


entries = st.lists(
    st.fixed_dictionaries(
        {"db_id": st.sampled_from(["a", "b"]), "question": st.text(min_size=1).filter(str.strip)},
        optional={"query": st.text()},
    ),
    max_size=15,
)


@settings(max_examples=100, deadline=None)
@given(entries)
def test_loaded_items_hold_invariants(tmp_path_factory, payload):
    p = tmp_path_factory.mktemp("ds") / "d.json"
    p.write_text(json.dumps(payload))
    first, second = load_dataset(p), load_dataset(p)
    assert first == second
    assert len({i.item_id for i in first}) == len(first) == len(payload)
    assert all(i.question.strip() for i in first)
