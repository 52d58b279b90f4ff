import json

import pytest

from src.config import NormalizationConfig
from src.evaluation import AnswerValue
from src.schemas import ExampleRecord, PredictionRecord, SchemaError
from src.storage import (
    TableStore,
    _unescape_wikitq,
    load_answers,
    load_dataset,
    load_golds,
    load_predictions,
    read_jsonl,
    split_gold,
    write_json,
    write_jsonl,
)
from src.table_core import Text

from tests.conftest import DATASET, FIXTURES, TABLES_DIR


def test_load_jsonl_dataset():
    examples = load_dataset(DATASET)
    assert [e.id for e in examples] == ["nu-2521", "nu-0010", "nu-0184", "nu-0300", "nu-0400"]
    assert examples[1].gold == ["1982–1985"]


def test_load_tsv_dataset():
    examples = load_dataset(FIXTURES / "dataset.tsv")
    assert [e.id for e in examples] == ["nu-2521", "nu-0088", "nu-0090"]
    assert examples[1].gold == ["1977–1978", "1988–1989"]
    assert examples[2].gold == ["GameStorm 15"]
    assert examples[0].table == "gamestorm.table"


def test_tsv_dataset_needs_its_columns(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("id\tquestion\nx\ty\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        load_dataset(path)


def test_duplicate_example_ids(tmp_path):
    line = json.dumps({"id": "a", "question": "q", "table": "t", "gold": ["1"]})
    path = tmp_path / "dup.jsonl"
    path.write_text(line + "\n" + line + "\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        load_dataset(path)


@pytest.mark.parametrize(
    "raw, expected",
    [
        ("a\\nb", "a\nb"),
        ("a\\pb", "a|b"),
        ("a\\\\b", "a\\b"),
        ("plain", "plain"),
        ("trailing\\", "trailing\\"),
    ],
)
def test_unescape_wikitq(raw, expected):
    assert _unescape_wikitq(raw) == expected


def test_split_gold_keeps_escaped_pipes():
    assert split_gold("a|b\\pc") == ["a", "b|c"]
    assert split_gold("922") == ["922"]


def test_read_jsonl_reports_line_numbers(tmp_path):
    path = tmp_path / "preds.jsonl"
    path.write_text('{"id": "a", "values": ["1"]}\n\n{"values": ["2"]}\n', encoding="utf-8")
    with pytest.raises(SchemaError, match=":3:"):
        read_jsonl(path, PredictionRecord)
    path.write_text('{"id": "a"\n', encoding="utf-8")
    with pytest.raises(SchemaError, match=":1: invalid JSON"):
        read_jsonl(path, PredictionRecord)


def test_golds_from_every_format():
    assert load_golds(DATASET)["nu-0300"] == AnswerValue.of("Germany")
    assert load_golds(FIXTURES / "dataset.tsv")["nu-0090"] == AnswerValue.of("GameStorm 15")
    assert load_golds(FIXTURES / "corrections.jsonl")["testset-0130"] == AnswerValue.of("2")


def test_predictions_with_errors(tmp_path):
    path = tmp_path / "preds.jsonl"
    write_jsonl(path, [
        PredictionRecord(id="a", values=["922"]),
        PredictionRecord(id="b", error="ExecutionError[NoScalar] at step 1"),
    ])
    assert path.read_text(encoding="utf-8").splitlines()[1] == (
        '{"id": "b", "error": "ExecutionError[NoScalar] at step 1"}'
    )
    assert load_predictions(path) == {"a": AnswerValue.of("922"), "b": None}


def test_duplicate_answer_ids(tmp_path):
    path = tmp_path / "answers.jsonl"
    write_jsonl(path, [{"id": "a", "values": ["1"]}, {"id": "a", "values": ["2"]}])
    with pytest.raises(SchemaError):
        load_answers(path)


def test_atomic_writers_leave_no_temp_files(tmp_path):
    write_json(tmp_path / "out" / "report.json", {"kind": "evaluation"})
    write_jsonl(tmp_path / "out" / "records.jsonl", [ExampleRecord(id="a", question="q", table="t")])
    assert sorted(p.name for p in (tmp_path / "out").iterdir()) == ["records.jsonl", "report.json"]
    assert json.loads((tmp_path / "out" / "report.json").read_text(encoding="utf-8")) == {"kind": "evaluation"}


# ============================================================================
# Table store
# ============================================================================

def test_table_store_normalizes_and_caches(table_store):
    first = table_store.get("gamestorm.table")
    assert first.column("Attendance").cells[-2] == Text("1188")
    assert table_store.get("gamestorm.table") is first


def test_table_store_falls_back_to_the_example_id(tmp_path):
    (tmp_path / "nu-0001.csv").write_text("a,b\n1,2\n", encoding="utf-8")
    store = TableStore(tmp_path)
    assert store.resolve(None, "nu-0001") == tmp_path / "nu-0001.csv"
    assert store.get("missing.table", "nu-0001").column_names == ["a", "b"]
    with pytest.raises(FileNotFoundError):
        store.resolve("missing.table", "nu-0002")


def test_table_store_respects_normalization_switches():
    store = TableStore(TABLES_DIR, NormalizationConfig(strip_thousands=False, extract_leading_number=False))
    assert store.get("gamestorm.table").column("Attendance").cells[-2] == Text("1,188 (est.)")
