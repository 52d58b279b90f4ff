import json

import pytest

from src.config import ConfigError
from src.generation import ScriptedClient
from src.pipeline import TableQAPipeline

from tests.conftest import read_jsonl_dicts, write_script


def test_pipeline_end_to_end(run_config):
    summary = TableQAPipeline(run_config).run()
    out = run_config.output_dir

    assert summary["examples"] == 5
    assert summary["tables_normalized"] == 5
    assert summary["training_records"] == 4
    assert summary["fm_rate"] == pytest.approx(1.0)
    assert summary["run_log"] == {
        "first_pass_correct": 3,
        "refined_correct": 1,
        "discarded_trivial": 1,
        "failed": 0,
        "completions": 6,
    }

    for name in ("outcomes.jsonl", "training_set.jsonl", "run_log.json",
                 "predictions.jsonl", "evaluation.json", "evaluation.md"):
        assert (out / name).is_file(), name
    assert sorted(p.name for p in (out / "tables").iterdir()) == [
        "nu-0010.table", "nu-0184.table", "nu-0300.table", "nu-0400.table", "nu-2521.table",
    ]


def test_pipeline_training_records(run_config):
    TableQAPipeline(run_config).run()
    records = {r["id"]: r for r in read_jsonl_dicts(run_config.output_dir / "training_set.jsonl")}
    assert set(records) == {"nu-2521", "nu-0010", "nu-0184", "nu-0300"}
    assert records["nu-2521"]["produced_by"] == "refined"
    assert records["nu-2521"]["answer"] == ["922"]
    assert records["nu-0300"]["produced_by"] == "first-pass"
    assert records["nu-0010"]["table"] == "sponsors.table"


def test_trivial_examples_still_predict(run_config):
    TableQAPipeline(run_config).run()
    predictions = {p["id"]: p for p in read_jsonl_dicts(run_config.output_dir / "predictions.jsonl")}
    assert predictions["nu-0400"] == {"id": "nu-0400", "values": ["2"]}
    outcomes = {o["id"]: o for o in read_jsonl_dicts(run_config.output_dir / "outcomes.jsonl")}
    assert outcomes["nu-0400"]["status"] == "discarded_trivial"
    assert [a["stage"] for a in outcomes["nu-2521"]["attempts"]] == ["generate", "refine-1"]


def test_pipeline_applies_corrections(run_config, tmp_path):
    run_config.corrections_path = write_script(
        tmp_path / "fix.jsonl", [{"id": "nu-0184", "values": ["12"]}]
    )
    summary = TableQAPipeline(run_config).run()
    assert summary["fm_rate"] == pytest.approx(0.8)
    report = json.loads((run_config.output_dir / "evaluation.json").read_text(encoding="utf-8"))
    assert report["corrections"]["lost"] == ["nu-0184"]
    assert report["corrections"]["fm_rate_before"] == pytest.approx(1.0)


def test_resume_reuses_every_outcome(run_config):
    TableQAPipeline(run_config).run()
    first = (run_config.output_dir / "evaluation.json").read_text(encoding="utf-8")

    run_config.resume = True
    idle = ScriptedClient.from_replies([])
    TableQAPipeline(run_config, client=idle).run()
    assert idle.prompts == []
    assert (run_config.output_dir / "evaluation.json").read_text(encoding="utf-8") == first


def test_resume_generates_only_missing_examples(run_config, pipeline_script):
    TableQAPipeline(run_config).run()
    outcomes_path = run_config.output_dir / "outcomes.jsonl"
    kept = [o for o in read_jsonl_dicts(outcomes_path) if o["id"] != "nu-0300"]
    write_script(outcomes_path, kept)

    run_config.resume = True
    client = ScriptedClient.from_file(pipeline_script)
    summary = TableQAPipeline(run_config, client=client).run()
    assert len(client.prompts) == 1
    assert "Which nation won the most silver medals?" in client.prompts[0]
    assert summary["fm_rate"] == pytest.approx(1.0)
    assert [o["id"] for o in read_jsonl_dicts(outcomes_path)] == [
        "nu-2521", "nu-0010", "nu-0184", "nu-0300", "nu-0400",
    ]


def test_pipeline_checks_inputs_first(run_config, tmp_path):
    run_config.dataset_path = tmp_path / "absent.jsonl"
    with pytest.raises(ConfigError):
        TableQAPipeline(run_config)
    assert not run_config.output_dir.exists()
