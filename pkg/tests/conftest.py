"""Shared fixtures: fixture tables, step programs, scripted clients and log capture."""

from pathlib import Path
from typing import Dict, List
import json

import pytest
from loguru import logger

from src.config import NormalizationConfig, RunConfig
from src.storage import TableStore
from src.table_core import load_table, normalize_table

FIXTURES = Path(__file__).parent / "fixtures"
TABLES_DIR = FIXTURES / "tables"
PROGRAMS_DIR = FIXTURES / "programs"
DATASET = FIXTURES / "dataset.jsonl"

# Question texts of the five-example dataset (used as script match keys)
Q_GAMESTORM = "What was the average attendance for GameStorm 10 through 15?"
Q_SPONSOR = "In which years did the club have no shirt sponsor?"
Q_NORWAY = "How many gold medals did Norway win?"
Q_SILVER = "Which nation won the most silver medals?"
Q_TEN_GOLD = "How many nations won at least 10 gold medals?"


def program_text(name: str) -> str:
    """Read a fixture step program by file stem."""
    return (PROGRAMS_DIR / f"{name}.step").read_text(encoding="utf-8")


def fixture_table(name: str):
    return normalize_table(load_table(TABLES_DIR / name), NormalizationConfig())


def fenced(text: str) -> str:
    return f"Here is the program:\n```\n{text}```\n"


def write_script(path: Path, entries: List[Dict[str, object]]) -> Path:
    """Write a scripted-client JSONL file."""
    with open(path, "w", encoding="utf-8") as f:
        for entry in entries:
            f.write(json.dumps(entry, ensure_ascii=False) + "\n")
    return path


def pipeline_script_entries() -> List[Dict[str, object]]:
    """
    Script for the five-example dataset.

    GameStorm is wrong on the first pass and fixed by refinement; the
    ten-gold question is answered by copying the gold; the rest are correct
    on the first pass. Expected log: 3 first-pass, 1 refined, 1 trivial.
    """
    return [
        {"match": Q_GAMESTORM, "replies": [
            program_text("gamestorm_unfiltered"),
            fenced(program_text("gamestorm_mean")),
        ]},
        {"match": Q_SPONSOR, "replies": [program_text("sponsor_missing")]},
        {"match": Q_NORWAY, "replies": [fenced(program_text("norway_gold"))]},
        {"match": Q_SILVER, "replies": [program_text("most_silver")]},
        {"match": Q_TEN_GOLD, "replies": [program_text("ten_gold_literal")]},
    ]


@pytest.fixture
def tables_dir() -> Path:
    return TABLES_DIR


@pytest.fixture
def table_store() -> TableStore:
    return TableStore(TABLES_DIR)


@pytest.fixture
def gamestorm():
    return fixture_table("gamestorm.table")


@pytest.fixture
def sponsors():
    return fixture_table("sponsors.table")


@pytest.fixture
def medals():
    return fixture_table("medals.table")


@pytest.fixture
def pipeline_script(tmp_path: Path) -> Path:
    return write_script(tmp_path / "script.jsonl", pipeline_script_entries())


@pytest.fixture
def no_endpoint(monkeypatch):
    """Make sure no endpoint leaks in from the environment."""
    for name in ("TQA_LLM_BASE_URL", "TQA_LLM_MODEL", "TQA_LLM_API_KEY"):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def run_config(tmp_path: Path, pipeline_script: Path, no_endpoint) -> RunConfig:
    return RunConfig(
        dataset_path=DATASET,
        tables_dir=TABLES_DIR,
        output_dir=tmp_path / "out",
        scripted_client=pipeline_script,
        max_workers=2,
    )


@pytest.fixture
def log_messages():
    """Collect loguru messages emitted during a test."""
    messages: List[str] = []
    handler_id = logger.add(lambda message: messages.append(message.record["message"]), level="DEBUG")
    yield messages
    logger.remove(handler_id)


def read_jsonl_dicts(path: Path) -> List[dict]:
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
