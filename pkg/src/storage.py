"""
File I/O

- Line-delimited JSON readers validated against the record schemas
- Atomic writers (temp file in the target directory, then rename)
- WikiTQ-style TSV datasets
- TableStore: load, normalize and cache tables by reference
"""

from pathlib import Path
from threading import Lock
from typing import Any, Dict, Iterable, List, Optional, Type, TypeVar, Union
import csv
import json
import os
import tempfile

from loguru import logger
from pydantic import BaseModel, ValidationError

from .config import NormalizationConfig
from .evaluation import AnswerValue
from .schemas import AnswerRecord, ExampleRecord, PredictionRecord, SchemaError
from .table_core import Table, TableError, load_table, normalize_table

RecordT = TypeVar("RecordT", bound=BaseModel)

TABLE_SUFFIXES = (".csv", ".tsv", ".table", ".txt")


def atomic_write_text(path: Path, text: str) -> None:
    """Write text so readers never observe a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def _dump(record: Union[BaseModel, Dict[str, Any]]) -> str:
    if isinstance(record, BaseModel):
        data = record.model_dump(mode="json", exclude_none=True)
    else:
        data = record
    return json.dumps(data, ensure_ascii=False)


def write_jsonl(path: Path, records: Iterable[Union[BaseModel, Dict[str, Any]]]) -> int:
    """Atomically write one JSON object per line; returns the record count."""
    lines = [_dump(record) for record in records]
    atomic_write_text(path, "".join(line + "\n" for line in lines))
    logger.debug(f"Wrote {len(lines)} records to {path}")
    return len(lines)


def write_json(path: Path, data: Any) -> None:
    atomic_write_text(path, json.dumps(data, indent=2, ensure_ascii=False) + "\n")


def read_json(path: Path) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON: {e}") from e


def read_jsonl(path: Path, model: Type[RecordT]) -> List[RecordT]:
    """
    Read and validate a line-delimited JSON file.

    Raises:
        SchemaError: A line is not JSON or does not match ``model``
        OSError: The file cannot be read
    """
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(model.model_validate(json.loads(line)))
            except json.JSONDecodeError as e:
                raise SchemaError(f"{path}:{line_number}: invalid JSON: {e}") from e
            except ValidationError as e:
                raise SchemaError(
                    f"{path}:{line_number}: not a {model.__name__}: {e.errors()[0]['msg']}"
                ) from e
    return records


# ============================================================================
# Datasets, golds and answers
# ============================================================================

def _unescape_wikitq(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        if text[i] == "\\" and i + 1 < len(text):
            out.append({"n": "\n", "p": "|", "\\": "\\"}.get(text[i + 1], text[i + 1]))
            i += 2
        else:
            out.append(text[i])
            i += 1
    return "".join(out)


def split_gold(target: str) -> List[str]:
    """Split a '|'-separated multi-value target (escaped pipes survive)."""
    return [_unescape_wikitq(value) for value in target.split("|")]


def _load_tsv_dataset(path: Path) -> List[ExampleRecord]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f, delimiter="\t", quoting=csv.QUOTE_NONE)
        required = {"id", "utterance", "context", "targetValue"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise SchemaError(
                f"{path}: dataset TSV needs columns {sorted(required)}, got {reader.fieldnames}"
            )
        return [
            ExampleRecord(
                id=row["id"],
                question=_unescape_wikitq(row["utterance"]),
                table=row["context"],
                gold=split_gold(row["targetValue"]),
            )
            for row in reader
        ]


def load_dataset(path: Path) -> List[ExampleRecord]:
    """Load examples from a WikiTQ-style TSV or from ExampleRecord JSONL."""
    path = Path(path)
    examples = (
        _load_tsv_dataset(path) if path.suffix.lower() == ".tsv"
        else read_jsonl(path, ExampleRecord)
    )
    seen = set()
    for example in examples:
        if example.id in seen:
            raise SchemaError(f"{path}: duplicate example id {example.id!r}")
        seen.add(example.id)
    logger.info(f"✓ Loaded {len(examples)} examples from {path}")
    return examples


def load_answers(path: Path) -> Dict[str, AnswerValue]:
    """Load {id, values} records (golds, corrections, end-to-end answers)."""
    answers: Dict[str, AnswerValue] = {}
    for record in read_jsonl(path, AnswerRecord):
        if record.id in answers:
            raise SchemaError(f"{path}: duplicate id {record.id!r}")
        answers[record.id] = AnswerValue.from_texts(record.values)
    return answers


def load_golds(path: Path) -> Dict[str, AnswerValue]:
    """
    Load gold answers from a dataset file.

    A .tsv file is read as a WikiTQ dataset. A JSONL file may hold either
    ExampleRecord lines (``gold`` field) or AnswerRecord lines (``values``).
    """
    path = Path(path)
    if path.suffix.lower() == ".tsv":
        return {e.id: AnswerValue.from_texts(e.gold) for e in load_dataset(path)}
    with open(path, "r", encoding="utf-8") as f:
        first = next((line for line in f if line.strip()), "")
    try:
        looks_like_examples = "gold" in json.loads(first) if first else False
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}:1: invalid JSON: {e}") from e
    if looks_like_examples:
        return {e.id: AnswerValue.from_texts(e.gold) for e in load_dataset(path)}
    return load_answers(path)


def load_predictions(path: Path) -> Dict[str, Optional[AnswerValue]]:
    """Load executed predictions; an error record maps to None."""
    predictions: Dict[str, Optional[AnswerValue]] = {}
    for record in read_jsonl(path, PredictionRecord):
        if record.id in predictions:
            raise SchemaError(f"{path}: duplicate id {record.id!r}")
        predictions[record.id] = (
            None if record.values is None else AnswerValue.from_texts(record.values)
        )
    return predictions


# ============================================================================
# Tables
# ============================================================================

class TableStore:
    """
    Loads tables by reference, normalizes and caches them.

    Safe to share between worker threads.
    """

    def __init__(self, tables_dir: Path, normalization: Optional[NormalizationConfig] = None):
        """
        Args:
            tables_dir: Directory table references are relative to
            normalization: Rules applied to every loaded table
        """
        self.tables_dir = Path(tables_dir)
        self.normalization = normalization or NormalizationConfig()
        self._cache: Dict[Path, Table] = {}
        self._lock = Lock()

    def resolve(self, ref: Optional[str], example_id: Optional[str] = None) -> Path:
        """
        Find the table file for a reference, falling back to an id-named file.

        Raises:
            FileNotFoundError: Nothing matches
        """
        if ref:
            path = Path(ref)
            if not path.is_absolute():
                path = self.tables_dir / path
            if path.is_file():
                return path
        if example_id:
            for suffix in TABLE_SUFFIXES:
                path = self.tables_dir / f"{example_id}{suffix}"
                if path.is_file():
                    return path
        raise FileNotFoundError(
            f"No table for reference {ref!r} (id {example_id!r}) under {self.tables_dir}"
        )

    def get(self, ref: Optional[str], example_id: Optional[str] = None) -> Table:
        path = self.resolve(ref, example_id)
        with self._lock:
            cached = self._cache.get(path)
        if cached is not None:
            return cached
        try:
            table = normalize_table(load_table(path), self.normalization)
        except TableError as e:
            raise TableError(f"{path}: {e}") from e
        with self._lock:
            self._cache.setdefault(path, table)
            return self._cache[path]
