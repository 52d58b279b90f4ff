"""
Table Model

Immutable columnar tables and the operations around them:
- Ingestion of CSV / TSV / pipe-delimited text
- Rule-based normalization (unicode, thousands separators, column names,
  annotated leading numbers)
- Pipe serialization for prompts
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple
import csv
import io
import re
import unicodedata
from loguru import logger

from ..config import NormalizationConfig
from .cells import CellValue, Text, MISSING, render_cell, strip_thousands

FORMATS = ("csv", "tsv", "pipe")

_ZERO_WIDTH_RE = re.compile("[\\u200b\\u200c\\u200d\\u2060\\ufeff]")
_ANNOTATED_NUMBER_RE = re.compile(
    r"^([+-]?(?:\d+(?:\.\d+)?|\.\d+))\s*(?:\([^()]*\)|\[[^\[\]]*\]|[*†‡]+)"
    r"(?:\s*(?:\([^()]*\)|\[[^\[\]]*\]|[*†‡]+))*$"
)


class TableError(ValueError):
    """Base class for table ingestion errors."""


class EmptyInputError(TableError):
    """Raised when there is no header line to read."""


class DuplicateHeaderError(TableError):
    """Raised when two headers collide after name standardization."""


class MalformedInputError(TableError):
    """Raised when a table file cannot be decoded or split into fields."""


@dataclass(frozen=True)
class Column:
    name: str
    cells: Tuple[CellValue, ...]


@dataclass(frozen=True)
class Table:
    """
    An immutable table of named, typed columns.

    All columns have exactly ``row_count`` cells and names are unique and
    non-empty.
    """

    columns: Tuple[Column, ...]
    row_count: int

    def __post_init__(self) -> None:
        if self.row_count < 0:
            raise TableError("row_count must be nonnegative")
        seen = set()
        for column in self.columns:
            if not column.name:
                raise TableError("Column names must be non-empty")
            if column.name in seen:
                raise DuplicateHeaderError(f"Duplicate column name: {column.name!r}")
            seen.add(column.name)
            if len(column.cells) != self.row_count:
                raise TableError(
                    f"Column {column.name!r} has {len(column.cells)} cells, "
                    f"expected {self.row_count}"
                )

    @classmethod
    def from_columns(cls, columns: Sequence[Tuple[str, Sequence[CellValue]]]) -> "Table":
        """Build a table from (name, cells) pairs."""
        built = tuple(Column(name, tuple(cells)) for name, cells in columns)
        row_count = len(built[0].cells) if built else 0
        return cls(built, row_count)

    @property
    def column_names(self) -> List[str]:
        return [column.name for column in self.columns]

    def has_column(self, name: str) -> bool:
        return any(column.name == name for column in self.columns)

    def column(self, name: str) -> Column:
        for column in self.columns:
            if column.name == name:
                return column
        raise KeyError(name)

    def rows(self) -> Iterator[Tuple[CellValue, ...]]:
        """Iterate rows top-to-bottom as tuples in column order."""
        for i in range(self.row_count):
            yield tuple(column.cells[i] for column in self.columns)


def standardize_column_name(name: str) -> str:
    """Trim a column name and collapse inner whitespace to single spaces."""
    return " ".join(name.split())


def _split_lines(raw: str, fmt: str) -> List[List[str]]:
    if fmt == "pipe":
        lines = [line[:-1] if line.endswith("\r") else line for line in raw.split("\n")]
        return [line.split("|") for line in lines]
    delimiter = "," if fmt == "csv" else "\t"
    try:
        return [row for row in csv.reader(io.StringIO(raw), delimiter=delimiter)]
    except csv.Error as e:
        raise MalformedInputError(f"Cannot split {fmt} input: {e}") from e


def parse_table(raw: str, format: str = "pipe") -> Table:
    """
    Parse delimited text into a Table.

    The first line is the header. Short rows are padded with Missing, empty
    fields become Missing, everything else is Text.

    Args:
        raw: Delimited text
        format: One of "csv", "tsv" or "pipe"

    Returns:
        Parsed table

    Raises:
        EmptyInputError: No header line
        DuplicateHeaderError: Two headers collide after standardization
        MalformedInputError: CSV/TSV input the csv module cannot split
    """
    if format not in FORMATS:
        raise ValueError(f"Unknown table format: {format}")
    if not raw or not raw.strip():
        raise EmptyInputError("Table input is empty")

    records = _split_lines(raw, format)
    while records and records[-1] in ([], [""]):
        records.pop()
    if not records or all(field.strip() == "" for field in records[0]):
        raise EmptyInputError("Table input has no header line")

    header = []
    for position, field in enumerate(records[0], start=1):
        name = standardize_column_name(field)
        header.append(name or f"column_{position}")

    seen = set()
    for name in header:
        if name in seen:
            raise DuplicateHeaderError(f"Duplicate header after standardization: {name!r}")
        seen.add(name)

    width = len(header)
    cells: List[List[CellValue]] = [[] for _ in header]
    for line_number, record in enumerate(records[1:], start=2):
        if len(record) > width:
            logger.warning(
                f"Line {line_number} has {len(record)} fields, header has {width}; truncating"
            )
        for i in range(width):
            field = record[i] if i < len(record) else ""
            cells[i].append(Text(field) if field != "" else MISSING)

    return Table.from_columns(list(zip(header, cells)))


def load_table(path: Path) -> Table:
    """Load a table file, picking the format from its suffix."""
    path = Path(path)
    suffix = path.suffix.lower()
    fmt = "csv" if suffix == ".csv" else "tsv" if suffix == ".tsv" else "pipe"
    with open(path, "r", encoding="utf-8", newline="") as f:
        try:
            raw = f.read()
        except UnicodeDecodeError as e:
            raise MalformedInputError(f"{path} is not valid UTF-8: {e}") from e
    return parse_table(raw, fmt)


def _normalize_text(text: str, cfg: NormalizationConfig) -> CellValue:
    if cfg.normalize_unicode:
        text = unicodedata.normalize("NFKC", _ZERO_WIDTH_RE.sub("", text))
    text = " ".join(text.split())
    if not text:
        return MISSING
    if cfg.strip_thousands:
        text = strip_thousands(text)
    if cfg.extract_leading_number:
        match = _ANNOTATED_NUMBER_RE.match(text)
        if match:
            text = match.group(1)
    return Text(text)


def _normalize_name(name: str, cfg: NormalizationConfig) -> str:
    if cfg.normalize_unicode:
        name = unicodedata.normalize("NFKC", _ZERO_WIDTH_RE.sub("", name))
    if cfg.standardize_column_names:
        name = standardize_column_name(name)
    return name


def normalize_table(t: Table, cfg: Optional[NormalizationConfig] = None) -> Table:
    """
    Apply rule-based normalization to a table.

    Idempotent; row and column counts never change. A renamed column that
    would collide with another name (or become empty) keeps its old name.

    Args:
        t: Table to normalize
        cfg: Normalization switches (defaults enable every rule)

    Returns:
        Normalized table
    """
    cfg = cfg or NormalizationConfig()

    proposed = [_normalize_name(column.name, cfg) for column in t.columns]
    counts: Dict[str, int] = {}
    for name in proposed:
        counts[name] = counts.get(name, 0) + 1
    original = {column.name for column in t.columns}

    columns = []
    for column, name in zip(t.columns, proposed):
        if name != column.name and (not name or counts[name] > 1 or name in original):
            logger.warning(f"Keeping column name {column.name!r}: {name!r} would collide")
            name = column.name
        cells = tuple(
            _normalize_text(cell.value, cfg) if isinstance(cell, Text) else cell
            for cell in column.cells
        )
        columns.append(Column(name, cells))

    return Table(tuple(columns), t.row_count)


def serialize_for_prompt(t: Table, max_rows: Optional[int] = None) -> str:
    """
    Serialize a table as pipe-delimited text for a prompt.

    Args:
        t: Table to serialize
        max_rows: Maximum data rows to emit (None for all)

    Returns:
        Header line, row lines and, when truncated, a
        "... (N rows omitted)" marker line
    """
    if max_rows is not None and max_rows < 1:
        raise ValueError("max_rows must be at least 1")

    def clean(text: str) -> str:
        return text.replace("\r\n", " ").replace("\n", " ").replace("\r", " ")

    lines = ["|".join(clean(name) for name in t.column_names)]
    shown = t.row_count if max_rows is None else min(max_rows, t.row_count)
    for i in range(shown):
        lines.append("|".join(clean(render_cell(column.cells[i])) for column in t.columns))
    if shown < t.row_count:
        lines.append(f"... ({t.row_count - shown} rows omitted)")
    return "\n".join(lines)
