"""Typed in-memory tables: ingestion, normalization, coercion and serialization."""

from .cells import (
    CellValue,
    Text,
    Number,
    Date,
    Missing,
    MISSING,
    DECIMAL_CONTEXT,
    coerce_numeric,
    coerce_date,
    parse_decimal,
    parse_date,
    render_cell,
    render_number,
    strip_thousands,
)
from .table import (
    Column,
    Table,
    TableError,
    EmptyInputError,
    DuplicateHeaderError,
    MalformedInputError,
    parse_table,
    load_table,
    normalize_table,
    serialize_for_prompt,
    standardize_column_name,
)

__all__ = [
    "CellValue",
    "Text",
    "Number",
    "Date",
    "Missing",
    "MISSING",
    "DECIMAL_CONTEXT",
    "coerce_numeric",
    "coerce_date",
    "parse_decimal",
    "parse_date",
    "render_cell",
    "render_number",
    "strip_thousands",
    "Column",
    "Table",
    "TableError",
    "EmptyInputError",
    "DuplicateHeaderError",
    "MalformedInputError",
    "parse_table",
    "load_table",
    "normalize_table",
    "serialize_for_prompt",
    "standardize_column_name",
]
