"""
Static column check for step programs.
"""

from dataclasses import dataclass
from typing import List

from ..table_core import Table
from .ast import (
    Aggregate,
    Answer,
    AnswerColumn,
    Compute,
    Filter,
    GroupAggregate,
    Operation,
    ParseDate,
    ParseNumeric,
    Select,
    Sort,
    StepProgram,
)


@dataclass(frozen=True)
class UnknownColumn:
    step_index: int
    column: str

    @property
    def message(self) -> str:
        return f"step {self.step_index}: unknown column {self.column!r}"


def _referenced_columns(op: Operation) -> List[str]:
    if isinstance(op, (Filter, ParseNumeric, ParseDate, Aggregate, Sort)):
        return [op.column]
    if isinstance(op, Select):
        return list(op.columns)
    if isinstance(op, Compute):
        return [op.left] + ([op.right] if isinstance(op.right, str) else [])
    if isinstance(op, GroupAggregate):
        return [op.key_column, op.value_column]
    if isinstance(op, Answer) and isinstance(op.source, AnswerColumn):
        return [op.source.name]
    return []


def validate_against_schema(p: StepProgram, t: Table) -> List[UnknownColumn]:
    """
    Check that every column a step reads exists at that point of the program.

    Select narrows the available columns, Compute adds one and Group replaces
    them with the key and the aggregate column.

    Returns:
        One UnknownColumn diagnostic per missing reference (empty when valid)
    """
    available = list(t.column_names)
    diagnostics: List[UnknownColumn] = []

    for index, step in p.operation_steps:
        op = step.operation
        for column in _referenced_columns(op):
            if column not in available:
                diagnostics.append(UnknownColumn(index, column))

        if isinstance(op, Select):
            available = [c for c in op.columns if c in available]
        elif isinstance(op, Compute) and op.new_column not in available:
            available.append(op.new_column)
        elif isinstance(op, GroupAggregate):
            available = [op.key_column, op.output_column]

    return diagnostics
