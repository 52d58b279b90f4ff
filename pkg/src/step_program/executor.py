"""
Step-Program Executor

Runs a StepProgram over a working copy of a Table. The working frame is
columnar; an Aggregate step leaves the frame alone and stores its result in
the scalar slot read by ``answer scalar``.
"""

from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from loguru import logger

from ..evaluation.answers import AnswerValue, Scalar
from ..table_core import (
    DECIMAL_CONTEXT,
    MISSING,
    CellValue,
    Date,
    Missing,
    Number,
    Table,
    Text,
    coerce_date,
    coerce_numeric,
    parse_date,
)
from .ast import (
    Aggregate,
    AggregateFn,
    Answer,
    AnswerColumn,
    AnswerScalar,
    ArithmeticOp,
    Comparator,
    Compute,
    Filter,
    GroupAggregate,
    Limit,
    LimitAnchor,
    NumberLiteral,
    Operation,
    ParseDate,
    ParseNumeric,
    Select,
    Sort,
    SortOrder,
    StepProgram,
    StepTag,
    TextLiteral,
)
from .grammar import render_operation


class ExecutionErrorKind(str, Enum):
    UNKNOWN_COLUMN = "UnknownColumn"
    TYPE_MISMATCH = "TypeMismatch"
    EMPTY_AGGREGATE = "EmptyAggregate"
    DIVIDE_BY_ZERO = "DivideByZero"
    LIMIT_OUT_OF_RANGE = "LimitOutOfRange"
    NO_SCALAR = "NoScalar"


class ExecutionError(RuntimeError):
    """A step failed at run time; carries the kind and the failing step."""

    def __init__(
        self,
        kind: ExecutionErrorKind,
        message: str,
        step_index: Optional[int] = None,
        tag: Optional[StepTag] = None,
    ):
        self.kind = kind
        self.message = message
        self.step_index = step_index
        self.tag = tag
        super().__init__(self.to_text())

    def to_text(self) -> str:
        """Render the error as refinement evidence."""
        where = ""
        if self.step_index is not None:
            where = f" at step {self.step_index}"
            if self.tag is not None:
                where += f" (# {self.tag.value})"
        return f"ExecutionError[{self.kind.value}]{where}: {self.message}"


@dataclass(frozen=True)
class TraceEntry:
    step_index: int
    tag: StepTag
    operation_text: str
    rows_after: int
    cols_after: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "step_index": self.step_index,
            "tag": self.tag.value,
            "operation": self.operation_text,
            "rows_after": self.rows_after,
            "cols_after": self.cols_after,
        }


@dataclass(frozen=True)
class ExecutionResult:
    answer: AnswerValue
    trace: Tuple[TraceEntry, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "values": self.answer.texts,
            "trace": [entry.to_dict() for entry in self.trace],
        }


class _Frame:
    """Mutable columnar working copy; never shares lists with the input table."""

    def __init__(self, columns: Dict[str, List[CellValue]], row_count: int):
        self.columns = columns
        self.row_count = row_count
        self.scalar: Optional[CellValue] = None

    @classmethod
    def from_table(cls, t: Table) -> "_Frame":
        return cls({c.name: list(c.cells) for c in t.columns}, t.row_count)

    def get(self, name: str) -> List[CellValue]:
        if name not in self.columns:
            raise ExecutionError(
                ExecutionErrorKind.UNKNOWN_COLUMN,
                f"No column {name!r}; available: {list(self.columns)}",
            )
        return self.columns[name]

    def keep_rows(self, indices: List[int]) -> None:
        self.columns = {
            name: [cells[i] for i in indices] for name, cells in self.columns.items()
        }
        self.row_count = len(indices)


def _kind(cell: CellValue) -> str:
    return type(cell).__name__


def _mismatch(message: str) -> ExecutionError:
    return ExecutionError(ExecutionErrorKind.TYPE_MISMATCH, message)


# Filter


_ORDERING = {
    Comparator.EQ: lambda a, b: a == b,
    Comparator.NE: lambda a, b: a != b,
    Comparator.LT: lambda a, b: a < b,
    Comparator.LE: lambda a, b: a <= b,
    Comparator.GT: lambda a, b: a > b,
    Comparator.GE: lambda a, b: a >= b,
}


def _cell_matches(cell: CellValue, comparator: Comparator, literal) -> bool:
    if comparator == Comparator.IS_MISSING:
        return isinstance(cell, Missing)
    if comparator == Comparator.NOT_MISSING:
        return not isinstance(cell, Missing)
    if isinstance(cell, Missing):
        return False

    if isinstance(cell, Text):
        if not isinstance(literal, TextLiteral):
            raise _mismatch(f"{comparator.value} compares Text with a number literal")
        if comparator == Comparator.CONTAINS:
            return literal.value in cell.value
        return _ORDERING[comparator](cell.value, literal.value)

    if comparator == Comparator.CONTAINS:
        raise _mismatch(f"contains needs Text cells, got {_kind(cell)}")

    if isinstance(cell, Number):
        if not isinstance(literal, NumberLiteral):
            raise _mismatch(f"{comparator.value} compares Number with a text literal")
        return _ORDERING[comparator](cell.value, literal.value)

    # Date cell
    parsed = parse_date(literal.value) if isinstance(literal, TextLiteral) else None
    if parsed is None:
        raise _mismatch(f"{comparator.value} compares Date with a non-date literal")
    return _ORDERING[comparator](cell.value, parsed)


def _apply_filter(frame: _Frame, op: Filter) -> None:
    cells = frame.get(op.column)
    keep = [i for i, cell in enumerate(cells) if _cell_matches(cell, op.comparator, op.literal)]
    frame.keep_rows(keep)


# Aggregation


def _reduce(fn: AggregateFn, cells: List[CellValue], empty_as_missing: bool) -> CellValue:
    values = [cell for cell in cells if not isinstance(cell, Missing)]

    if fn == AggregateFn.COUNT:
        return Number(Decimal(len(values)))
    if fn == AggregateFn.COUNT_DISTINCT:
        return Number(Decimal(len(set(values))))

    if fn in (AggregateFn.SUM, AggregateFn.MEAN):
        for cell in values:
            if not isinstance(cell, Number):
                raise _mismatch(f"{fn.value} needs Number cells, got {_kind(cell)}")
        if fn == AggregateFn.SUM:
            total = Decimal(0)
            for cell in values:
                total = DECIMAL_CONTEXT.add(total, cell.value)
            return Number(total)
        if not values:
            if empty_as_missing:
                return MISSING
            raise ExecutionError(
                ExecutionErrorKind.EMPTY_AGGREGATE, "mean over zero non-missing values"
            )
        total = Decimal(0)
        for cell in values:
            total = DECIMAL_CONTEXT.add(total, cell.value)
        return Number(DECIMAL_CONTEXT.divide(total, Decimal(len(values))))

    # min / max
    if not values:
        if empty_as_missing:
            return MISSING
        raise ExecutionError(
            ExecutionErrorKind.EMPTY_AGGREGATE, f"{fn.value} over zero non-missing values"
        )
    kinds = {_kind(cell) for cell in values}
    if len(kinds) > 1:
        raise _mismatch(f"{fn.value} over mixed kinds {sorted(kinds)}")
    chooser = min if fn == AggregateFn.MIN else max
    return chooser(values, key=lambda cell: cell.value)


def _apply_group(frame: _Frame, op: GroupAggregate) -> None:
    keys = frame.get(op.key_column)
    values = frame.get(op.value_column)

    groups: Dict[CellValue, List[CellValue]] = {}
    for key, value in zip(keys, values):
        if isinstance(key, Missing):
            continue
        groups.setdefault(key, []).append(value)

    out_keys = list(groups)
    out_values = [_reduce(op.fn, members, empty_as_missing=True) for members in groups.values()]
    frame.columns = {op.key_column: out_keys}
    frame.columns[op.output_column] = out_values
    frame.row_count = len(out_keys)


# Reordering


def _apply_sort(frame: _Frame, op: Sort) -> None:
    cells = frame.get(op.column)
    present = [i for i, cell in enumerate(cells) if not isinstance(cell, Missing)]
    kinds = {_kind(cells[i]) for i in present}
    if len(kinds) > 1:
        raise _mismatch(f"sort over mixed kinds {sorted(kinds)}")
    ordered = sorted(
        present, key=lambda i: cells[i].value, reverse=op.order == SortOrder.DESC
    )
    ordered += [i for i, cell in enumerate(cells) if isinstance(cell, Missing)]
    frame.keep_rows(ordered)


def _apply_limit(frame: _Frame, op: Limit) -> None:
    if op.n > frame.row_count:
        raise ExecutionError(
            ExecutionErrorKind.LIMIT_OUT_OF_RANGE,
            f"limit {op.n} exceeds the {frame.row_count} remaining rows",
        )
    indices = list(range(frame.row_count))
    frame.keep_rows(indices[: op.n] if op.anchor == LimitAnchor.FROM_START else indices[-op.n:])


# Column operations


def _apply_select(frame: _Frame, op: Select) -> None:
    frame.columns = {name: frame.get(name) for name in op.columns}


def _arith(op: ArithmeticOp, left: Decimal, right: Decimal) -> Decimal:
    if op == ArithmeticOp.ADD:
        return DECIMAL_CONTEXT.add(left, right)
    if op == ArithmeticOp.SUB:
        return DECIMAL_CONTEXT.subtract(left, right)
    if op == ArithmeticOp.MUL:
        return DECIMAL_CONTEXT.multiply(left, right)
    return DECIMAL_CONTEXT.divide(left, right)


def _apply_compute(frame: _Frame, op: Compute) -> None:
    left = frame.get(op.left)
    if isinstance(op.right, NumberLiteral):
        right = [Number(op.right.value)] * frame.row_count
    else:
        right = frame.get(op.right)

    result: List[CellValue] = []
    for l_cell, r_cell in zip(left, right):
        for cell in (l_cell, r_cell):
            if not isinstance(cell, (Number, Missing)):
                raise _mismatch(f"compute needs Number cells, got {_kind(cell)}")
        if isinstance(l_cell, Missing) or isinstance(r_cell, Missing):
            result.append(MISSING)
            continue
        if op.op == ArithmeticOp.DIV and r_cell.value.is_zero():
            raise ExecutionError(ExecutionErrorKind.DIVIDE_BY_ZERO, f"{op.right!r} is zero")
        result.append(Number(_arith(op.op, l_cell.value, r_cell.value)))

    frame.columns[op.new_column] = result


def _apply_parse(frame: _Frame, column: str, coerce) -> None:
    frame.columns[column] = [coerce(cell) for cell in frame.get(column)]


# Answer


def _scalar_of(cell: CellValue) -> Scalar:
    if isinstance(cell, (Number, Date, Text)):
        return cell.value
    raise ValueError("Missing has no scalar value")


def _answer(frame: _Frame, op: Answer) -> AnswerValue:
    source = op.source
    if isinstance(source, AnswerColumn):
        cells = frame.get(source.name)
        return AnswerValue(tuple(_scalar_of(c) for c in cells if not isinstance(c, Missing)))
    if isinstance(source, AnswerScalar):
        if frame.scalar is None:
            raise ExecutionError(
                ExecutionErrorKind.NO_SCALAR, "answer scalar without a preceding aggregate"
            )
        if isinstance(frame.scalar, Missing):
            return AnswerValue()
        return AnswerValue.of(_scalar_of(frame.scalar))
    return AnswerValue.of(source.value)


def _apply(frame: _Frame, op: Operation) -> None:
    if isinstance(op, Filter):
        _apply_filter(frame, op)
    elif isinstance(op, ParseNumeric):
        _apply_parse(frame, op.column, coerce_numeric)
    elif isinstance(op, ParseDate):
        _apply_parse(frame, op.column, coerce_date)
    elif isinstance(op, Aggregate):
        frame.scalar = _reduce(op.fn, frame.get(op.column), empty_as_missing=False)
    elif isinstance(op, Select):
        _apply_select(frame, op)
    elif isinstance(op, Sort):
        _apply_sort(frame, op)
    elif isinstance(op, Limit):
        _apply_limit(frame, op)
    elif isinstance(op, Compute):
        _apply_compute(frame, op)
    elif isinstance(op, GroupAggregate):
        _apply_group(frame, op)
    else:
        raise TypeError(f"Unsupported operation: {op!r}")


def execute(p: StepProgram, t: Table) -> ExecutionResult:
    """
    Execute a step program over a table.

    The input table is never modified. Steps run in order over a working
    copy; the ANSWER step turns the final frame (or the stored aggregate)
    into an AnswerValue.

    Args:
        p: Validated step program
        t: Input table (usually normalized)

    Returns:
        ExecutionResult with the answer and one trace entry per operation step

    Raises:
        ExecutionError: A step failed; the error names the step index and tag
    """
    frame = _Frame.from_table(t)
    trace: List[TraceEntry] = []
    answer = AnswerValue()

    for index, step in p.operation_steps:
        op = step.operation
        try:
            if isinstance(op, Answer):
                answer = _answer(frame, op)
            else:
                _apply(frame, op)
        except ExecutionError as e:
            e.step_index, e.tag = index, step.tag
            e.args = (e.to_text(),)
            logger.debug(e.to_text())
            raise
        trace.append(
            TraceEntry(index, step.tag, render_operation(op), frame.row_count, len(frame.columns))
        )

    return ExecutionResult(answer, tuple(trace))
