"""
Row-oriented reference interpreter for step programs.

Deliberately written differently from the columnar executor: rows are
dicts, every reduction is an explicit loop and number rendering has its own
implementation. The property tests compare both on random programs.
"""

from decimal import Context, Decimal
from functools import cmp_to_key
from typing import Dict, List, Optional, Tuple

from src.step_program import (
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
    ParseDate,
    ParseNumeric,
    Select,
    Sort,
    SortOrder,
    StepProgram,
    TextLiteral,
)
from src.table_core import MISSING, Date, Number, Table, Text, coerce_date, coerce_numeric, parse_date

CTX = Context(prec=28)


class RefExecutionError(Exception):
    def __init__(self, kind: str, step_index: Optional[int] = None):
        self.kind = kind
        self.step_index = step_index
        super().__init__(f"{kind} at step {step_index}")


def ref_render(value) -> str:
    if isinstance(value, Decimal):
        if value == 0:
            return "0"
        text = "{:f}".format(value.normalize(CTX))
        if "." in text:
            text = text.rstrip("0").rstrip(".")
        return text
    if hasattr(value, "isoformat"):
        return value.isoformat()
    return value


def _cell_text(cell) -> str:
    return ref_render(cell.value)


class _State:
    def __init__(self, table: Table):
        self.names: List[str] = list(table.column_names)
        self.rows: List[Dict[str, object]] = [dict(zip(self.names, row)) for row in table.rows()]
        self.scalar = None
        self.has_scalar = False

    def need(self, name: str) -> None:
        if name not in self.names:
            raise RefExecutionError("UnknownColumn")


def _compare(a, b, comparator: Comparator) -> bool:
    if comparator == Comparator.EQ:
        return a == b
    if comparator == Comparator.NE:
        return a != b
    if comparator == Comparator.LT:
        return a < b
    if comparator == Comparator.LE:
        return a <= b
    if comparator == Comparator.GT:
        return a > b
    return a >= b


def _keep(cell, comparator: Comparator, literal) -> bool:
    if comparator == Comparator.IS_MISSING:
        return cell is MISSING
    if comparator == Comparator.NOT_MISSING:
        return cell is not MISSING
    if cell is MISSING:
        return False
    if comparator == Comparator.CONTAINS:
        if isinstance(cell, Text) and isinstance(literal, TextLiteral):
            return literal.value in cell.value
        raise RefExecutionError("TypeMismatch")
    if isinstance(cell, Text) and isinstance(literal, TextLiteral):
        return _compare(cell.value, literal.value, comparator)
    if isinstance(cell, Number) and isinstance(literal, NumberLiteral):
        return _compare(cell.value, literal.value, comparator)
    if isinstance(cell, Date) and isinstance(literal, TextLiteral):
        day = parse_date(literal.value)
        if day is not None:
            return _compare(cell.value, day, comparator)
    raise RefExecutionError("TypeMismatch")


def _reduce(fn: AggregateFn, cells: list, in_group: bool):
    present = [c for c in cells if c is not MISSING]
    if fn == AggregateFn.COUNT:
        return Number(Decimal(len(present)))
    if fn == AggregateFn.COUNT_DISTINCT:
        distinct: list = []
        for cell in present:
            if not any(cell == seen for seen in distinct):
                distinct.append(cell)
        return Number(Decimal(len(distinct)))
    if fn in (AggregateFn.SUM, AggregateFn.MEAN):
        if any(not isinstance(c, Number) for c in present):
            raise RefExecutionError("TypeMismatch")
        total = Decimal(0)
        for cell in present:
            total = CTX.add(total, cell.value)
        if fn == AggregateFn.SUM:
            return Number(total)
        if not present:
            if in_group:
                return MISSING
            raise RefExecutionError("EmptyAggregate")
        return Number(CTX.divide(total, Decimal(len(present))))
    if not present:
        if in_group:
            return MISSING
        raise RefExecutionError("EmptyAggregate")
    if len({type(c) for c in present}) > 1:
        raise RefExecutionError("TypeMismatch")
    best = present[0]
    for cell in present[1:]:
        better = cell.value < best.value if fn == AggregateFn.MIN else cell.value > best.value
        if better:
            best = cell
    return best


def _arith(op: ArithmeticOp, a: Decimal, b: Decimal) -> Decimal:
    if op == ArithmeticOp.ADD:
        return CTX.add(a, b)
    if op == ArithmeticOp.SUB:
        return CTX.subtract(a, b)
    if op == ArithmeticOp.MUL:
        return CTX.multiply(a, b)
    return CTX.divide(a, b)


def _step(state: _State, op) -> Optional[List[str]]:
    if isinstance(op, Filter):
        state.need(op.column)
        state.rows = [r for r in state.rows if _keep(r[op.column], op.comparator, op.literal)]
    elif isinstance(op, (ParseNumeric, ParseDate)):
        state.need(op.column)
        coerce = coerce_numeric if isinstance(op, ParseNumeric) else coerce_date
        for row in state.rows:
            row[op.column] = coerce(row[op.column])
    elif isinstance(op, Aggregate):
        state.need(op.column)
        state.scalar = _reduce(op.fn, [r[op.column] for r in state.rows], in_group=False)
        state.has_scalar = True
    elif isinstance(op, Select):
        for name in op.columns:
            state.need(name)
        state.names = list(op.columns)
        state.rows = [{name: r[name] for name in op.columns} for r in state.rows]
    elif isinstance(op, Sort):
        state.need(op.column)
        present = [r for r in state.rows if r[op.column] is not MISSING]
        absent = [r for r in state.rows if r[op.column] is MISSING]
        if len({type(r[op.column]) for r in present}) > 1:
            raise RefExecutionError("TypeMismatch")
        sign = -1 if op.order == SortOrder.DESC else 1

        def cmp(a, b) -> int:
            x, y = a[op.column].value, b[op.column].value
            return sign * ((x > y) - (x < y))

        state.rows = sorted(present, key=cmp_to_key(cmp)) + absent
    elif isinstance(op, Limit):
        if op.n > len(state.rows):
            raise RefExecutionError("LimitOutOfRange")
        if op.anchor == LimitAnchor.FROM_START:
            state.rows = state.rows[: op.n]
        else:
            state.rows = state.rows[len(state.rows) - op.n:]
    elif isinstance(op, Compute):
        state.need(op.left)
        if not isinstance(op.right, NumberLiteral):
            state.need(op.right)
        for row in state.rows:
            left = row[op.left]
            right = Number(op.right.value) if isinstance(op.right, NumberLiteral) else row[op.right]
            for cell in (left, right):
                if cell is not MISSING and not isinstance(cell, Number):
                    raise RefExecutionError("TypeMismatch")
            if left is MISSING or right is MISSING:
                row[op.new_column] = MISSING
            elif op.op == ArithmeticOp.DIV and right.value == 0:
                raise RefExecutionError("DivideByZero")
            else:
                row[op.new_column] = Number(_arith(op.op, left.value, right.value))
        if op.new_column not in state.names:
            state.names.append(op.new_column)
    elif isinstance(op, GroupAggregate):
        state.need(op.key_column)
        state.need(op.value_column)
        groups: List[Tuple[object, list]] = []
        for row in state.rows:
            key = row[op.key_column]
            if key is MISSING:
                continue
            for seen, members in groups:
                if seen == key:
                    members.append(row[op.value_column])
                    break
            else:
                groups.append((key, [row[op.value_column]]))
        out = op.output_column
        state.rows = []
        for key, members in groups:
            value = _reduce(op.fn, members, in_group=True)
            state.rows.append({op.key_column: key, out: value})
        state.names = [op.key_column] if out == op.key_column else [op.key_column, out]
    elif isinstance(op, Answer):
        source = op.source
        if isinstance(source, AnswerColumn):
            state.need(source.name)
            return [_cell_text(r[source.name]) for r in state.rows if r[source.name] is not MISSING]
        if isinstance(source, AnswerScalar):
            if not state.has_scalar:
                raise RefExecutionError("NoScalar")
            return [] if state.scalar is MISSING else [_cell_text(state.scalar)]
        return [ref_render(source.value)]
    return None


def reference_execute(program: StepProgram, table: Table) -> List[str]:
    """Run a program and return the answer texts; raises RefExecutionError."""
    state = _State(table)
    answer: List[str] = []
    for index, step in enumerate(program.steps):
        if step.operation is None:
            continue
        try:
            result = _step(state, step.operation)
        except RefExecutionError as e:
            e.step_index = index
            raise
        if result is not None:
            answer = result
    return answer
