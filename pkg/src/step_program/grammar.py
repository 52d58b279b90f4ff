"""
Step-Program Grammar

Parser and printer for the canonical text form:

    # PLAN: average attendance of GameStorm 10 through 15
    # PARSING: attendance as numbers
    parse_numeric Attendance
    # AGGREGATE: mean attendance
    aggregate mean Attendance
    # ANSWER:
    answer scalar

Tokens are bare words or JSON-style double-quoted strings.
"""

from decimal import Decimal
from typing import Callable, Dict, List, Optional, Tuple
import json
import re

from .ast import (
    Aggregate,
    AggregateFn,
    Answer,
    AnswerColumn,
    AnswerScalar,
    ArithmeticOp,
    ArityError,
    Comparator,
    Compute,
    Filter,
    GroupAggregate,
    Limit,
    LimitAnchor,
    MissingAnswerError,
    MissingPlanError,
    NumberLiteral,
    Operation,
    ParseDate,
    ParseNumeric,
    ProgramParseError,
    Select,
    Sort,
    SortOrder,
    Step,
    StepOrderError,
    StepProgram,
    StepTag,
    TextLiteral,
    TrailingGarbageError,
    UnknownOperationError,
    UnknownTagError,
)
from ..table_core import render_number

_TAG_RE = re.compile(r"^#\s*([A-Za-z_]+)\s*(?::(.*))?$")
_TOKEN_RE = re.compile(r'"(?:[^"\\]|\\.)*"|[^\s"]+')
_NUMBER_RE = re.compile(r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)$")
_BARE_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*\Z")
_INT_RE = re.compile(r"^\d+$")
_LINE_RE = re.compile(r"\r\n|\r|\n")
# json.dumps leaves these unescaped but str.splitlines breaks on them
_LINE_BREAK_ESCAPES = {0x85: "\\u0085", 0x2028: "\\u2028", 0x2029: "\\u2029"}

ANSWER_KEYWORDS = ("scalar", "column")

_COMPARATOR_ALIASES: Dict[str, Comparator] = {c.value: c for c in Comparator}
_COMPARATOR_ALIASES.update({
    "==": Comparator.EQ, "=": Comparator.EQ, "!=": Comparator.NE,
    "<": Comparator.LT, "<=": Comparator.LE, ">": Comparator.GT, ">=": Comparator.GE,
    "is_missing": Comparator.IS_MISSING, "not_missing": Comparator.NOT_MISSING,
})
_AGGREGATE_ALIASES: Dict[str, AggregateFn] = {f.value: f for f in AggregateFn}
_AGGREGATE_ALIASES.update({
    "avg": AggregateFn.MEAN, "average": AggregateFn.MEAN,
    "count_distinct": AggregateFn.COUNT_DISTINCT, "nunique": AggregateFn.COUNT_DISTINCT,
})
_ORDER_ALIASES = {"asc": SortOrder.ASC, "ascending": SortOrder.ASC,
                  "desc": SortOrder.DESC, "descending": SortOrder.DESC}
_ANCHOR_ALIASES = {"from_start": LimitAnchor.FROM_START, "from_end": LimitAnchor.FROM_END}


class _Token:
    __slots__ = ("raw", "quoted", "value")

    def __init__(self, raw: str, line_number: int):
        self.raw = raw
        self.quoted = raw.startswith('"')
        if self.quoted:
            try:
                self.value = json.loads(raw)
            except ValueError as e:
                raise ArityError(f"Bad string literal {raw}: {e}", line_number) from e
        else:
            self.value = raw

    @property
    def is_number(self) -> bool:
        return not self.quoted and bool(_NUMBER_RE.match(self.raw))


def _tokenize(line: str, line_number: int) -> List[_Token]:
    tokens = []
    position = 0
    for match in _TOKEN_RE.finditer(line):
        if line[position:match.start()].strip():
            break
        tokens.append(_Token(match.group(0), line_number))
        position = match.end()
    if line[position:].strip():
        raise ArityError(f"Unterminated or malformed string in: {line}", line_number)
    return tokens


# Operand readers


def _literal(token: _Token) -> TextLiteral:
    if token.is_number:
        return NumberLiteral(Decimal(token.raw))
    return TextLiteral(token.value)


def _lookup(aliases: Dict, token: _Token, what: str, line_number: int):
    key = token.value.lower()
    if token.quoted or key not in aliases:
        raise ArityError(f"Unknown {what}: {token.raw}", line_number)
    return aliases[key]


def _expect(args: List[_Token], low: int, high: int, keyword: str, line_number: int) -> None:
    if not low <= len(args) <= high:
        expected = str(low) if low == high else f"{low}-{high}"
        raise ArityError(
            f"{keyword} takes {expected} operand(s), got {len(args)}", line_number
        )


def _parse_filter(args: List[_Token], n: int) -> Operation:
    _expect(args, 2, 3, "filter", n)
    comparator = _lookup(_COMPARATOR_ALIASES, args[1], "comparator", n)
    if comparator.takes_literal and len(args) != 3:
        raise ArityError(f"Comparator {comparator.value} requires a literal", n)
    if not comparator.takes_literal and len(args) != 2:
        raise ArityError(f"Comparator {comparator.value} takes no literal", n)
    literal = _literal(args[2]) if len(args) == 3 else None
    return Filter(args[0].value, comparator, literal)


def _parse_parse_numeric(args: List[_Token], n: int) -> Operation:
    _expect(args, 1, 1, "parse_numeric", n)
    return ParseNumeric(args[0].value)


def _parse_parse_date(args: List[_Token], n: int) -> Operation:
    _expect(args, 1, 1, "parse_date", n)
    return ParseDate(args[0].value)


def _parse_aggregate(args: List[_Token], n: int) -> Operation:
    _expect(args, 2, 2, "aggregate", n)
    return Aggregate(_lookup(_AGGREGATE_ALIASES, args[0], "aggregate function", n), args[1].value)


def _parse_select(args: List[_Token], n: int) -> Operation:
    if not args:
        raise ArityError("select needs at least one column", n)
    try:
        return Select(tuple(token.value for token in args))
    except ArityError as e:
        raise ArityError(str(e), n) from e


def _parse_sort(args: List[_Token], n: int) -> Operation:
    _expect(args, 1, 2, "sort", n)
    order = _lookup(_ORDER_ALIASES, args[1], "sort order", n) if len(args) == 2 else SortOrder.ASC
    return Sort(args[0].value, order)


def _parse_limit(args: List[_Token], n: int) -> Operation:
    _expect(args, 1, 2, "limit", n)
    if args[0].quoted or not _INT_RE.match(args[0].raw) or int(args[0].raw) < 1:
        raise ArityError(f"limit needs a positive integer, got {args[0].raw}", n)
    anchor = (
        _lookup(_ANCHOR_ALIASES, args[1], "limit anchor", n)
        if len(args) == 2 else LimitAnchor.FROM_START
    )
    return Limit(int(args[0].raw), anchor)


def _parse_compute(args: List[_Token], n: int) -> Operation:
    if len(args) == 5 and not args[1].quoted and args[1].raw == "=":
        args = [args[0]] + args[2:]
    _expect(args, 4, 4, "compute", n)
    op_token = args[2]
    ops = {op.value: op for op in ArithmeticOp}
    if op_token.quoted or op_token.raw not in ops:
        raise ArityError(f"Unknown arithmetic operator: {op_token.raw}", n)
    right = args[3]
    right_operand = NumberLiteral(Decimal(right.raw)) if right.is_number else right.value
    return Compute(args[0].value, args[1].value, ops[op_token.raw], right_operand)


def _parse_group(args: List[_Token], n: int) -> Operation:
    _expect(args, 3, 3, "group", n)
    fn = _lookup(_AGGREGATE_ALIASES, args[1], "aggregate function", n)
    return GroupAggregate(args[0].value, fn, args[2].value)


def _parse_answer(args: List[_Token], n: int) -> Operation:
    if len(args) == 2 and not args[0].quoted and args[0].raw == "column":
        return Answer(AnswerColumn(args[1].value))
    _expect(args, 1, 1, "answer", n)
    token = args[0]
    if not token.quoted and token.raw == "scalar":
        return Answer(AnswerScalar())
    if token.quoted:
        return Answer(TextLiteral(token.value))
    if token.is_number:
        return Answer(NumberLiteral(Decimal(token.raw)))
    return Answer(AnswerColumn(token.value))


_OPERATION_PARSERS: Dict[str, Callable[[List[_Token], int], Operation]] = {
    "filter": _parse_filter,
    "parse_numeric": _parse_parse_numeric,
    "parse_date": _parse_parse_date,
    "aggregate": _parse_aggregate,
    "select": _parse_select,
    "sort": _parse_sort,
    "limit": _parse_limit,
    "compute": _parse_compute,
    "group": _parse_group,
    "answer": _parse_answer,
}


def parse_operation(line: str, line_number: int = 0) -> Operation:
    """Parse one operation line."""
    tokens = _tokenize(line, line_number)
    if not tokens:
        raise UnknownOperationError("Empty operation line", line_number)
    keyword = tokens[0]
    parser = None if keyword.quoted else _OPERATION_PARSERS.get(keyword.raw.lower())
    if parser is None:
        raise UnknownOperationError(f"Unknown operation: {keyword.raw}", line_number)
    return parser(tokens[1:], line_number)


def _parse_tag_line(line: str, line_number: int) -> Tuple[StepTag, str]:
    match = _TAG_RE.match(line)
    if not match:
        raise UnknownTagError(f"Malformed step tag line: {line}", line_number)
    word = match.group(1).upper()
    try:
        tag = StepTag(word)
    except ValueError:
        raise UnknownTagError(f"Unknown step tag: {match.group(1)}", line_number) from None
    return tag, (match.group(2) or "").strip()


def _is_known_tag_line(line: str) -> bool:
    match = _TAG_RE.match(line)
    return bool(match) and match.group(1).upper() in StepTag.__members__


def parse_program(text: str) -> StepProgram:
    """
    Parse canonical step-program text.

    Args:
        text: Program text; blank lines are ignored

    Returns:
        A validated StepProgram

    Raises:
        MissingPlanError: No leading, non-empty PLAN line
        UnknownTagError, UnknownOperationError, ArityError,
        MissingAnswerError, TrailingGarbageError, StepOrderError:
            See the individual classes
        ProgramParseError: The text contains no step program at all
    """
    lines = [
        (number, raw.strip())
        for number, raw in enumerate(_LINE_RE.split(text), start=1)
        if raw.strip()
    ]
    if not lines:
        raise ProgramParseError("Empty program text")

    first_number, first_line = lines[0]
    if not first_line.startswith("#"):
        if any(_is_known_tag_line(line) for _, line in lines):
            raise MissingPlanError("Program must open with a # PLAN line", first_number)
        raise ProgramParseError("No step program found in text", first_number)
    if not _is_known_tag_line(first_line):
        raise MissingPlanError("Program must open with a # PLAN line", first_number)
    tag, comment = _parse_tag_line(first_line, first_number)
    if tag != StepTag.PLAN or not comment:
        raise MissingPlanError("Program must open with a non-empty # PLAN line", first_number)

    steps: List[Step] = [Step(StepTag.PLAN, comment)]
    pending: Optional[Tuple[StepTag, str, int]] = None
    answered = False

    for number, line in lines[1:]:
        if answered:
            raise TrailingGarbageError(f"Content after the ANSWER step: {line}", number)

        if line.startswith("#"):
            if pending is not None:
                raise UnknownOperationError(
                    f"Expected an operation after # {pending[0].value}", number
                )
            tag, comment = _parse_tag_line(line, number)
            if tag == StepTag.PLAN:
                raise StepOrderError("PLAN must appear exactly once", number)
            pending = (tag, comment, number)
            continue

        if pending is None:
            raise StepOrderError(f"Operation without a step tag: {line}", number)
        operation = parse_operation(line, number)
        tag, comment, _ = pending
        if isinstance(operation, Answer) != (tag == StepTag.ANSWER):
            raise StepOrderError(
                "The answer operation belongs to the ANSWER step only", number
            )
        steps.append(Step(tag, comment, operation))
        pending = None
        answered = tag == StepTag.ANSWER

    if pending is not None:
        raise UnknownOperationError(
            f"Expected an operation after # {pending[0].value}", pending[2]
        )
    if not answered:
        raise MissingAnswerError("Program must end with an # ANSWER step")
    return StepProgram(tuple(steps))


# Printing


def _quote(text: str) -> str:
    return json.dumps(text, ensure_ascii=False).translate(_LINE_BREAK_ESCAPES)


def render_column(name: str) -> str:
    return name if _BARE_RE.match(name) else _quote(name)


def render_literal(literal) -> str:
    if isinstance(literal, NumberLiteral):
        return render_number(literal.value)
    return _quote(literal.value)


def render_operation(op: Operation) -> str:
    """Render one operation in canonical keyword syntax."""
    if isinstance(op, Filter):
        parts = ["filter", render_column(op.column), op.comparator.value]
        if op.literal is not None:
            parts.append(render_literal(op.literal))
        return " ".join(parts)
    if isinstance(op, ParseNumeric):
        return f"parse_numeric {render_column(op.column)}"
    if isinstance(op, ParseDate):
        return f"parse_date {render_column(op.column)}"
    if isinstance(op, Aggregate):
        return f"aggregate {op.fn.value} {render_column(op.column)}"
    if isinstance(op, Select):
        return "select " + " ".join(render_column(c) for c in op.columns)
    if isinstance(op, Sort):
        return f"sort {render_column(op.column)} {op.order.value}"
    if isinstance(op, Limit):
        return f"limit {op.n} {op.anchor.value}"
    if isinstance(op, Compute):
        right = render_literal(op.right) if isinstance(op.right, NumberLiteral) else render_column(op.right)
        return (
            f"compute {render_column(op.new_column)} {render_column(op.left)} "
            f"{op.op.value} {right}"
        )
    if isinstance(op, GroupAggregate):
        return (
            f"group {render_column(op.key_column)} {op.fn.value} "
            f"{render_column(op.value_column)}"
        )
    if isinstance(op, Answer):
        source = op.source
        if isinstance(source, AnswerScalar):
            return "answer scalar"
        if isinstance(source, AnswerColumn):
            if _BARE_RE.match(source.name) and source.name not in ANSWER_KEYWORDS:
                return f"answer {source.name}"
            return f"answer column {render_column(source.name)}"
        return f"answer {render_literal(source)}"
    raise TypeError(f"Not an operation: {op!r}")


def render_program(p: StepProgram) -> str:
    """Render a program as canonical text (newline-terminated)."""
    lines = []
    for step in p.steps:
        lines.append(f"# {step.tag.value}: {step.comment}" if step.comment else f"# {step.tag.value}:")
        if step.operation is not None:
            lines.append(render_operation(step.operation))
    return "\n".join(lines) + "\n"
