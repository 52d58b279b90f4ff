"""
Step-Program Data Model

A step program is an ordered list of (tag, comment, operation) steps. The
first step is a PLAN carrying only its planning comment; every other step
carries exactly one operation, and the last step is the ANSWER.
"""

from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from typing import Optional, Tuple, Union


class StepTag(str, Enum):
    PLAN = "PLAN"
    FILTER = "FILTER"
    PARSING = "PARSING"
    AGGREGATE = "AGGREGATE"
    SELECT = "SELECT"
    SORT = "SORT"
    LIMIT = "LIMIT"
    COMPUTE = "COMPUTE"
    GROUP = "GROUP"
    ANSWER = "ANSWER"


class Comparator(str, Enum):
    EQ = "eq"
    NE = "ne"
    LT = "lt"
    LE = "le"
    GT = "gt"
    GE = "ge"
    CONTAINS = "contains"
    IS_MISSING = "is-missing"
    NOT_MISSING = "not-missing"

    @property
    def takes_literal(self) -> bool:
        return self not in (Comparator.IS_MISSING, Comparator.NOT_MISSING)


class AggregateFn(str, Enum):
    SUM = "sum"
    MEAN = "mean"
    MIN = "min"
    MAX = "max"
    COUNT = "count"
    COUNT_DISTINCT = "count-distinct"


class SortOrder(str, Enum):
    ASC = "asc"
    DESC = "desc"


class LimitAnchor(str, Enum):
    FROM_START = "from_start"
    FROM_END = "from_end"


class ArithmeticOp(str, Enum):
    ADD = "+"
    SUB = "-"
    MUL = "*"
    DIV = "/"


class ProgramParseError(ValueError):
    """Base class for step-program syntax errors."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(prefix + message)


class MissingPlanError(ProgramParseError):
    """The program does not open with a non-empty PLAN line."""


class UnknownTagError(ProgramParseError):
    pass


class UnknownOperationError(ProgramParseError):
    pass


class ArityError(ProgramParseError):
    """Wrong number or kind of operands for an operation."""


class MissingAnswerError(ProgramParseError):
    pass


class TrailingGarbageError(ProgramParseError):
    """Content after the ANSWER step."""


class StepOrderError(ProgramParseError):
    """Steps are present but arranged against the program structure."""


# Literals


@dataclass(frozen=True)
class TextLiteral:
    value: str


@dataclass(frozen=True)
class NumberLiteral:
    value: Decimal

    def __post_init__(self) -> None:
        if not isinstance(self.value, Decimal):
            object.__setattr__(self, "value", Decimal(str(self.value)))
        if not self.value.is_finite():
            raise ArityError(f"Number literal must be finite, got {self.value}")


Literal = Union[TextLiteral, NumberLiteral]


# Operations


@dataclass(frozen=True)
class Filter:
    column: str
    comparator: Comparator
    literal: Optional[Literal] = None

    def __post_init__(self) -> None:
        if self.comparator.takes_literal and self.literal is None:
            raise ArityError(f"Comparator {self.comparator.value} requires a literal")
        if not self.comparator.takes_literal and self.literal is not None:
            raise ArityError(f"Comparator {self.comparator.value} takes no literal")


@dataclass(frozen=True)
class ParseNumeric:
    column: str


@dataclass(frozen=True)
class ParseDate:
    column: str


@dataclass(frozen=True)
class Aggregate:
    fn: AggregateFn
    column: str


@dataclass(frozen=True)
class Select:
    columns: Tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "columns", tuple(self.columns))
        if not self.columns:
            raise ArityError("select needs at least one column")
        if len(set(self.columns)) != len(self.columns):
            raise ArityError("select lists a column more than once")


@dataclass(frozen=True)
class Sort:
    column: str
    order: SortOrder = SortOrder.ASC


@dataclass(frozen=True)
class Limit:
    n: int
    anchor: LimitAnchor = LimitAnchor.FROM_START

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise ArityError(f"limit needs a positive integer, got {self.n!r}")


@dataclass(frozen=True)
class Compute:
    new_column: str
    left: str
    op: ArithmeticOp
    right: Union[str, NumberLiteral]


@dataclass(frozen=True)
class GroupAggregate:
    key_column: str
    fn: AggregateFn
    value_column: str

    @property
    def output_column(self) -> str:
        return f"{self.fn.value.replace('-', '_')}_{self.value_column}"


@dataclass(frozen=True)
class AnswerColumn:
    name: str


@dataclass(frozen=True)
class AnswerScalar:
    pass


@dataclass(frozen=True)
class Answer:
    source: Union[AnswerColumn, AnswerScalar, TextLiteral, NumberLiteral]


Operation = Union[
    Filter, ParseNumeric, ParseDate, Aggregate, Select, Sort, Limit,
    Compute, GroupAggregate, Answer,
]

DERIVING_OPERATIONS = (Filter, Aggregate, Compute, GroupAggregate)


@dataclass(frozen=True)
class Step:
    """One tagged step; the comment is a single line stored without surrounding whitespace."""

    tag: StepTag
    comment: str = ""
    operation: Optional[Operation] = None

    def __post_init__(self) -> None:
        if "\n" in self.comment or "\r" in self.comment:
            raise ProgramParseError("Step comments must be a single line")
        object.__setattr__(self, "comment", self.comment.strip())


@dataclass(frozen=True)
class StepProgram:
    """
    A validated step program.

    Raises the matching ProgramParseError subclass when the steps do not form
    a PLAN-first, ANSWER-last program.
    """

    steps: Tuple[Step, ...]

    def __post_init__(self) -> None:
        steps = tuple(self.steps)
        object.__setattr__(self, "steps", steps)

        if not steps or steps[0].tag != StepTag.PLAN or not steps[0].comment.strip():
            raise MissingPlanError("Program must open with a non-empty # PLAN line")
        if steps[0].operation is not None:
            raise StepOrderError("The PLAN step carries no operation")

        for index, step in enumerate(steps[1:], start=1):
            if step.tag == StepTag.PLAN:
                raise StepOrderError(f"Step {index}: PLAN must appear exactly once")
            if step.operation is None:
                raise UnknownOperationError(f"Step {index}: # {step.tag.value} has no operation")
            if step.tag == StepTag.ANSWER and index != len(steps) - 1:
                raise TrailingGarbageError(f"Step {index}: steps follow the ANSWER step")
            is_answer = isinstance(step.operation, Answer)
            if is_answer != (step.tag == StepTag.ANSWER):
                raise StepOrderError(
                    f"Step {index}: the answer operation belongs to the ANSWER step only"
                )

        if steps[-1].tag != StepTag.ANSWER:
            raise MissingAnswerError("Program must end with an # ANSWER step")

    @property
    def plan(self) -> str:
        return self.steps[0].comment

    @property
    def operation_steps(self) -> Tuple[Tuple[int, Step], ...]:
        """(index, step) for every operation-bearing step."""
        return tuple((i, step) for i, step in enumerate(self.steps) if step.operation is not None)

    @property
    def operations(self) -> Tuple[Operation, ...]:
        return tuple(step.operation for _, step in self.operation_steps)

    @property
    def answer(self) -> Answer:
        return self.steps[-1].operation

    def __len__(self) -> int:
        """K, the number of operation-bearing steps."""
        return len(self.operation_steps)
