"""
Step-program language: data model, grammar, schema check and executor.
"""

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
    DERIVING_OPERATIONS,
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
from .grammar import parse_operation, parse_program, render_operation, render_program
from .validator import UnknownColumn, validate_against_schema
from .executor import (
    ExecutionError,
    ExecutionErrorKind,
    ExecutionResult,
    TraceEntry,
    execute,
)

__all__ = [
    "Aggregate",
    "AggregateFn",
    "Answer",
    "AnswerColumn",
    "AnswerScalar",
    "ArithmeticOp",
    "ArityError",
    "Comparator",
    "Compute",
    "DERIVING_OPERATIONS",
    "Filter",
    "GroupAggregate",
    "Limit",
    "LimitAnchor",
    "MissingAnswerError",
    "MissingPlanError",
    "NumberLiteral",
    "Operation",
    "ParseDate",
    "ParseNumeric",
    "ProgramParseError",
    "Select",
    "Sort",
    "SortOrder",
    "Step",
    "StepOrderError",
    "StepProgram",
    "StepTag",
    "TextLiteral",
    "TrailingGarbageError",
    "UnknownOperationError",
    "UnknownTagError",
    "parse_operation",
    "parse_program",
    "render_operation",
    "render_program",
    "UnknownColumn",
    "validate_against_schema",
    "ExecutionError",
    "ExecutionErrorKind",
    "ExecutionResult",
    "TraceEntry",
    "execute",
]
