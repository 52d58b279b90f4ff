"""Answer normalization, EM/FM scoring, corrections and run reports."""

from .answers import AnswerValue, Scalar, normalize_answer, normalize_scalar, render_scalar
from .metrics import NUMERIC_TOLERANCE, exact_match, fuzzy_match, scalars_match
from .evaluator import (
    BreakdownReport,
    CorrectionsOverlay,
    EvalRecord,
    EvalSummary,
    IdMismatchError,
    METRICS,
    MissingGoldError,
    apply_corrections,
    breakdown,
    check_same_ids,
    correction_flips,
    evaluate_run,
    evaluate_with_corrections,
)
from .reports import evaluation_report, render_evaluation_markdown

__all__ = [
    "AnswerValue",
    "Scalar",
    "normalize_answer",
    "normalize_scalar",
    "render_scalar",
    "NUMERIC_TOLERANCE",
    "exact_match",
    "fuzzy_match",
    "scalars_match",
    "BreakdownReport",
    "CorrectionsOverlay",
    "EvalRecord",
    "EvalSummary",
    "IdMismatchError",
    "METRICS",
    "MissingGoldError",
    "apply_corrections",
    "breakdown",
    "check_same_ids",
    "correction_flips",
    "evaluate_run",
    "evaluate_with_corrections",
    "evaluation_report",
    "render_evaluation_markdown",
]
