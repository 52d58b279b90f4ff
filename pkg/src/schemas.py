"""
Record schemas for every line-delimited JSON artifact.

Answers are stored as lists of canonical strings.
"""

from typing import List, Literal, Optional
from pydantic import BaseModel, Field


class SchemaError(ValueError):
    """An input file does not match its record schema."""


# ============================================================================
# Dataset & Programs
# ============================================================================

class ExampleRecord(BaseModel):
    """One question over one table, with its gold answer."""
    id: str
    question: str
    table: str  # path relative to the tables directory
    gold: List[str] = Field(default_factory=list)


class ProgramRecord(BaseModel):
    """A step program to execute."""
    id: str
    program_text: str
    table: Optional[str] = None


class PredictionRecord(BaseModel):
    """Executed answer, or the error that replaced it."""
    id: str
    values: Optional[List[str]] = None
    error: Optional[str] = None


class AnswerRecord(BaseModel):
    """Answer list from any producer (golds, corrections, end-to-end model)."""
    id: str
    values: List[str]
    trace: Optional[str] = None


# ============================================================================
# Training-Set Construction
# ============================================================================

class TrainingRecord(BaseModel):
    """A verified (question, table, program) triple."""
    id: str
    question: str
    table: str
    program_text: str
    produced_by: Literal["first-pass", "refined"]
    answer: List[str]


class AttemptRecord(BaseModel):
    """One completion request and what became of it."""
    stage: str  # "generate" or "refine-<n>"
    raw_text: Optional[str] = None
    program_text: Optional[str] = None
    values: Optional[List[str]] = None
    error: Optional[str] = None
    fm: int = 0


class ExampleOutcome(BaseModel):
    """Per-example run-log entry."""
    id: str
    status: Literal["first_pass_correct", "refined_correct", "discarded_trivial", "failed"]
    attempts: List[AttemptRecord] = Field(default_factory=list)
    program_text: Optional[str] = None
    final_values: Optional[List[str]] = None
    error: Optional[str] = None


class RunLogRecord(BaseModel):
    """Counts over all outcomes of a training-set build."""
    first_pass_correct: int = 0
    refined_correct: int = 0
    discarded_trivial: int = 0
    failed: int = 0
    completions: int = 0


# ============================================================================
# Answer Selection
# ============================================================================

class SelectorExample(BaseModel):
    """Labeled pair for selector training."""
    id: str
    question: str
    table: str
    code_answer: List[str]
    e2e_answer: List[str]
    e2e_trace: Optional[str] = None
    label: Literal["code", "e2e", "both"]


class SelectionRecord(BaseModel):
    """Final answer chosen between the two candidates."""
    id: str
    chosen: List[str]
    source: Literal["code", "e2e", "agreement"]
    scorer_invoked: bool
