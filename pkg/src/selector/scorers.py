"""
Selector Scorers

A scorer rates the code-executed candidate against the end-to-end
candidate and returns (score_code, score_e2e); the higher score wins.
"""

from abc import ABC, abstractmethod
from typing import Optional, Tuple
import re

from loguru import logger

from ..config import SelectorConfig
from ..evaluation import AnswerValue, normalize_scalar, scalars_match
from ..generation import LlmClient, TransportError
from ..table_core import Table, render_cell, serialize_for_prompt

Scores = Tuple[float, float]

_AGGREGATION_CUES = re.compile(
    r"\b(how many|how much|number of|total|sum|average|mean|difference|combined|"
    r"more than|less than|at least|at most|count)\b",
    re.IGNORECASE,
)
# The reply must open with the choice, optionally after "Answer:" or similar
_CHOICE_RE = re.compile(r"^\W*(?:(?:ANSWER|CANDIDATE|CHOICE)\b\W*)?([AB])\b", re.IGNORECASE)
_LETTER_RE = re.compile(r"\b([AB])\b")


class ScorerTransportError(RuntimeError):
    """The scoring backend failed irrecoverably."""


class SelectorScorer(ABC):
    """Total preference over exactly two candidates."""

    name = "scorer"

    @abstractmethod
    def score(
        self,
        question: str,
        code_answer: AnswerValue,
        e2e_answer: AnswerValue,
        table: Optional[Table] = None,
        e2e_trace: Optional[str] = None,
    ) -> Scores:
        """
        Score both candidates.

        Returns:
            (score_code, score_e2e); equal scores are a tie

        Raises:
            ScorerTransportError: The backend could not be reached
        """


class FixedPreferenceScorer(SelectorScorer):
    """Always prefers one side (or always ties)."""

    name = "fixed"

    def __init__(self, preference: str = "code"):
        if preference not in ("code", "e2e", "tie"):
            raise ValueError(f"Unknown preference: {preference}")
        self.preference = preference
        self.calls = 0

    def score(self, question, code_answer, e2e_answer, table=None, e2e_trace=None) -> Scores:
        self.calls += 1
        if self.preference == "code":
            return 1.0, 0.0
        if self.preference == "e2e":
            return 0.0, 1.0
        return 0.5, 0.5


class HeuristicScorer(SelectorScorer):
    """
    Table-grounding heuristic.

    A candidate scores the share of its values found among the table cells.
    Questions that call for counting or arithmetic give the code candidate a
    bonus, since executed aggregates rarely appear verbatim in the table. An
    empty candidate scores -1.
    """

    name = "heuristic"

    def __init__(self, aggregation_bonus: float = 0.5):
        self.aggregation_bonus = aggregation_bonus

    @staticmethod
    def _grounding(answer: AnswerValue, cells: Tuple[str, ...]) -> float:
        if len(answer) == 0:
            return -1.0
        if not cells:
            return 0.0
        found = 0
        for text in answer.texts:
            value = normalize_scalar(text)
            if any(scalars_match(value, cell) for cell in cells):
                found += 1
        return found / len(answer)

    def score(self, question, code_answer, e2e_answer, table=None, e2e_trace=None) -> Scores:
        cells: Tuple[str, ...] = ()
        if table is not None:
            cells = tuple(
                normalize_scalar(render_cell(cell))
                for column in table.columns
                for cell in column.cells
            )
        score_code = self._grounding(code_answer, cells)
        score_e2e = self._grounding(e2e_answer, cells)
        if score_code >= 0 and _AGGREGATION_CUES.search(question):
            score_code += self.aggregation_bonus
        return score_code, score_e2e


class PromptedScorer(SelectorScorer):
    """
    Asks an LLM which candidate answers the question; replies "A" or "B".

    A reply that does not open with a choice, or also names the other
    candidate, scores as a tie.
    """

    name = "prompted"

    def __init__(self, client: LlmClient, max_table_rows: int = 30, include_traces: bool = False):
        """
        Args:
            client: Completion source
            max_table_rows: Rows of the table shown in the prompt
            include_traces: Show the end-to-end reasoning trace when available
        """
        self.client = client
        self.max_table_rows = max_table_rows
        self.include_traces = include_traces

    def build_prompt(
        self,
        question: str,
        code_answer: AnswerValue,
        e2e_answer: AnswerValue,
        table: Optional[Table] = None,
        e2e_trace: Optional[str] = None,
    ) -> str:
        sections = [
            "Two candidate answers were produced for a question about a table. "
            "Pick the one that answers the question correctly.",
        ]
        if table is not None:
            sections.append("Table:\n" + serialize_for_prompt(table, self.max_table_rows))
        sections.append(f"Question: {question}")
        sections.append(f"Candidate A: {code_answer.texts}")
        sections.append(f"Candidate B: {e2e_answer.texts}")
        if self.include_traces and e2e_trace:
            sections.append(f"Reasoning behind candidate B:\n{e2e_trace}")
        sections.append("Reply with a single letter: A or B.")
        return "\n\n".join(sections) + "\n"

    def score(self, question, code_answer, e2e_answer, table=None, e2e_trace=None) -> Scores:
        prompt = self.build_prompt(question, code_answer, e2e_answer, table, e2e_trace)
        try:
            reply = self.client.complete(prompt)
        except TransportError as e:
            raise ScorerTransportError(str(e)) from e
        match = _CHOICE_RE.match(reply.strip())
        choice = match.group(1).upper() if match else None
        if choice is None or set(_LETTER_RE.findall(reply)) - {choice}:
            logger.debug(f"Unparseable or ambiguous selector reply treated as a tie: {reply[:80]!r}")
            return 0.5, 0.5
        return (1.0, 0.0) if choice == "A" else (0.0, 1.0)


def create_scorer(cfg: SelectorConfig, client: Optional[LlmClient] = None) -> SelectorScorer:
    """Build the scorer a selector config names."""
    if cfg.backend == "heuristic":
        return HeuristicScorer()
    if cfg.backend in ("code", "e2e"):
        return FixedPreferenceScorer(cfg.backend)
    if client is None:
        raise ValueError("The prompted selector backend needs an LLM client")
    return PromptedScorer(client, cfg.max_table_rows, cfg.include_traces)
