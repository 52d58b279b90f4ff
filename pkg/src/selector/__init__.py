"""Answer selection between code-executed and end-to-end candidates."""

from .scorers import (
    FixedPreferenceScorer,
    HeuristicScorer,
    PromptedScorer,
    ScorerTransportError,
    SelectorScorer,
    create_scorer,
)
from .selector import (
    AGREEMENT,
    CODE,
    E2E,
    REFERENCE_OVERRIDE_CODE_CORRECT_PCT,
    REFERENCE_OVERRIDE_E2E_CORRECT_PCT,
    CandidatePair,
    SelectionResult,
    SelectionStats,
    SelectorDataset,
    build_selector_dataset,
    render_selection_markdown,
    select_answer,
    select_batch,
    selection_error_report,
)

__all__ = [
    "FixedPreferenceScorer",
    "HeuristicScorer",
    "PromptedScorer",
    "ScorerTransportError",
    "SelectorScorer",
    "create_scorer",
    "AGREEMENT",
    "CODE",
    "E2E",
    "REFERENCE_OVERRIDE_CODE_CORRECT_PCT",
    "REFERENCE_OVERRIDE_E2E_CORRECT_PCT",
    "CandidatePair",
    "SelectionResult",
    "SelectionStats",
    "SelectorDataset",
    "build_selector_dataset",
    "render_selection_markdown",
    "select_answer",
    "select_batch",
    "selection_error_report",
]
