"""
Answer Selector

Combines the code-executed answer with an external end-to-end model's
answer:
- builds the labeled selector dataset (pairs where both fail are dropped)
- selects one of the two candidates per question
- reports how often a correct candidate was overridden
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence

from loguru import logger
from tqdm import tqdm

from ..evaluation import AnswerValue, MissingGoldError, check_same_ids, evaluate_run, fuzzy_match
from ..schemas import SelectionRecord, SelectorExample
from ..storage import TableStore
from ..table_core import Table, TableError
from .scorers import ScorerTransportError, SelectorScorer

CODE = "code"
E2E = "e2e"
AGREEMENT = "agreement"
BOTH = "both"

# Override rates reported for the trained selector, in percent
REFERENCE_OVERRIDE_CODE_CORRECT_PCT = 2.03
REFERENCE_OVERRIDE_E2E_CORRECT_PCT = 1.20

REPORT_KIND = "selection"


@dataclass(frozen=True)
class CandidatePair:
    id: str
    question: str
    table: str
    code_answer: AnswerValue
    e2e_answer: AnswerValue
    e2e_trace: Optional[str] = None


@dataclass(frozen=True)
class SelectionResult:
    id: str
    chosen: AnswerValue
    source: str
    scorer_invoked: bool

    def to_record(self) -> SelectionRecord:
        return SelectionRecord(
            id=self.id,
            chosen=self.chosen.texts,
            source=self.source,
            scorer_invoked=self.scorer_invoked,
        )


@dataclass
class SelectorDataset:
    examples: List[SelectorExample] = field(default_factory=list)
    dropped: int = 0


def build_selector_dataset(
    pairs: Sequence[CandidatePair], golds: Mapping[str, AnswerValue]
) -> SelectorDataset:
    """
    Label candidate pairs by which side matches the gold.

    Pairs where both candidates fail are dropped and counted.

    Raises:
        MissingGoldError: A pair has no gold
    """
    dataset = SelectorDataset()
    for pair in pairs:
        gold = golds.get(pair.id)
        if gold is None:
            raise MissingGoldError(pair.id)
        code_ok = fuzzy_match(pair.code_answer, gold)
        e2e_ok = fuzzy_match(pair.e2e_answer, gold)
        if not code_ok and not e2e_ok:
            dataset.dropped += 1
            continue
        label = BOTH if code_ok and e2e_ok else CODE if code_ok else E2E
        dataset.examples.append(
            SelectorExample(
                id=pair.id,
                question=pair.question,
                table=pair.table,
                code_answer=pair.code_answer.texts,
                e2e_answer=pair.e2e_answer.texts,
                e2e_trace=pair.e2e_trace,
                label=label,
            )
        )
    logger.info(f"✓ Selector dataset: {len(dataset.examples)} kept, {dataset.dropped} dropped")
    return dataset


def select_answer(
    scorer: SelectorScorer, pair: CandidatePair, table: Optional[Table] = None
) -> SelectionResult:
    """
    Choose between the two candidates of a pair.

    Candidates that fuzzy-match each other are an agreement and the scorer is
    not called. Ties and scorer failures fall back to the code answer.
    """
    if fuzzy_match(pair.code_answer, pair.e2e_answer):
        return SelectionResult(pair.id, pair.code_answer, AGREEMENT, False)

    try:
        score_code, score_e2e = scorer.score(
            pair.question, pair.code_answer, pair.e2e_answer, table, pair.e2e_trace
        )
    except ScorerTransportError as e:
        logger.warning(f"[{pair.id}] scorer failed, keeping the code answer: {e}")
        return SelectionResult(pair.id, pair.code_answer, CODE, True)

    if score_e2e > score_code:
        return SelectionResult(pair.id, pair.e2e_answer, E2E, True)
    return SelectionResult(pair.id, pair.code_answer, CODE, True)


def select_batch(
    scorer: SelectorScorer,
    pairs: Sequence[CandidatePair],
    table_store: Optional[TableStore] = None,
    max_workers: int = 1,
) -> List[SelectionResult]:
    """Select answers for many pairs; results follow input order."""

    def run(pair: CandidatePair) -> SelectionResult:
        table = None
        if table_store is not None:
            try:
                table = table_store.get(pair.table, pair.id)
            except (OSError, TableError) as e:
                logger.warning(f"[{pair.id}] selecting without the table: {e}")
        return select_answer(scorer, pair, table)

    logger.info(f"Selecting answers for {len(pairs)} pairs with the {scorer.name} scorer")
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        results = list(
            tqdm(pool.map(run, pairs), total=len(pairs), desc="Selecting", disable=len(pairs) < 2)
        )
    invoked = sum(r.scorer_invoked for r in results)
    logger.info(f"✓ Selected {len(results)} answers ({invoked} scorer calls)")
    return results


@dataclass(frozen=True)
class SelectionStats:
    count: int
    override_code_correct_pct: float
    override_e2e_correct_pct: float
    final_fm: float
    sources: Dict[str, int]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": REPORT_KIND,
            "count": self.count,
            "override_code_correct_pct": self.override_code_correct_pct,
            "override_e2e_correct_pct": self.override_e2e_correct_pct,
            "final_fm": self.final_fm,
            "sources": dict(self.sources),
            "reference": {
                "override_code_correct_pct": REFERENCE_OVERRIDE_CODE_CORRECT_PCT,
                "override_e2e_correct_pct": REFERENCE_OVERRIDE_E2E_CORRECT_PCT,
            },
        }


def selection_error_report(
    selections: Sequence[SelectionResult],
    pairs: Sequence[CandidatePair],
    golds: Mapping[str, AnswerValue],
) -> SelectionStats:
    """
    Measure how often the selector overrode a correct candidate.

    ``override_code_correct_pct`` is the share of all examples (in percent)
    where only the code answer was correct and the e2e answer was chosen;
    ``override_e2e_correct_pct`` is the mirror case.

    Raises:
        IdMismatchError: Selections and pairs cover different ids
        MissingGoldError: A pair has no gold
    """
    check_same_ids([s.id for s in selections], [p.id for p in pairs])
    by_id = {s.id: s for s in selections}

    lost_code = lost_e2e = 0
    sources = {CODE: 0, E2E: 0, AGREEMENT: 0}
    for pair in pairs:
        gold = golds.get(pair.id)
        if gold is None:
            raise MissingGoldError(pair.id)
        selection = by_id[pair.id]
        sources[selection.source] += 1
        code_ok = fuzzy_match(pair.code_answer, gold)
        e2e_ok = fuzzy_match(pair.e2e_answer, gold)
        if code_ok and not e2e_ok and selection.source == E2E:
            lost_code += 1
        if e2e_ok and not code_ok and selection.source == CODE:
            lost_e2e += 1

    final = evaluate_run({s.id: s.chosen for s in selections}, golds)
    count = len(pairs)
    return SelectionStats(
        count=count,
        override_code_correct_pct=100.0 * lost_code / count if count else 0.0,
        override_e2e_correct_pct=100.0 * lost_e2e / count if count else 0.0,
        final_fm=final.fm_rate,
        sources=sources,
    )


def render_selection_markdown(report: Dict[str, Any]) -> str:
    """Render a selection report (``SelectionStats.to_dict``) as markdown."""
    reference = report["reference"]
    sources = report["sources"]
    lines = [
        "# Answer selection report",
        "",
        f"Examples: {report['count']}",
        f"Final FM: {100 * report['final_fm']:.2f}%",
        "",
        "| Overridden correct answer | This run | Reference |",
        "|---|---:|---:|",
        f"| code correct, e2e chosen | {report['override_code_correct_pct']:.2f}% "
        f"| {reference['override_code_correct_pct']:.2f}% |",
        f"| e2e correct, code chosen | {report['override_e2e_correct_pct']:.2f}% "
        f"| {reference['override_e2e_correct_pct']:.2f}% |",
        "",
        f"Sources: code {sources.get(CODE, 0)}, e2e {sources.get(E2E, 0)}, "
        f"agreement {sources.get(AGREEMENT, 0)}",
        "",
    ]
    return "\n".join(lines)
