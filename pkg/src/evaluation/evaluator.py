"""
Run Evaluation

Scores predictions against golds, applies annotation-correction overlays
and compares two runs cell by cell.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple
from loguru import logger

from .answers import AnswerValue
from .metrics import exact_match, fuzzy_match

# id -> corrected gold
CorrectionsOverlay = Mapping[str, AnswerValue]

METRICS = ("em", "fm")


class MissingGoldError(ValueError):
    """A prediction (or candidate pair) has no gold answer."""

    def __init__(self, example_id: str):
        self.example_id = example_id
        super().__init__(f"No gold answer for id {example_id!r}")


class IdMismatchError(ValueError):
    """Two aligned collections do not cover the same ids."""

    def __init__(self, only_left: Sequence[str], only_right: Sequence[str]):
        self.only_left = sorted(only_left)
        self.only_right = sorted(only_right)
        super().__init__(
            f"Id sets differ: {len(self.only_left)} only in the first "
            f"({self.only_left[:5]}), {len(self.only_right)} only in the second "
            f"({self.only_right[:5]})"
        )


def check_same_ids(left: Sequence[str], right: Sequence[str]) -> None:
    left_ids, right_ids = set(left), set(right)
    if left_ids != right_ids:
        raise IdMismatchError(list(left_ids - right_ids), list(right_ids - left_ids))


@dataclass(frozen=True)
class EvalRecord:
    id: str
    prediction: Optional[AnswerValue]
    gold: AnswerValue
    em: int
    fm: int

    def bit(self, metric: str) -> int:
        return self.em if metric == "em" else self.fm

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "prediction": None if self.prediction is None else self.prediction.texts,
            "gold": self.gold.texts,
            "em": self.em,
            "fm": self.fm,
        }


@dataclass(frozen=True)
class EvalSummary:
    em_rate: float
    fm_rate: float
    records: Tuple[EvalRecord, ...]
    unpredicted_ids: Tuple[str, ...] = ()

    def rate(self, metric: str) -> float:
        return self.em_rate if metric == "em" else self.fm_rate

    def to_dict(self) -> Dict[str, Any]:
        return {
            "count": len(self.records),
            "em_rate": self.em_rate,
            "fm_rate": self.fm_rate,
            "unpredicted_ids": list(self.unpredicted_ids),
            "records": [record.to_dict() for record in self.records],
        }


def apply_corrections(
    golds: Mapping[str, AnswerValue], overlay: CorrectionsOverlay
) -> Tuple[Dict[str, AnswerValue], List[str]]:
    """
    Replace golds by id with corrected answers.

    Args:
        golds: Original golds
        overlay: Corrected golds by id

    Returns:
        (corrected golds, diagnostics for overlay ids absent from golds)
    """
    corrected = dict(golds)
    diagnostics = []
    for example_id, answer in overlay.items():
        if example_id not in corrected:
            message = f"Correction for unknown id {example_id!r} not applied"
            logger.warning(message)
            diagnostics.append(message)
            continue
        corrected[example_id] = answer
    logger.info(f"✓ Applied {len(overlay) - len(diagnostics)} gold corrections")
    return corrected, diagnostics


def score(example_id: str, prediction: Optional[AnswerValue], gold: AnswerValue) -> EvalRecord:
    if prediction is None:
        return EvalRecord(example_id, None, gold, 0, 0)
    return EvalRecord(
        example_id, prediction, gold, exact_match(prediction, gold), fuzzy_match(prediction, gold)
    )


def evaluate_run(
    preds: Mapping[str, Optional[AnswerValue]], golds: Mapping[str, AnswerValue]
) -> EvalSummary:
    """
    Score a run with Exact Match and Fuzzy Match.

    Args:
        preds: Predictions by id; None marks a failed execution (scores 0/0)
        golds: Gold answers by id

    Returns:
        EvalSummary whose rates are means over one record per prediction

    Raises:
        MissingGoldError: A prediction id has no gold
    """
    for example_id in preds:
        if example_id not in golds:
            raise MissingGoldError(example_id)

    records = tuple(score(i, preds[i], golds[i]) for i in preds)
    unpredicted = tuple(i for i in golds if i not in preds)
    if unpredicted:
        logger.info(f"{len(unpredicted)} gold ids have no prediction")

    if not records:
        logger.warning("Empty prediction set; reporting rates of 0")
        return EvalSummary(0.0, 0.0, (), unpredicted)

    em_rate = sum(r.em for r in records) / len(records)
    fm_rate = sum(r.fm for r in records) / len(records)
    logger.info(f"✓ Scored {len(records)} predictions: EM {em_rate:.4f}, FM {fm_rate:.4f}")
    return EvalSummary(em_rate, fm_rate, records, unpredicted)


BOTH_CORRECT = "both_correct"
ONLY_A = "only_a"
ONLY_B = "only_b"
BOTH_WRONG = "both_wrong"


@dataclass(frozen=True)
class BreakdownReport:
    both_correct: int
    only_a: int
    only_b: int
    both_wrong: int
    assignments: Dict[str, str] = field(default_factory=dict)
    metric: str = "fm"

    @property
    def total(self) -> int:
        return self.both_correct + self.only_a + self.only_b + self.both_wrong

    def to_dict(self) -> Dict[str, Any]:
        return {
            "metric": self.metric,
            "both_correct": self.both_correct,
            "only_a": self.only_a,
            "only_b": self.only_b,
            "both_wrong": self.both_wrong,
            "total": self.total,
            "assignments": dict(self.assignments),
        }


def breakdown(
    run_a: Sequence[EvalRecord], run_b: Sequence[EvalRecord], metric: str = "fm"
) -> BreakdownReport:
    """
    Partition ids by which of two runs answered them correctly.

    Raises:
        IdMismatchError: The runs do not cover the same ids
    """
    if metric not in METRICS:
        raise ValueError(f"Unknown metric: {metric}")
    bits_a = {r.id: r.bit(metric) for r in run_a}
    bits_b = {r.id: r.bit(metric) for r in run_b}
    check_same_ids(list(bits_a), list(bits_b))

    cells = {
        (1, 1): BOTH_CORRECT,
        (1, 0): ONLY_A,
        (0, 1): ONLY_B,
        (0, 0): BOTH_WRONG,
    }
    assignments = {i: cells[(bits_a[i], bits_b[i])] for i in bits_a}
    counts = {name: 0 for name in cells.values()}
    for cell in assignments.values():
        counts[cell] += 1

    return BreakdownReport(
        both_correct=counts[BOTH_CORRECT],
        only_a=counts[ONLY_A],
        only_b=counts[ONLY_B],
        both_wrong=counts[BOTH_WRONG],
        assignments=assignments,
        metric=metric,
    )


def evaluate_with_corrections(
    preds: Mapping[str, Optional[AnswerValue]],
    golds: Mapping[str, AnswerValue],
    overlay: CorrectionsOverlay,
    metric: str = "fm",
) -> Tuple[EvalSummary, Dict[str, Any]]:
    """
    Score a run against corrected golds.

    Returns:
        (summary over corrected golds, correction details: applied count,
        diagnostics, uncorrected rates, gained and lost ids)
    """
    before = evaluate_run(preds, golds)
    corrected, diagnostics = apply_corrections(golds, overlay)
    after = evaluate_run(preds, corrected)
    details = {
        "applied": len(overlay) - len(diagnostics),
        "diagnostics": diagnostics,
        "em_rate_before": before.em_rate,
        "fm_rate_before": before.fm_rate,
        **correction_flips(before, after, metric),
    }
    return after, details


def correction_flips(
    before: EvalSummary, after: EvalSummary, metric: str = "fm"
) -> Dict[str, List[str]]:
    """Ids whose bit changed once corrections were applied."""
    old = {r.id: r.bit(metric) for r in before.records}
    new = {r.id: r.bit(metric) for r in after.records}
    return {
        "gained": sorted(i for i in new if new[i] > old.get(i, 0)),
        "lost": sorted(i for i in new if new[i] < old.get(i, 0)),
    }
