"""
Exact-Match and Fuzzy-Match metrics over AnswerValue denotations.
"""

from decimal import Decimal
from typing import List

from ..table_core import parse_date, parse_decimal
from .answers import AnswerValue, normalize_scalar

NUMERIC_TOLERANCE = Decimal("1e-9")


def exact_match(pred: AnswerValue, gold: AnswerValue) -> int:
    """1 iff both answers have the same length and equal trimmed strings in order."""
    pred_texts, gold_texts = pred.texts, gold.texts
    if len(pred_texts) != len(gold_texts):
        return 0
    return int(all(p.strip() == g.strip() for p, g in zip(pred_texts, gold_texts)))


def scalars_match(a: str, b: str) -> bool:
    """
    Compare two normalized answer strings.

    Equal strings match; otherwise two numbers match within 1e-9 and two dates
    match when they denote the same day.
    """
    if a == b:
        return True
    num_a, num_b = parse_decimal(a), parse_decimal(b)
    if num_a is not None and num_b is not None:
        return abs(num_a - num_b) <= NUMERIC_TOLERANCE
    date_a, date_b = parse_date(a), parse_date(b)
    if date_a is not None and date_b is not None:
        return date_a == date_b
    return False


def _has_perfect_matching(left: List[str], right: List[str]) -> bool:
    # Kuhn's augmenting paths; answers are short so this stays cheap
    adjacency = [[j for j, r in enumerate(right) if scalars_match(l, r)] for l in left]
    owner = [-1] * len(right)

    def augment(i: int, visited: List[bool]) -> bool:
        for j in adjacency[i]:
            if visited[j]:
                continue
            visited[j] = True
            if owner[j] == -1 or augment(owner[j], visited):
                owner[j] = i
                return True
        return False

    for i in range(len(left)):
        if not augment(i, [False] * len(right)):
            return False
    return True


def fuzzy_match(pred: AnswerValue, gold: AnswerValue) -> int:
    """
    1 iff the normalized answers match as multisets.

    Order-insensitive; empty vs empty matches, empty vs non-empty does not.
    """
    pred_texts = [normalize_scalar(text) for text in pred.texts]
    gold_texts = [normalize_scalar(text) for text in gold.texts]
    if len(pred_texts) != len(gold_texts):
        return 0
    return int(_has_perfect_matching(pred_texts, gold_texts))
