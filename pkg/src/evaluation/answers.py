"""
Answer Values

The denotation model shared by execution, generation, evaluation and
selection: an ordered list of scalars, each carrying its canonical rendering.
"""

from dataclasses import dataclass
from datetime import date
from decimal import Decimal
from typing import Iterable, Iterator, List, Tuple, Union
import re
import unicodedata

from ..table_core import render_number, strip_thousands

Scalar = Union[str, Decimal, date]

_QUALIFIER_RE = re.compile(r"^(.*\S)\s*\([^()]*\)$", re.DOTALL)
_INTEGRAL_RE = re.compile(r"^([+-]?\d+)\.0+$")


def render_scalar(value: Scalar) -> str:
    if isinstance(value, Decimal):
        return render_number(value)
    if isinstance(value, date):
        return value.isoformat()
    return str(value)


@dataclass(frozen=True, eq=False)
class AnswerValue:
    """
    An ordered list of answer scalars.

    Two answers are equal when their canonical renderings are equal, so a
    Decimal 922 and the string "922" compare equal.
    """

    values: Tuple[Scalar, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))

    @classmethod
    def of(cls, *values: Scalar) -> "AnswerValue":
        return cls(tuple(values))

    @classmethod
    def from_texts(cls, texts: Iterable[str]) -> "AnswerValue":
        return cls(tuple(str(text) for text in texts))

    @property
    def texts(self) -> List[str]:
        return [render_scalar(value) for value in self.values]

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[Scalar]:
        return iter(self.values)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AnswerValue):
            return NotImplemented
        return self.texts == other.texts

    def __hash__(self) -> int:
        return hash(tuple(self.texts))

    def __repr__(self) -> str:
        return f"AnswerValue({self.texts!r})"


def _normalize_once(text: str) -> str:
    text = unicodedata.normalize("NFKC", text.strip())
    text = unicodedata.normalize("NFKC", text.casefold())
    text = " ".join(text.split())
    while True:
        match = _QUALIFIER_RE.match(text)
        if not match:
            break
        text = match.group(1).rstrip()
    text = strip_thousands(text)
    integral = _INTEGRAL_RE.match(text)
    if integral:
        text = integral.group(1)
    return text


def normalize_scalar(text: str) -> str:
    """
    Normalize one answer string for fuzzy comparison.

    Trims, case-folds, unicode-normalizes, strips thousands separators,
    trailing parenthetical qualifiers and an integral ".0...0" suffix. The
    rules are applied until the text stops changing, so the result is a fixed
    point.
    """
    for _ in range(8):
        normalized = _normalize_once(text)
        if normalized == text:
            break
        text = normalized
    return text


def normalize_answer(v: AnswerValue) -> AnswerValue:
    """Normalize every scalar of an answer (idempotent)."""
    return AnswerValue.from_texts(normalize_scalar(text) for text in v.texts)
