"""
Cell Values and Coercions

Typed cell model for in-memory tables:
- Text, Number (finite Decimal), Date and Missing variants
- Safe numeric and date coercion (unparseable values become Missing)
- Canonical rendering used by the executor, the prompt serializer and answers
"""

from dataclasses import dataclass
from datetime import date, datetime
from decimal import Context, Decimal, InvalidOperation
from typing import Optional, Union
import re

# Arithmetic context shared by every Decimal computation in the toolkit
DECIMAL_CONTEXT = Context(prec=28)

_DECIMAL_RE = re.compile(r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)$")
_THOUSANDS_RE = re.compile(r"(?<=\d),(?=\d{3}(?!\d))")

# Month-first for slashed dates
DATE_FORMATS = (
    "%Y-%m-%d",
    "%B %d, %Y",
    "%b %d, %Y",
    "%d %B %Y",
    "%d %b %Y",
    "%m/%d/%Y",
)


@dataclass(frozen=True)
class Text:
    value: str


@dataclass(frozen=True)
class Number:
    value: Decimal

    def __post_init__(self) -> None:
        if not isinstance(self.value, Decimal):
            object.__setattr__(self, "value", Decimal(str(self.value)))
        if not self.value.is_finite():
            raise ValueError(f"Number must be finite, got {self.value}")


@dataclass(frozen=True)
class Date:
    value: date


@dataclass(frozen=True)
class Missing:
    def __repr__(self) -> str:
        return "MISSING"


MISSING = Missing()

CellValue = Union[Text, Number, Date, Missing]


def render_number(value: Decimal) -> str:
    """
    Render a Decimal canonically.

    Integral values carry no fractional part; other values are written in
    fixed-point with trailing zeros removed. Exponent notation is never used.
    """
    if value.is_zero():
        return "0"
    text = format(value.normalize(DECIMAL_CONTEXT), "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text


def render_cell(cell: CellValue) -> str:
    """Render a cell as prompt/answer text (Missing renders empty)."""
    if isinstance(cell, Text):
        return cell.value
    if isinstance(cell, Number):
        return render_number(cell.value)
    if isinstance(cell, Date):
        return cell.value.isoformat()
    return ""


def strip_thousands(text: str) -> str:
    """Remove thousands separators between digit groups ("1,188" -> "1188")."""
    return _THOUSANDS_RE.sub("", text)


def parse_decimal(text: str) -> Optional[Decimal]:
    """
    Parse a plain decimal string.

    Accepts an optional sign (ASCII or U+2212), surrounding parentheses
    (treated as an annotation, not negation) and thousands separators.
    Scientific notation, NaN and infinities are rejected.

    Args:
        text: Raw text

    Returns:
        The Decimal value, or None when the text is not a plain decimal
    """
    candidate = text.strip().replace("−", "-")
    if len(candidate) >= 2 and candidate[0] == "(" and candidate[-1] == ")":
        candidate = candidate[1:-1].strip()
    candidate = strip_thousands(candidate)
    if not _DECIMAL_RE.match(candidate):
        return None
    try:
        return Decimal(candidate)
    except InvalidOperation:
        return None


def parse_date(text: str) -> Optional[date]:
    """Parse text against the supported date formats; None when none applies."""
    candidate = " ".join(text.split())
    for fmt in DATE_FORMATS:
        try:
            return datetime.strptime(candidate, fmt).date()
        except ValueError:
            continue
    return None


def coerce_numeric(value: CellValue) -> CellValue:
    """Coerce a cell to Number; unparseable text and dates become Missing."""
    if isinstance(value, Number):
        return value
    if isinstance(value, Text):
        parsed = parse_decimal(value.value)
        return Number(parsed) if parsed is not None else MISSING
    return MISSING


def coerce_date(value: CellValue) -> CellValue:
    """Coerce a cell to Date; anything unparseable becomes Missing."""
    if isinstance(value, Date):
        return value
    if isinstance(value, Text):
        parsed = parse_date(value.value)
        return Date(parsed) if parsed is not None else MISSING
    return MISSING
