"""Answer normalization and equivalence.

Free text from solutions, gold labels, and program stdout is turned into a
canonical AnswerValue; one equivalence relation is then used everywhere a
comparison happens (verification and voting), so a candidate can never be
verified under one notion of equality and outvoted under another.
"""

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import EmptyInput

EXACT_RATIONAL = "exact-rational"
DECIMAL = "decimal"
SYMBOLIC_TEXT = "symbolic-text"

# Numeric comparison tolerances: absolute 1e-6, relative 1e-4. Wide enough to
# absorb float printing drift (15 vs 15.000000000000002), narrow enough to
# keep distinct cents apart (15.10 vs 15.00 differ by 0.1).
TOLERANCE_ABS = Fraction(1, 10**6)
TOLERANCE_REL = Fraction(1, 10**4)

# Cue emitted by the answer-extraction prompt; extraction scans for the last
# number after its last occurrence.
ANSWER_CUE = "Therefore, the answer (arabic numerals) is"

# Number tokens: comma-grouped thousands first so "1,250" is one token, then
# decimals, then plain integers.
_NUMBER_TOKEN = re.compile(
    r"[-+]?\d{1,3}(?:,\d{3})+(?:\.\d+)?"
    r"|[-+]?\d*\.\d+"
    r"|[-+]?\d+"
)

_INT_RE = re.compile(r"[+-]?\d+")
_DECIMAL_RE = re.compile(r"[+-]?(?:\d+\.\d*|\.\d+)")
_SLASH_FRACTION_RE = re.compile(r"([+-]?\d+)\s*/\s*([+-]?\d+)")
_LATEX_FRACTION_RE = re.compile(r"([+-])?\\[dt]?frac\{([+-]?\d+)\}\{([+-]?\d+)\}")

_UNIT_WORDS = ("dollars", "dollar", "cents", "cent")


@dataclass(frozen=True)
class AnswerValue:
    """Canonical answer: an exact rational, an inexact decimal, or symbolic text.

    Exactly the fields for the active kind are set. Decimal values keep their
    exact literal value as a Fraction so tolerance comparisons never pick up
    float noise.
    """

    kind: str
    rational: Optional[Fraction] = None
    decimal_repr: Optional[str] = None
    decimal_value: Optional[Fraction] = None
    text: Optional[str] = None

    @staticmethod
    def from_rational(value: Fraction) -> "AnswerValue":
        return AnswerValue(kind=EXACT_RATIONAL, rational=value)

    @staticmethod
    def from_decimal_literal(literal: str) -> "AnswerValue":
        value = Fraction(literal)
        if value.denominator == 1:
            return AnswerValue.from_rational(value)
        return AnswerValue(
            kind=DECIMAL,
            decimal_repr=_canonical_decimal_string(literal),
            decimal_value=value,
        )

    @staticmethod
    def from_symbolic(text: str) -> "AnswerValue":
        return AnswerValue(kind=SYMBOLIC_TEXT, text=text)

    def numeric_value(self) -> Optional[Fraction]:
        if self.kind == EXACT_RATIONAL:
            return self.rational
        if self.kind == DECIMAL:
            return self.decimal_value
        return None

    def render(self) -> str:
        """Text form that normalize() maps back to this value."""
        if self.kind == EXACT_RATIONAL:
            if self.rational.denominator == 1:
                return str(self.rational.numerator)
            return f"{self.rational.numerator}/{self.rational.denominator}"
        if self.kind == DECIMAL:
            return self.decimal_repr
        return self.text


def _canonical_decimal_string(literal: str) -> str:
    """No leading '+', no thousands separators, no trailing zeros, -0 -> 0."""
    s = literal.strip().replace(",", "").lstrip("+")
    negative = s.startswith("-")
    if negative:
        s = s[1:]
    if "." in s:
        whole, frac = s.split(".", 1)
        frac = frac.rstrip("0")
    else:
        whole, frac = s, ""
    whole = whole.lstrip("0") or "0"
    out = whole if not frac else f"{whole}.{frac}"
    if negative and out != "0":
        out = "-" + out
    return out


def _strip_wrapping(raw: str) -> str:
    """Peel currency/percent/unit decoration until the text is stable."""
    s = raw.replace(",", "")
    while True:
        before = s
        s = s.strip()
        if s.startswith("$") and s.endswith("$") and len(s) >= 2:
            s = s[1:-1]
        s = s.strip("$")
        s = s.rstrip("%")
        if s.endswith("\\"):  # leftover of an escaped \% or \$
            s = s[:-1]
        s = s.rstrip(".")
        lowered = s.lower()
        for unit in _UNIT_WORDS:
            if lowered.endswith(unit):
                head = s[: len(s) - len(unit)]
                if head == "" or head.endswith(" "):
                    s = head
                break
        if s == before:
            return s


def _canonical_symbolic(s: str) -> str:
    s = s.replace("\\left", "").replace("\\right", "")
    return re.sub(r"\s+", "", s)


def normalize(raw: str) -> AnswerValue:
    """Parse free text into a canonical AnswerValue.

    Priority: integer, decimal, simple fraction (a/b or \\frac{a}{b}), then
    symbolic text with light LaTeX cleanup.
    """
    if raw is None or not raw.strip():
        raise EmptyInput("answer text is empty")
    s = _strip_wrapping(raw)
    if not s:
        raise EmptyInput(f"nothing left after stripping decoration: {raw!r}")

    if _INT_RE.fullmatch(s):
        return AnswerValue.from_rational(Fraction(int(s)))
    if _DECIMAL_RE.fullmatch(s):
        return AnswerValue.from_decimal_literal(s)
    m = _SLASH_FRACTION_RE.fullmatch(s)
    if m and int(m.group(2)) != 0:
        return AnswerValue.from_rational(Fraction(int(m.group(1)), int(m.group(2))))
    m = _LATEX_FRACTION_RE.fullmatch(s)
    if m and int(m.group(3)) != 0:
        value = Fraction(int(m.group(2)), int(m.group(3)))
        if m.group(1) == "-":
            value = -value
        return AnswerValue.from_rational(value)

    text = _canonical_symbolic(s)
    if not text:
        raise EmptyInput(f"nothing left after stripping decoration: {raw!r}")
    return AnswerValue.from_symbolic(text)


def equivalent(a: AnswerValue, b: AnswerValue) -> bool:
    """One equality notion for the whole system.

    Exact-exact compares rationals exactly; any comparison touching a decimal
    uses abs/rel tolerance; numeric never equals symbolic; symbolic compares
    canonical strings. Symmetric by construction.
    """
    va, vb = a.numeric_value(), b.numeric_value()
    if va is not None and vb is not None:
        if a.kind == EXACT_RATIONAL and b.kind == EXACT_RATIONAL:
            return va == vb
        diff = abs(va - vb)
        return diff <= max(TOLERANCE_ABS, TOLERANCE_REL * max(abs(va), abs(vb)))
    if va is None and vb is None:
        return a.text == b.text
    return False


def match_brace(text: str, open_index: int) -> Optional[int]:
    """Index of the '}' closing the '{' at open_index, or None if unbalanced.

    Depth counting with escape awareness: a backslash consumes the next
    character, so \\{ and \\} are literals, not group delimiters.
    """
    if open_index >= len(text) or text[open_index] != "{":
        raise ValueError(f"no opening brace at index {open_index}")
    depth = 0
    i = open_index
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\\":
            i += 2
            continue
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                return i
        i += 1
    return None


def boxed_groups(text: str) -> list:
    """Contents of top-level \\boxed{...} groups, left to right.

    Nested boxes stay inside their enclosing group's content; a box whose
    braces never balance is skipped.
    """
    groups = []
    i = 0
    n = len(text)
    while True:
        j = text.find("\\boxed", i)
        if j < 0:
            return groups
        k = j + len("\\boxed")
        while k < n and text[k].isspace():
            k += 1
        if k >= n or text[k] != "{":
            i = j + len("\\boxed")
            continue
        close = match_brace(text, k)
        if close is None:
            i = k + 1
            continue
        groups.append(text[k + 1 : close])
        i = close + 1


def last_boxed_group(text: str) -> Optional[str]:
    groups = boxed_groups(text)
    return groups[-1] if groups else None


def extract_answer_rule_based(text: str, mode: str = "numeric") -> Optional[AnswerValue]:
    """Pull a final answer out of free text; absence is None, never an error.

    numeric: last number token after the last extraction cue, else the last
    number token anywhere. boxed: content of the last balanced \\boxed{}.
    """
    if mode == "boxed":
        group = last_boxed_group(text)
        if group is None:
            return None
        try:
            return normalize(group)
        except EmptyInput:
            return None
    if mode != "numeric":
        raise ValueError(f"unknown extraction mode: {mode}")
    cue_at = text.rfind(ANSWER_CUE)
    scope = text[cue_at + len(ANSWER_CUE) :] if cue_at >= 0 else text
    tokens = _NUMBER_TOKEN.findall(scope)
    if not tokens and cue_at >= 0:
        tokens = _NUMBER_TOKEN.findall(text)
    if not tokens:
        return None
    try:
        return normalize(tokens[-1])
    except EmptyInput:
        return None
