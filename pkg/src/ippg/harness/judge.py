from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from enum import Enum
from typing import Callable


class Verdict(str, Enum):
    CORRECT = "correct"
    INCORRECT = "incorrect"
    UNPARSEABLE = "unparseable"
    ERRORED = "errored"

    @property
    def correct(self) -> bool:
        return self is Verdict.CORRECT


class JudgeRule(str, Enum):
    EXACT = "exact"
    NUMERIC = "numeric"
    DELEGATE = "delegate"


def parse_number(text: str) -> Decimal | None:
    """Decimal value of ``text`` after dropping currency symbols, commas and spaces."""
    cleaned = "".join(
        ch for ch in text if ch not in ", \t\n" and unicodedata.category(ch) != "Sc"
    )
    if not cleaned:
        return None
    try:
        value = Decimal(cleaned)
    except InvalidOperation:
        return None
    return value if value.is_finite() else None


def judge(
    prediction: str,
    ground_truth: str,
    rule: JudgeRule | str = JudgeRule.EXACT,
    delegate: Callable[[str, str], bool] | None = None,
) -> Verdict:
    rule = JudgeRule(rule)
    if rule is JudgeRule.EXACT:
        same = prediction.strip().casefold() == ground_truth.strip().casefold()
        return Verdict.CORRECT if same else Verdict.INCORRECT
    if rule is JudgeRule.NUMERIC:
        expected = parse_number(ground_truth)
        if expected is None:
            raise ValueError(f"ground truth {ground_truth!r} is not numeric")
        got = parse_number(prediction)
        if got is None:
            return Verdict.UNPARSEABLE
        return Verdict.CORRECT if got == expected else Verdict.INCORRECT
    if delegate is None:
        raise ValueError("delegate rule needs an external judge callable")
    return Verdict.CORRECT if delegate(prediction, ground_truth) else Verdict.INCORRECT


@dataclass(frozen=True)
class Judge:
    """A configured judging rule, callable as ``judge(prediction, ground_truth)``."""

    rule: JudgeRule = JudgeRule.EXACT
    delegate: Callable[[str, str], bool] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "rule", JudgeRule(self.rule))
        if self.rule is JudgeRule.DELEGATE and self.delegate is None:
            raise ValueError("delegate rule needs an external judge callable")

    def __call__(self, prediction: str, ground_truth: str) -> Verdict:
        return judge(prediction, ground_truth, self.rule, self.delegate)
