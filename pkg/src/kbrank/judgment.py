"""Pairwise preference judgments shared by every ranking method."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Protocol, runtime_checkable


class Winner(enum.Enum):
    FIRST = "FIRST"
    SECOND = "SECOND"
    TIE = "TIE"

    def mirrored(self) -> "Winner":
        if self is Winner.FIRST:
            return Winner.SECOND
        if self is Winner.SECOND:
            return Winner.FIRST
        return Winner.TIE


class Abstention(Exception):
    """A method cannot judge a pair at all. Never confused with a tie."""


@dataclass(frozen=True)
class PreferenceJudgment:
    winner: Winner
    score_first: float
    score_second: float

    def __post_init__(self):
        expected = _winner_for(self.score_first, self.score_second)
        if expected is not self.winner:
            raise ValueError(
                f"winner {self.winner.value} inconsistent with scores "
                f"({self.score_first!r}, {self.score_second!r})")

    @classmethod
    def from_scores(cls, score_first: float, score_second: float) -> "PreferenceJudgment":
        return cls(_winner_for(score_first, score_second),
                   float(score_first), float(score_second))

    def mirrored(self) -> "PreferenceJudgment":
        return PreferenceJudgment(self.winner.mirrored(), self.score_second, self.score_first)


def _winner_for(a: float, b: float) -> Winner:
    if a > b:
        return Winner.FIRST
    if b > a:
        return Winner.SECOND
    return Winner.TIE


@runtime_checkable
class PreferenceJudge(Protocol):
    name: str

    def judge(self, entity: str, first: str, second: str) -> PreferenceJudgment:
        ...


def check_distinct(first: str, second: str) -> None:
    if first == second:
        raise ValueError(f"properties must differ, got {first!r} twice")
