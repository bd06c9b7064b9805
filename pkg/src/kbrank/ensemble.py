"""Correlation between methods and majority-vote ensembles."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .judgment import Abstention, PreferenceJudge, PreferenceJudgment, Winner


class Vote(enum.Enum):
    FIRST = "FIRST"
    SECOND = "SECOND"
    TIE = "TIE"
    ABSTAIN = "ABSTAIN"

    @classmethod
    def of(cls, judgment: PreferenceJudgment | None) -> "Vote":
        if judgment is None:
            return cls.ABSTAIN
        return cls(judgment.winner.value)


class UndefinedCorrelation(ValueError):
    pass


def _encode(column: Sequence[Vote]) -> list[float | None]:
    return [1.0 if v is Vote.FIRST else 0.0 if v is Vote.SECOND else None for v in column]


def pearson(a: Sequence[Vote], b: Sequence[Vote]) -> float:
    """Sample Pearson coefficient of two judgment columns, FIRST=1 and SECOND=0.

    Rows where either side tied or abstained are dropped.
    """
    if len(a) != len(b):
        raise ValueError("columns differ in length")
    pairs = [(x, y) for x, y in zip(_encode(a), _encode(b)) if x is not None and y is not None]
    if len(pairs) < 2:
        raise UndefinedCorrelation("undefined correlation: fewer than two comparable rows")
    x = np.array([p[0] for p in pairs])
    y = np.array([p[1] for p in pairs])
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelation("undefined correlation: zero variance")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


@dataclass
class JudgmentMatrix:
    record_ids: list[str]
    methods: list[str]
    cells: list[list[Vote]] = field(default_factory=list)   # rows x methods

    def __post_init__(self):
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("duplicate method names")
        if not self.cells:
            self.cells = [[Vote.ABSTAIN] * len(self.methods) for _ in self.record_ids]
        if len(self.cells) != len(self.record_ids) or any(len(r) != len(self.methods) for r in self.cells):
            raise ValueError("judgment matrix dimensions are inconsistent")

    def column(self, method: str) -> list[Vote]:
        j = self.methods.index(method)
        return [row[j] for row in self.cells]

    def subset(self, keep_rows: Iterable[int]) -> "JudgmentMatrix":
        keep = list(keep_rows)
        return JudgmentMatrix([self.record_ids[i] for i in keep], list(self.methods),
                              [list(self.cells[i]) for i in keep])

    def to_rows(self) -> list[tuple[str, str, str]]:
        return [(rid, m, self.cells[i][j].value)
                for i, rid in enumerate(self.record_ids) for j, m in enumerate(self.methods)]

    def write_tsv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, delimiter="\t", lineterminator="\n")
            w.writerow(["record_id", "method", "judgment"])
            w.writerows(self.to_rows())

    @classmethod
    def read_tsv(cls, path) -> "JudgmentMatrix":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh, delimiter="\t"))
        records, methods = [], []
        for r in rows:
            if r["record_id"] not in records:
                records.append(r["record_id"])
            if r["method"] not in methods:
                methods.append(r["method"])
        m = cls(records, methods)
        ri = {r: i for i, r in enumerate(records)}
        mi = {x: j for j, x in enumerate(methods)}
        for r in rows:
            m.cells[ri[r["record_id"]]][mi[r["method"]]] = Vote(r["judgment"])
        return m


def correlation_matrix(matrix: JudgmentMatrix) -> np.ndarray:
    """Pairwise Pearson table; NaN on the diagonal and for undefined cells."""
    k = len(matrix.methods)
    out = np.full((k, k), np.nan)
    cols = [matrix.column(m) for m in matrix.methods]
    for i in range(k):
        for j in range(i + 1, k):
            try:
                out[i, j] = out[j, i] = pearson(cols[i], cols[j])
            except UndefinedCorrelation:
                pass
    return out


TIE_BREAK_RULES = ("tie", "first_member")


@dataclass(frozen=True)
class EnsembleSpec:
    name: str
    members: tuple[str, ...]
    tie_break: str = "tie"

    def __post_init__(self):
        if len(self.members) < 3:
            raise ValueError("an ensemble needs at least 3 members")
        if len(set(self.members)) != len(self.members):
            raise ValueError("ensemble members must be distinct")
        if self.tie_break not in TIE_BREAK_RULES:
            raise ValueError(f"unknown tie-break rule {self.tie_break!r}")

    def to_config(self) -> dict:
        return {"name": self.name, "members": list(self.members), "tie_break": self.tie_break}

    @classmethod
    def from_config(cls, d: dict) -> "EnsembleSpec":
        return cls(d["name"], tuple(d["members"]), d.get("tie_break", "tie"))


def default_ensemble() -> EnsembleSpec:
    """Google count, LSI, LDA, occupation frequency and TF-IDF regression."""
    return EnsembleSpec("best_ensemble", ("search_count", "lsi", "lda",
                                          "occupation_frequency", "regression_tfidf"))


def majority_judge(spec: EnsembleSpec, votes: Sequence[Vote]) -> PreferenceJudgment:
    """Strict majority of FIRST vs SECOND among members that neither tied nor abstained.

    Scores are the vote counts. Under the ``first_member`` rule a tied count is
    resolved by the first member that expressed a preference, by adding half a
    vote to its side.
    """
    if len(votes) != len(spec.members):
        raise ValueError(f"expected {len(spec.members)} votes, got {len(votes)}")
    if all(v is Vote.ABSTAIN for v in votes):
        raise Abstention(f"all members of {spec.name} abstained")
    first = float(sum(v is Vote.FIRST for v in votes))
    second = float(sum(v is Vote.SECOND for v in votes))
    if first == second and spec.tie_break == "first_member":
        for v in votes:
            if v is Vote.FIRST:
                first += 0.5
                break
            if v is Vote.SECOND:
                second += 0.5
                break
    return PreferenceJudgment.from_scores(first, second)


class MajorityJudge:
    def __init__(self, spec: EnsembleSpec, members: Sequence[PreferenceJudge]):
        if [m.name for m in members] != list(spec.members):
            raise ValueError("member judges do not match the ensemble spec")
        self.spec = spec
        self.members = list(members)
        self.name = spec.name

    def votes(self, entity, first, second) -> list[Vote]:
        out = []
        for m in self.members:
            try:
                out.append(Vote.of(m.judge(entity, first, second)))
            except Abstention:
                out.append(Vote.ABSTAIN)
        return out

    def judge(self, entity, first, second):
        return majority_judge(self.spec, self.votes(entity, first, second))


def winner_vote(w: Winner) -> Vote:
    return Vote(w.value)
