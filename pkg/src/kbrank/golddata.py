"""Gold preference records, annotator agreement and ppref evaluation.

Gold CSV columns::

    entity_label,entity_description,prop_a,prop_b,votes_a,votes_b

Optional columns ``record_id``, ``entity_id``, ``prop_a_id`` and ``prop_b_id``
are used when present.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .judgment import Abstention, PreferenceJudge, PreferenceJudgment, Winner

N_VOTES = 10
AGREEMENT_LEVELS = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
BUCKETS = (("≥70%", 0.7, False), ("≥80%", 0.8, False), ("≥90%", 0.9, False), ("=100%", 1.0, True))

REQUIRED_COLUMNS = ("entity_label", "entity_description", "prop_a", "prop_b", "votes_a", "votes_b")


class GoldDataError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("; ".join(errors))


@dataclass(frozen=True)
class GoldRecord:
    entity_label: str
    entity_description: str
    prop_a: str
    prop_b: str
    votes_a: int
    votes_b: int
    record_id: str = ""
    entity_id: str | None = None
    prop_a_id: str | None = None
    prop_b_id: str | None = None

    def __post_init__(self):
        if self.votes_a < 0 or self.votes_b < 0 or self.votes_a + self.votes_b != N_VOTES:
            raise ValueError(f"votes {self.votes_a}+{self.votes_b} do not sum to {N_VOTES}")

    @property
    def majority_votes(self) -> int:
        return max(self.votes_a, self.votes_b)

    @property
    def agreement(self) -> float:
        return self.majority_votes / N_VOTES

    @property
    def preferred(self) -> str:
        if self.votes_a > self.votes_b:
            return "A"
        if self.votes_b > self.votes_a:
            return "B"
        return "NONE"

    @property
    def preferred_winner(self) -> Winner | None:
        return {"A": Winner.FIRST, "B": Winner.SECOND}.get(self.preferred)


def _parse_row(row: dict, rownum: int) -> GoldRecord:
    missing = [c for c in REQUIRED_COLUMNS if not (row.get(c) or "").strip()]
    if missing:
        raise ValueError(f"missing {', '.join(missing)}")
    try:
        va, vb = int(row["votes_a"]), int(row["votes_b"])
    except ValueError:
        raise ValueError("votes must be integers") from None
    return GoldRecord(
        row["entity_label"].strip(), row["entity_description"].strip(),
        row["prop_a"].strip(), row["prop_b"].strip(), va, vb,
        record_id=(row.get("record_id") or "").strip() or f"r{rownum:04d}",
        entity_id=(row.get("entity_id") or "").strip() or None,
        prop_a_id=(row.get("prop_a_id") or "").strip() or None,
        prop_b_id=(row.get("prop_b_id") or "").strip() or None,
    )


def load_gold(path, on_error: str = "raise") -> list[GoldRecord]:
    """Read gold records. Bad rows raise GoldDataError listing every problem,
    or are dropped when ``on_error="skip"``."""
    records, errors = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        absent = [c for c in REQUIRED_COLUMNS if c not in (reader.fieldnames or [])]
        if absent:
            raise GoldDataError([f"{path}: missing columns {', '.join(absent)}"])
        for rownum, row in enumerate(reader, 1):
            try:
                records.append(_parse_row(row, rownum))
            except ValueError as exc:
                errors.append(f"{path}: row {rownum}: {exc}")
    if errors and on_error == "raise":
        raise GoldDataError(errors)
    return records


def agreement_distribution(records: Sequence[GoldRecord]) -> tuple[dict[float, int], float]:
    """Histogram over agreement levels 0.5..1.0 and the mean agreement."""
    if not records:
        raise ValueError("no records")
    counts = Counter(r.majority_votes for r in records)
    hist = {m / N_VOTES: counts.get(m, 0) for m in range(N_VOTES // 2, N_VOTES + 1)}
    mean = sum(r.majority_votes for r in records) / (N_VOTES * len(records))
    return hist, mean


def random_agreement_model(n_votes: int = N_VOTES) -> dict[Fraction, Fraction]:
    """Exact distribution of the agreement level when every vote is a fair coin."""
    if n_votes < 1:
        raise ValueError("n_votes must be >= 1")
    total = 2 ** n_votes
    dist = {}
    for m in range(math.ceil(n_votes / 2), n_votes + 1):
        ways = math.comb(n_votes, m)
        if 2 * m != n_votes:
            ways *= 2
        dist[Fraction(m, n_votes)] = Fraction(ways, total)
    return dist


def simulate_random_agreement(trials: int, n_votes: int = N_VOTES, seed: int = 0) -> dict[float, float]:
    rng = np.random.default_rng(seed)
    a = rng.binomial(n_votes, 0.5, size=trials)
    majority = np.maximum(a, n_votes - a)
    counts = np.bincount(majority, minlength=n_votes + 1)
    return {m / n_votes: counts[m] / trials for m in range(math.ceil(n_votes / 2), n_votes + 1)}


def fleiss_kappa(records: Sequence[GoldRecord]) -> float:
    """Fleiss' kappa with the two categories "first property" / "second property"."""
    if len(records) < 2:
        raise ValueError("need at least two records")
    n = N_VOTES
    counts = np.array([[r.votes_a, r.votes_b] for r in records], dtype=np.float64)
    p_i = (np.sum(counts * counts, axis=1) - n) / (n * (n - 1))
    p_bar = p_i.mean()
    p_j = counts.sum(axis=0) / (len(records) * n)
    p_e = float(np.sum(p_j ** 2))
    if p_e == 1.0:
        raise ValueError("degenerate category distribution")
    return float((p_bar - p_e) / (1 - p_e))


def in_bucket(record: GoldRecord, threshold: float, exact: bool = False) -> bool:
    # compare integer vote counts to avoid float rounding at the boundaries
    need = round(threshold * N_VOTES)
    if record.preferred == "NONE":
        return False
    return record.majority_votes == need if exact else record.majority_votes >= need


@dataclass
class PprefResult:
    ppref: float
    n: int
    correct: int
    ties: int
    abstentions: int


def ppref(judgments: Sequence[PreferenceJudgment | None], records: Sequence[GoldRecord],
          threshold: float, exact: bool | None = None) -> PprefResult:
    """Fraction of bucket records where the method picks the majority property.

    ``None`` stands for an abstention. Ties and abstentions count as misses.
    ``exact`` defaults to True for the 1.0 bucket.
    """
    if len(judgments) != len(records):
        raise ValueError("judgments and records are not aligned")
    if exact is None:
        exact = threshold >= 1.0
    n = correct = ties = abstain = 0
    for j, r in zip(judgments, records):
        if not in_bucket(r, threshold, exact):
            continue
        n += 1
        if j is None:
            abstain += 1
        elif j.winner is Winner.TIE:
            ties += 1
        elif j.winner is r.preferred_winner:
            correct += 1
    if n == 0:
        raise ValueError(f"no records in bucket {threshold}")
    return PprefResult(correct / n, n, correct, ties, abstain)


def annotator_agreement(records: Sequence[GoldRecord], threshold: float, exact: bool = False) -> float:
    members = [r for r in records if in_bucket(r, threshold, exact)]
    if not members:
        raise ValueError(f"no records in bucket {threshold}")
    return sum(r.agreement for r in members) / len(members)


@dataclass
class EvalReport:
    buckets: list[str]
    sizes: list[int]
    annotators: list[float]
    random: list[float]
    methods: dict[str, list[PprefResult | None]] = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)

    def rows(self) -> list[list[str]]:
        header = ["method"] + [f"{b} (n={n})" for b, n in zip(self.buckets, self.sizes)] + ["abstentions"]
        out = [header,
               ["Random"] + [_pct(v) for v in self.random] + [""],
               ["Annotators"] + [_pct(v) for v in self.annotators] + [""]]
        for name, cells in self.methods.items():
            if name in self.failures:
                out.append([name] + ["error"] * len(self.buckets) + [""])
                continue
            abst = cells[0].abstentions if cells and cells[0] is not None else 0
            out.append([name] + [_pct(c.ppref) if c else "n/a" for c in cells] + [str(abst)])
        return out

    def to_json(self) -> dict:
        return {
            "buckets": [{"name": b, "n": n, "annotators": a, "random": r}
                        for b, n, a, r in zip(self.buckets, self.sizes, self.annotators, self.random)],
            "methods": {m: [None if c is None else vars(c) for c in cells]
                        for m, cells in self.methods.items()},
            "failures": self.failures,
        }


def _pct(x: float) -> str:
    return f"{100 * x:.1f}%"


def evaluate(judgments: Mapping[str, Sequence[PreferenceJudgment | None]],
             records: Sequence[GoldRecord], failures: Mapping[str, str] | None = None) -> EvalReport:
    """Assemble ppref per method and agreement bucket, plus reference rows.

    ``judgments`` maps method names to per-record judgments (None for an
    abstention); ``failures`` lists methods that could not run at all.
    """
    failures = dict(failures or {})
    names, sizes, annot = [], [], []
    for name, thr, exact in BUCKETS:
        members = [r for r in records if in_bucket(r, thr, exact)]
        names.append(name)
        sizes.append(len(members))
        annot.append(annotator_agreement(records, thr, exact) if members else float("nan"))
    report = EvalReport(names, sizes, annot, [0.5] * len(BUCKETS), failures=failures)
    for method in list(judgments) + [m for m in failures if m not in judgments]:
        if method in failures:
            report.methods[method] = [None] * len(BUCKETS)
            continue
        cells = []
        for (_, thr, exact), size in zip(BUCKETS, sizes):
            cells.append(ppref(judgments[method], records, thr, exact) if size else None)
        report.methods[method] = cells
    return report


def resolve(record: GoldRecord, entity_id: Callable[[str], str] | None = None,
            property_id: Callable[[str], str] | None = None) -> tuple[str, str, str]:
    """Ids for a record: explicit id columns first, then lookups, then labels."""
    e = record.entity_id or (entity_id(record.entity_label) if entity_id else record.entity_label)
    p = record.prop_a_id or (property_id(record.prop_a) if property_id else record.prop_a)
    q = record.prop_b_id or (property_id(record.prop_b) if property_id else record.prop_b)
    return e, p, q


def run_judge(judge: PreferenceJudge, queries: Sequence[tuple[str, str, str] | None]
              ) -> list[PreferenceJudgment | None]:
    out = []
    for query in queries:
        if query is None:
            out.append(None)
            continue
        try:
            out.append(judge.judge(*query))
        except Abstention:
            out.append(None)
    return out


class MajorityEchoJudge:
    """Reference method that repeats the annotator majority of each record."""
    name = "majority_echo"

    def __init__(self, records: Sequence[GoldRecord], queries: Sequence[tuple[str, str, str]]):
        self._answers = {}
        for r, (e, p, q) in zip(records, queries):
            s = {"A": (1.0, 0.0), "B": (0.0, 1.0), "NONE": (0.0, 0.0)}[r.preferred]
            self._answers[(e, p, q)] = s
            self._answers[(e, q, p)] = s[::-1]

    def judge(self, entity, first, second):
        try:
            return PreferenceJudgment.from_scores(*self._answers[(entity, first, second)])
        except KeyError:
            raise Abstention(f"no gold record for ({entity}, {first}, {second})") from None
