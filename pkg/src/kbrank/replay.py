"""Judges that need no models: seeded coin flips and replays of recorded outputs.

Recorded outputs are JSONL lines such as::

    {"method": "lsi", "entity": "Ronaldo", "first": "goals scored",
     "second": "military rank", "score_first": 0.987, "score_second": 0.611}
    {"method": "regression_tfidf", "entity": "Albert Johnson",
     "first": "military conflict", "second": "drafted by", "winner": "military conflict"}

A line carries either both scores or the winning property (or ``"tie"``), or
``"abstain": true``.
"""

from __future__ import annotations

import hashlib
import json
from collections import defaultdict
from typing import Iterable

from .judgment import Abstention, PreferenceJudgment, check_distinct


class RandomJudge:
    """Fair coin per (entity, unordered pair), mirrored under argument swap."""

    def __init__(self, seed: int = 0, name: str = "random"):
        self.seed = seed
        self.name = name

    def judge(self, entity, first, second):
        check_distinct(first, second)
        lo, hi = sorted((first, second))
        digest = hashlib.sha256(f"{self.seed}\0{entity}\0{lo}\0{hi}".encode()).digest()
        lo_wins = digest[0] & 1
        score_lo, score_hi = (1.0, 0.0) if lo_wins else (0.0, 1.0)
        if first == lo:
            return PreferenceJudgment.from_scores(score_lo, score_hi)
        return PreferenceJudgment.from_scores(score_hi, score_lo)


class RecordedJudge:
    """Replays stored method outputs; unknown queries abstain."""

    def __init__(self, name: str, entries: dict[tuple[str, str, str], PreferenceJudgment | None]):
        self.name = name
        self._entries = entries

    def judge(self, entity, first, second):
        check_distinct(first, second)
        key = (entity, first, second)
        if key in self._entries:
            j = self._entries[key]
        elif (entity, second, first) in self._entries:
            j = self._entries[(entity, second, first)]
            j = None if j is None else j.mirrored()
        else:
            raise Abstention(f"{self.name}: no recorded output for {key}")
        if j is None:
            raise Abstention(f"{self.name}: recorded abstention for {key}")
        return j


def _entry_judgment(d: dict) -> PreferenceJudgment | None:
    if d.get("abstain"):
        return None
    if "score_first" in d or "score_second" in d:
        return PreferenceJudgment.from_scores(float(d["score_first"]), float(d["score_second"]))
    winner = d["winner"]
    if winner == d["first"]:
        return PreferenceJudgment.from_scores(1.0, 0.0)
    if winner == d["second"]:
        return PreferenceJudgment.from_scores(0.0, 1.0)
    if winner == "tie":
        return PreferenceJudgment.from_scores(0.0, 0.0)
    raise ValueError(f"winner {winner!r} is neither property")


def read_recorded(lines: Iterable[str]) -> dict[str, RecordedJudge]:
    """Group recorded outputs by method into one judge each."""
    by_method: dict[str, dict] = defaultdict(dict)
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            key = (d["entity"], d["first"], d["second"])
            by_method[d["method"]][key] = _entry_judgment(d)
        except (ValueError, KeyError, TypeError) as exc:
            raise ValueError(f"line {lineno}: bad recorded output: {exc}") from None
    return {m: RecordedJudge(m, entries) for m, entries in by_method.items()}


def load_recorded(path) -> dict[str, RecordedJudge]:
    with open(path, encoding="utf-8") as fh:
        return read_recorded(fh)
