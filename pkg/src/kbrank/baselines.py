"""Frequency, search-count and association-rule baselines."""

from __future__ import annotations

import json
import threading
from typing import Iterable, Protocol

from .judgment import Abstention, PreferenceJudgment, check_distinct
from .kbstore import KnowledgeStore


class SearchCountProvider(Protocol):
    def count(self, query: str) -> int:
        ...


class SearchProviderError(Exception):
    def __init__(self, query: str, reason: str):
        super().__init__(f"search count failed for query {query!r}: {reason}")
        self.query = query


class FixtureSearchProvider:
    """Offline provider answering from a ``{"query", "count"}`` JSONL file.

    Lookups are read-only after construction, so instances are thread-safe.
    """

    def __init__(self, counts: dict[str, int]):
        for q, c in counts.items():
            if not isinstance(c, int) or c < 0:
                raise ValueError(f"count for {q!r} must be a non-negative integer")
        self.counts = dict(counts)

    @classmethod
    def from_jsonl(cls, lines: Iterable[str]) -> "FixtureSearchProvider":
        counts = {}
        for lineno, line in enumerate(lines, 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                counts[d["query"]] = int(d["count"])
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"line {lineno}: bad fixture record: {exc}") from None
        return cls(counts)

    @classmethod
    def from_file(cls, path) -> "FixtureSearchProvider":
        with open(path, encoding="utf-8") as fh:
            return cls.from_jsonl(fh)

    def count(self, query: str) -> int:
        try:
            return self.counts[query]
        except KeyError:
            raise SearchProviderError(query, "query not in fixture") from None


class CachingProvider:
    """Memoizes another provider; useful around slow live clients."""

    def __init__(self, inner: SearchCountProvider):
        self.inner = inner
        self._cache: dict[str, int] = {}
        self._lock = threading.Lock()

    def count(self, query: str) -> int:
        with self._lock:
            if query in self._cache:
                return self._cache[query]
        n = self.inner.count(query)
        with self._lock:
            self._cache[query] = n
        return n


def search_query(entity_label: str, property_label: str) -> str:
    return f"{entity_label} {property_label}"


def human_frequency_judge(store: KnowledgeStore, e: str, p: str, q: str) -> PreferenceJudgment:
    check_distinct(p, q)
    return PreferenceJudgment.from_scores(store.usage(p), store.usage(q))


def occupation_frequency_judge(store: KnowledgeStore, e: str, p: str, q: str) -> PreferenceJudgment:
    """Usage counts restricted to entities sharing an occupation with ``e``.

    Falls back to global human frequency when the cohort is empty.
    """
    check_distinct(p, q)
    cohort = store.occupation_cohort(e)
    if not cohort:
        return human_frequency_judge(store, e, p, q)
    return PreferenceJudgment.from_scores(store.cohort_usage(cohort, p),
                                          store.cohort_usage(cohort, q))


def search_count_judge(provider: SearchCountProvider, store: KnowledgeStore,
                       e: str, p: str, q: str) -> PreferenceJudgment:
    check_distinct(p, q)
    label = store.entity(e).label
    counts = []
    for prop in (p, q):
        query = search_query(label, store.property(prop).label)
        try:
            n = provider.count(query)
        except SearchProviderError:
            raise
        except Exception as exc:
            raise SearchProviderError(query, str(exc)) from exc
        counts.append(n)
    return PreferenceJudgment.from_scores(*counts)


def confidence(store: KnowledgeStore, antecedent: str, consequent: str) -> float:
    n = store.usage(antecedent)
    if n == 0:
        return 0.0
    return store.cooccurrences(antecedent, consequent) / n


def association_score(store: KnowledgeStore, e: str, candidate: str) -> float:
    """Sum of squared rule confidences conf(p -> candidate) over e's other properties."""
    store.property(candidate)
    record = store.entity(e)
    total = 0.0
    for p in sorted(record.properties):
        if p == candidate:
            continue
        c = confidence(store, p, candidate)
        total += c * c
    return total


def property_suggester_judge(store: KnowledgeStore, e: str, p: str, q: str) -> PreferenceJudgment:
    check_distinct(p, q)
    return PreferenceJudgment.from_scores(association_score(store, e, p),
                                          association_score(store, e, q))


class _StoreJudge:
    fn = None

    def __init__(self, store: KnowledgeStore, name: str | None = None):
        self.store = store
        if name:
            self.name = name

    def judge(self, entity, first, second):
        return type(self).fn(self.store, entity, first, second)


class HumanFrequencyJudge(_StoreJudge):
    name = "human_frequency"
    fn = staticmethod(human_frequency_judge)


class OccupationFrequencyJudge(_StoreJudge):
    name = "occupation_frequency"
    fn = staticmethod(occupation_frequency_judge)


class PropertySuggesterJudge(_StoreJudge):
    name = "property_suggester"
    fn = staticmethod(property_suggester_judge)


class SearchCountJudge:
    name = "search_count"

    def __init__(self, store: KnowledgeStore, provider: SearchCountProvider):
        self.store = store
        self.provider = provider

    def judge(self, entity, first, second):
        try:
            return search_count_judge(self.provider, self.store, entity, first, second)
        except SearchProviderError as exc:
            raise Abstention(str(exc)) from exc
