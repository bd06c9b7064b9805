"""Tokenization, bags of words and TF-IDF weighting for article text.

Corpus files are newline-delimited JSON objects ``{"doc_id": ..., "text": ...}``.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .porter import stem

STOPWORDS_VERSION = "en_v1"

_TOKEN_RE = re.compile(r"[^\W_]+")


class CorpusError(Exception):
    pass


def load_stopwords(version: str = STOPWORDS_VERSION) -> frozenset[str]:
    text = resources.files("kbrank.data").joinpath(f"stopwords_{version}.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


STOPWORDS = load_stopwords()


def preprocess(text: str, stopwords: frozenset[str] = STOPWORDS) -> list[str]:
    """Lowercase, strip punctuation, drop stop words and Porter-stem.

    Stop words are removed both before and after stemming, so a stem that
    collides with a stop word ("wills" -> "will") is dropped too.
    """
    out = []
    for tok in _TOKEN_RE.findall(text.lower()):
        if tok in stopwords:
            continue
        s = stem(tok)
        if s and s not in stopwords:
            out.append(s)
    return out


@dataclass
class Vocabulary:
    term_to_id: dict[str, int]
    doc_frequency: np.ndarray
    total_docs: int

    def __len__(self):
        return len(self.term_to_id)

    @cached_property
    def terms(self) -> list[str]:
        terms = [""] * len(self.term_to_id)
        for t, i in self.term_to_id.items():
            terms[i] = t
        return terms

    def df(self, term: str) -> int:
        return int(self.doc_frequency[self.term_to_id[term]])

    def bag(self, tokens: Iterable[str]) -> dict[int, int]:
        """Count the in-vocabulary tokens; unknown tokens are dropped."""
        ids = self.term_to_id
        return dict(Counter(ids[t] for t in tokens if t in ids))

    def to_json(self) -> dict:
        return {"terms": self.terms, "doc_frequency": self.doc_frequency.tolist(),
                "total_docs": self.total_docs}

    @classmethod
    def from_json(cls, d: dict) -> "Vocabulary":
        return cls({t: i for i, t in enumerate(d["terms"])},
                   np.asarray(d["doc_frequency"], dtype=np.int64), int(d["total_docs"]))


def build_vocabulary(docs: Sequence[Sequence[str]]) -> Vocabulary:
    """Term ids are assigned in sorted term order, so they are stable across runs."""
    if not docs:
        raise CorpusError("cannot build a vocabulary from zero documents")
    df = Counter()
    for doc in docs:
        df.update(set(doc))
    terms = sorted(df)
    return Vocabulary({t: i for i, t in enumerate(terms)},
                      np.array([df[t] for t in terms], dtype=np.int64), len(docs))


@dataclass
class TfIdfModel:
    vocabulary: Vocabulary
    idf: dict[int, float]
    prune_low: float = 0.2
    prune_high: float = 0.2

    @property
    def retained(self) -> list[int]:
        return sorted(self.idf)

    def to_json(self) -> dict:
        return {"idf": {str(k): v for k, v in sorted(self.idf.items())},
                "prune_low": self.prune_low, "prune_high": self.prune_high}

    @classmethod
    def from_json(cls, vocab: Vocabulary, d: dict) -> "TfIdfModel":
        return cls(vocab, {int(k): float(v) for k, v in d["idf"].items()},
                   d["prune_low"], d["prune_high"])


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5 + 1e-9))


def _prune_counts(n_terms: int, prune_low: float, prune_high: float) -> tuple[int, int]:
    """(cut from the top, cut from the bottom); floor(n * (1 - low - high)) terms survive."""
    keep = int(math.floor(n_terms * (1 - prune_low - prune_high) + 1e-9))
    n_high = min(_round_half_up(n_terms * prune_high), n_terms - keep)
    return n_high, n_terms - keep - n_high


def tfidf_fit(vocab: Vocabulary, prune_low: float = 0.2, prune_high: float = 0.2) -> TfIdfModel:
    """Drop the most and least document-frequent terms, then weight by ln(N/df).

    Terms are ranked by descending document frequency with ties broken by term
    text. ``floor(|V| * (1 - prune_low - prune_high))`` terms are kept; the top
    cut is ``round(|V| * prune_high)`` and the bottom cut takes the rest.
    """
    if len(vocab) == 0:
        raise CorpusError("empty vocabulary")
    if not (0 <= prune_low and 0 <= prune_high and prune_low + prune_high < 1):
        raise ValueError("prune fractions must be non-negative and sum to less than 1")
    terms = vocab.terms
    ranked = sorted(range(len(vocab)), key=lambda i: (-vocab.doc_frequency[i], terms[i]))
    n_high, n_low = _prune_counts(len(ranked), prune_low, prune_high)
    kept = ranked[n_high: len(ranked) - n_low]
    if not kept:
        raise CorpusError("empty vocabulary after pruning")
    n = vocab.total_docs
    idf = {i: math.log(n / vocab.doc_frequency[i]) for i in kept}
    return TfIdfModel(vocab, idf, prune_low, prune_high)


def vectorize(model: TfIdfModel | None, bag: Mapping[int, int]) -> dict[int, float]:
    """Raw counts when ``model`` is None, else count * idf over retained terms."""
    if model is None:
        return {t: float(c) for t, c in bag.items()}
    idf = model.idf
    return {t: c * idf[t] for t, c in bag.items() if t in idf}


def to_matrix(vectors: Sequence[Mapping[int, float]], n_features: int) -> sp.csr_matrix:
    """Stack sparse weight vectors as rows of a CSR matrix."""
    indptr = [0]
    indices, data = [], []
    for v in vectors:
        for t in sorted(v):
            indices.append(t)
            data.append(v[t])
        indptr.append(len(indices))
    return sp.csr_matrix((np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64),
                          np.asarray(indptr, dtype=np.int64)), shape=(len(vectors), n_features))


@dataclass
class Corpus:
    texts: dict[str, str]
    stopwords: frozenset[str] = STOPWORDS
    _tokens: dict[str, list[str]] = field(default_factory=dict, repr=False)

    @classmethod
    def from_jsonl(cls, lines: Iterable[str]) -> "Corpus":
        texts = {}
        for lineno, line in enumerate(lines, 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                doc_id, text = d["doc_id"], d["text"]
                if not isinstance(doc_id, str) or not isinstance(text, str):
                    raise TypeError("doc_id and text must be strings")
            except (ValueError, KeyError, TypeError) as exc:
                raise CorpusError(f"line {lineno}: {exc}") from None
            if doc_id in texts:
                raise CorpusError(f"line {lineno}: duplicate doc_id {doc_id!r}")
            texts[doc_id] = text
        if not texts:
            raise CorpusError("empty corpus")
        return cls(texts)

    @classmethod
    def from_file(cls, path) -> "Corpus":
        with open(path, encoding="utf-8") as fh:
            return cls.from_jsonl(fh)

    def __contains__(self, doc_id):
        return doc_id in self.texts

    def __len__(self):
        return len(self.texts)

    @property
    def doc_ids(self) -> list[str]:
        return sorted(self.texts)

    def tokens(self, doc_id: str) -> list[str]:
        toks = self._tokens.get(doc_id)
        if toks is None:
            toks = self._tokens[doc_id] = preprocess(self.texts[doc_id], self.stopwords)
        return toks

    @cached_property
    def vocabulary(self) -> Vocabulary:
        return build_vocabulary([self.tokens(d) for d in self.doc_ids])

    def bag(self, doc_id: str) -> dict[int, int]:
        return self.vocabulary.bag(self.tokens(doc_id))

    @cached_property
    def fingerprint(self) -> str:
        h = hashlib.sha256(f"stopwords={STOPWORDS_VERSION}\n".encode())
        for d in self.doc_ids:
            h.update(d.encode("utf-8"))
            h.update(b"\0")
            h.update(self.texts[d].encode("utf-8"))
            h.update(b"\0")
        return h.hexdigest()
