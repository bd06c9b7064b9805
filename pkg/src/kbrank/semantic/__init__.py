"""Topic-model similarity between entity articles and property descriptions."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..judgment import Abstention, PreferenceJudgment, check_distinct
from ..kbstore import KnowledgeStore, PropertyDef
from ..textcorpus import Corpus, TfIdfModel, Vocabulary, preprocess, tfidf_fit, to_matrix, vectorize
from .lda import LdaModel, train_lda
from .lsi import LsiModel, RankError, power_iteration_top, randomized_svd, train_lsi

__all__ = [
    "LdaModel", "LsiModel", "RankError", "SemanticModel", "SemanticJudge", "TopicVector",
    "cosine", "power_iteration_top", "property_text", "randomized_svd", "semantic_judge",
    "train_lda", "train_lsi", "train_topic_model", "InferenceError",
]

MODEL_FORMAT_VERSION = 1


class InferenceError(Abstention):
    pass


@dataclass(frozen=True)
class TopicVector:
    values: np.ndarray
    kind: str

    def __len__(self):
        return len(self.values)


def cosine(u: TopicVector, v: TopicVector) -> float:
    if u.kind != v.kind or len(u) != len(v):
        raise ValueError(f"cannot compare {u.kind}[{len(u)}] with {v.kind}[{len(v)}]")
    nu, nv = np.linalg.norm(u.values), np.linalg.norm(v.values)
    if nu == 0 or nv == 0:
        raise ValueError("cosine of a zero vector is undefined")
    c = float(np.dot(u.values, v.values) / (nu * nv))
    return min(1.0, max(-1.0, c))


def property_text(prop: PropertyDef) -> list[str]:
    """Tokens of the property's label and description."""
    tokens = preprocess(f"{prop.label} {prop.description}")
    if not tokens:
        raise InferenceError(f"property {prop.id} has no usable text")
    return tokens


@dataclass
class SemanticModel:
    """A trained LSI or LDA model together with its term space."""
    kind: str
    vocabulary: Vocabulary
    model: LsiModel | LdaModel
    tfidf: TfIdfModel | None = None
    inference_sweeps: int = 200
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("lsi", "lda"):
            raise ValueError(f"unknown topic model kind {self.kind!r}")

    @property
    def k(self) -> int:
        return self.model.k

    def infer(self, tokens: list[str]) -> TopicVector:
        bag = self.vocabulary.bag(tokens)
        if self.kind == "lsi":
            x = vectorize(self.tfidf, bag)
            if not x:
                raise InferenceError("no inferable content")
            vec = self.model.fold_in(to_matrix([x], len(self.vocabulary)))
            if not np.any(vec):
                raise InferenceError("no inferable content")
        else:
            ids = [i for i in sorted(bag) for _ in range(bag[i])]
            if not ids:
                raise InferenceError("no inferable content")
            vec = self.model.infer(ids, sweeps=self.inference_sweeps)
        return TopicVector(vec, self.kind)

    def save(self, directory) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        arrays = ({"term_topics": self.model.term_topics, "singular_values": self.model.singular_values,
                   "doc_topics": self.model.doc_topics} if self.kind == "lsi"
                  else {"topic_word": self.model.topic_word})
        manifest = {
            "format_version": MODEL_FORMAT_VERSION, "kind": self.kind,
            "vocabulary": self.vocabulary.to_json(),
            "tfidf": None if self.tfidf is None else self.tfidf.to_json(),
            "inference_sweeps": self.inference_sweeps,
            "model": ({"seed": self.model.seed} if self.kind == "lsi" else
                      {"alpha": self.model.alpha, "beta": self.model.beta,
                       "seed": self.model.seed, "iterations": self.model.iterations}),
            "metadata": self.metadata,
        }
        pid = os.getpid()
        tmp_npz = directory / f"matrices.{pid}.tmp.npz"
        np.savez(tmp_npz, **arrays)
        tmp_npz.replace(directory / "matrices.npz")
        tmp_json = directory / f"manifest.{pid}.tmp"
        tmp_json.write_text(json.dumps(manifest, sort_keys=True), encoding="utf-8")
        tmp_json.replace(directory / "manifest.json")
        return directory

    @classmethod
    def load(cls, directory) -> "SemanticModel":
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
        if manifest.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported topic model format in {directory}")
        vocab = Vocabulary.from_json(manifest["vocabulary"])
        tfidf = None if manifest["tfidf"] is None else TfIdfModel.from_json(vocab, manifest["tfidf"])
        with np.load(directory / "matrices.npz") as npz:
            if manifest["kind"] == "lsi":
                model = LsiModel(npz["term_topics"], npz["singular_values"], npz["doc_topics"],
                                 manifest["model"]["seed"])
            else:
                model = LdaModel(npz["topic_word"], **manifest["model"])
        return cls(manifest["kind"], vocab, model, tfidf, manifest["inference_sweeps"],
                   manifest["metadata"])


def train_topic_model(corpus: Corpus, kind: str, k: int, *, seed: int = 0,
                      prune_low: float = 0.2, prune_high: float = 0.2,
                      alpha: float = 0.01, beta: float = 0.01, iterations: int = 1000,
                      inference_sweeps: int = 200, oversample: int = 10,
                      power_iterations: int = 7) -> SemanticModel:
    vocab = corpus.vocabulary
    doc_ids = corpus.doc_ids
    meta = {"corpus_fingerprint": corpus.fingerprint, "k": k, "documents": len(doc_ids)}
    if kind == "lsi":
        tfidf = tfidf_fit(vocab, prune_low, prune_high)
        X = to_matrix([vectorize(tfidf, corpus.bag(d)) for d in doc_ids], len(vocab))
        model = train_lsi(X, k, seed, oversample, power_iterations)
        return SemanticModel("lsi", vocab, model, tfidf, inference_sweeps, meta)
    if kind == "lda":
        docs = []
        for d in doc_ids:
            bag = corpus.bag(d)
            docs.append([i for i in sorted(bag) for _ in range(bag[i])])
        model = train_lda(docs, len(vocab), k, alpha, beta, seed, iterations)
        return SemanticModel("lda", vocab, model, None, inference_sweeps, meta)
    raise ValueError(f"unknown topic model kind {kind!r}")


def semantic_judge(model: SemanticModel, store: KnowledgeStore, corpus: Corpus,
                   e: str, p: str, q: str, cache: dict | None = None) -> PreferenceJudgment:
    check_distinct(p, q)
    cache = {} if cache is None else cache

    def vector(key, make_tokens):
        if key not in cache:
            cache[key] = model.infer(make_tokens())
        return cache[key]

    record = store.entity(e)
    if record.article_ref is None or record.article_ref not in corpus:
        raise InferenceError(f"entity {e} has no article")
    try:
        ev = vector(("entity", e), lambda: corpus.tokens(record.article_ref))
        pv = vector(("property", p), lambda: property_text(store.property(p)))
        qv = vector(("property", q), lambda: property_text(store.property(q)))
    except InferenceError:
        raise
    except ValueError as exc:
        raise InferenceError(str(exc)) from exc
    return PreferenceJudgment.from_scores(cosine(ev, pv), cosine(ev, qv))


class SemanticJudge:
    def __init__(self, model: SemanticModel, store: KnowledgeStore, corpus: Corpus,
                 name: str | None = None):
        self.model, self.store, self.corpus = model, store, corpus
        self.name = name or model.kind
        self._cache: dict = {}

    def judge(self, entity, first, second):
        # vectors are deterministic, so a racing duplicate computation is harmless
        return semantic_judge(self.model, self.store, self.corpus, entity, first, second, self._cache)
