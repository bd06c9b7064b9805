"""Property pivoting: logistic regression deciding which of two properties an
entity has, transferred to interestingness judgments.

Models are only ever trained for the canonical ordering ``p < q``; label 1
means "has p, not q". Judging ``(q, p)`` reuses the same model with the
probability flipped, which makes the judge exactly antisymmetric.
"""

from __future__ import annotations

import enum
import json
import logging
import os
import threading
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh
from filelock import FileLock

from .judgment import Abstention, PreferenceJudgment, check_distinct
from .kbstore import KnowledgeStore
from .textcorpus import Corpus, TfIdfModel, tfidf_fit, to_matrix, vectorize

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1


class FeatureMode(str, enum.Enum):
    COUNTS = "counts"
    TFIDF = "tfidf"


class InsufficientPivotData(Abstention):
    pass


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PivotDataset:
    pair: tuple[str, str]
    positives: list[str]
    negatives: list[str]
    holdout_positives: list[str]
    holdout_negatives: list[str]
    mode: FeatureMode = FeatureMode.COUNTS

    @property
    def side_sizes(self) -> tuple[int, int]:
        return (len(self.positives) + len(self.holdout_positives),
                len(self.negatives) + len(self.holdout_negatives))

    def training(self) -> tuple[list[str], np.ndarray]:
        ids = self.positives + self.negatives
        y = np.r_[np.ones(len(self.positives)), np.zeros(len(self.negatives))]
        return ids, y

    def holdout(self) -> tuple[list[str], np.ndarray]:
        ids = self.holdout_positives + self.holdout_negatives
        y = np.r_[np.ones(len(self.holdout_positives)), np.zeros(len(self.holdout_negatives))]
        return ids, y


def _split_side(ids: list[str], cap: int, holdout_half: int) -> tuple[list[str], list[str]]:
    # holdout comes after the training cap on large sides, from the tail (max 20%) on small ones
    n_hold = min(holdout_half, len(ids) // 5)
    n_train = min(cap, len(ids) - n_hold)
    return ids[:n_train], ids[n_train:n_train + n_hold]


def build_pivot_dataset(store: KnowledgeStore, corpus: Corpus, p: str, q: str,
                        cap: int = 10_000, holdout: int = 200, min_side: int = 50,
                        mode: FeatureMode = FeatureMode.COUNTS) -> PivotDataset:
    check_distinct(p, q)
    only_p, only_q = store.split_by_pivot(p, q)

    def with_article(ids):
        return [e for e in ids if store.entities[e].article_ref in corpus]

    only_p, only_q = with_article(only_p), with_article(only_q)
    if min(len(only_p), len(only_q)) < max(min_side, 1):
        raise InsufficientPivotData(
            f"insufficient pivot data for ({p}, {q}): sides {len(only_p)}/{len(only_q)}, "
            f"need at least {max(min_side, 1)} each")
    pos, hold_pos = _split_side(only_p, cap, holdout // 2)
    neg, hold_neg = _split_side(only_q, cap, holdout - holdout // 2)
    return PivotDataset((p, q), pos, neg, hold_pos, hold_neg, FeatureMode(mode))


@dataclass(frozen=True)
class Hyperparams:
    learning_rate: float = 0.1
    l2: float = 1e-4
    max_epochs: int = 500
    tol: float = 1e-6
    seed: int = 0


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    terms: list[str]
    mode: FeatureMode
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    epochs: int = 0
    converged: bool = True
    loss_history: list[float] = field(default_factory=list)
    idf: np.ndarray | None = None

    def decision(self, X) -> np.ndarray:
        return np.asarray(X @ self.weights).ravel() + self.bias

    def predict_proba(self, X) -> np.ndarray:
        return _sigmoid(self.decision(X))

    def top_weights(self, n: int = 10) -> tuple[list[tuple[str, float]], list[tuple[str, float]]]:
        order = np.argsort(self.weights, kind="stable")
        neg = [(self.terms[i], float(self.weights[i])) for i in order[:n]]
        pos = [(self.terms[i], float(self.weights[i])) for i in order[::-1][:n]]
        return pos, neg

    def to_json(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "mode": self.mode.value,
            "bias": self.bias,
            "weights": dict(zip(self.terms, self.weights.tolist())),
            "idf": None if self.idf is None else dict(zip(self.terms, self.idf.tolist())),
            "metadata": {
                "epochs": self.epochs, "converged": self.converged,
                "hyperparams": vars(self.hyperparams),
                "loss_history": self.loss_history,
            },
        }

    @classmethod
    def from_json(cls, d: dict) -> "LogisticModel":
        if d.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format {d.get('format_version')!r}")
        terms = list(d["weights"])
        meta = d["metadata"]
        idf = None if d["idf"] is None else np.array([d["idf"][t] for t in terms])
        return cls(np.array([d["weights"][t] for t in terms], dtype=np.float64), float(d["bias"]),
                   terms, FeatureMode(d["mode"]), Hyperparams(**meta["hyperparams"]),
                   meta["epochs"], meta["converged"], list(meta["loss_history"]), idf)


def _sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss(w: np.ndarray, b: float, X, y: np.ndarray, l2: float) -> float:
    """Mean log-loss plus (l2 / 2) * ||w||^2; the bias is not penalized."""
    z = np.asarray(X @ w).ravel() + b
    # log(1 + exp(-z)) for y=1 and log(1 + exp(z)) for y=0, computed stably
    signed = np.where(y > 0.5, -z, z)
    return float(np.mean(np.logaddexp(0.0, signed)) + 0.5 * l2 * np.dot(w, w))


def logistic_gradient(w: np.ndarray, b: float, X, y: np.ndarray, l2: float) -> tuple[np.ndarray, float]:
    n = X.shape[0]
    r = _sigmoid(np.asarray(X @ w).ravel() + b) - y
    gw = np.asarray(X.T @ r).ravel() / n + l2 * w
    return gw, float(r.sum() / n)


def _lipschitz_bound(X, l2: float) -> float:
    """Upper bound on the curvature of the loss: ||[X 1]||_2^2 / (4n) + l2."""
    n, d = X.shape
    Xb = sp.hstack([sp.csr_matrix(X), np.ones((n, 1))], format="csr")
    fro2 = float(Xb.multiply(Xb).sum())
    if min(n, d + 1) <= 50:
        s = np.linalg.svd(Xb.toarray(), compute_uv=False)
        top2 = float(s[0] ** 2) * (1 + 1e-9)
    else:
        gram = LinearOperator((d + 1, d + 1), matvec=lambda v: Xb.T @ (Xb @ v), dtype=np.float64)
        try:
            lam = eigsh(gram, k=1, which="LA", v0=np.ones(d + 1), tol=1e-8,
                        return_eigenvectors=False)[0]
            top2 = float(lam) * 1.01
        except ArpackNoConvergence:
            top2 = fro2
    return min(top2, fro2) / (4.0 * n) + l2


def fit_logistic(X, y: np.ndarray, hp: Hyperparams = Hyperparams()):
    """Full-batch gradient descent; returns (w, b, history, converged).

    The step is min(learning_rate, 1/L) with L an upper bound on the loss
    curvature, which guarantees the loss never increases between epochs.
    """
    n, d = X.shape
    rng = np.random.default_rng(hp.seed)
    w = rng.normal(scale=1e-3, size=d)
    b = 0.0
    step = min(hp.learning_rate, 1.0 / _lipschitz_bound(X, hp.l2))
    loss = logistic_loss(w, b, X, y, hp.l2)
    history = [loss]
    converged = False
    for _ in range(hp.max_epochs):
        gw, gb = logistic_gradient(w, b, X, y, hp.l2)
        w = w - step * gw
        b = b - step * gb
        new_loss = logistic_loss(w, b, X, y, hp.l2)
        history.append(new_loss)
        if loss - new_loss < hp.tol:
            converged = True
            break
        loss = new_loss
    return w, b, history, converged


def _features(dataset_ids: list[str], store: KnowledgeStore, corpus: Corpus,
              tfidf: TfIdfModel | None):
    vocab = corpus.vocabulary
    bags = [corpus.bag(store.entities[e].article_ref) for e in dataset_ids]
    return to_matrix([vectorize(tfidf, b) for b in bags], len(vocab))


def train_logistic(dataset: PivotDataset, store: KnowledgeStore, corpus: Corpus,
                   tfidf: TfIdfModel | None = None, hp: Hyperparams = Hyperparams()) -> LogisticModel:
    if dataset.mode is FeatureMode.TFIDF and tfidf is None:
        raise ValueError("TF-IDF mode needs a fitted TfIdfModel")
    if dataset.mode is FeatureMode.COUNTS:
        tfidf = None
    ids, y = dataset.training()
    X = _features(ids, store, corpus, tfidf)
    vocab = corpus.vocabulary
    if tfidf is not None:
        cols = np.array(tfidf.retained, dtype=np.int64)
        X = X[:, cols]
        terms = [vocab.terms[i] for i in cols]
        idf = np.array([tfidf.idf[i] for i in cols])
    else:
        terms = list(vocab.terms)
        idf = None
    w, b, history, converged = fit_logistic(X, y, hp)
    if not converged:
        warnings.warn(f"logistic regression for {dataset.pair} did not converge in "
                      f"{hp.max_epochs} epochs", ConvergenceWarning, stacklevel=2)
    return LogisticModel(w, b, terms, dataset.mode, hp, len(history) - 1, converged, history, idf)


def featurize(model: LogisticModel, tokens: list[str]) -> sp.csr_matrix:
    """Row vector for ``tokens`` in the model's own term space."""
    index = {t: i for i, t in enumerate(model.terms)}
    counts: dict[int, float] = {}
    for t in tokens:
        i = index.get(t)
        if i is not None:
            counts[i] = counts.get(i, 0.0) + 1.0
    if model.idf is not None:
        counts = {i: c * model.idf[i] for i, c in counts.items()}
    return to_matrix([counts], len(model.terms))


def pivot_accuracy(model: LogisticModel, dataset: PivotDataset, store: KnowledgeStore,
                   corpus: Corpus) -> float:
    ids, y = dataset.holdout()
    if not ids:
        raise ValueError("empty holdout set")
    X = sp.vstack([featurize(model, corpus.tokens(store.entities[e].article_ref)) for e in ids])
    pred = (model.decision(X) > 0).astype(float)
    return float(np.mean(pred == y))


def canonical(p: str, q: str) -> tuple[str, str, bool]:
    """Return (low, high, swapped)."""
    return (p, q, False) if p < q else (q, p, True)


class PivotCache:
    """Trained pivot models keyed by pair, feature mode and corpus fingerprint.

    Writes for one key are serialized with a file lock and land atomically via
    rename, so concurrent trainers never expose a half-written model.
    """

    def __init__(self, directory, fingerprint: str):
        self.directory = Path(directory)
        self.fingerprint = fingerprint
        self._memory: dict[tuple, LogisticModel] = {}
        self._lock = threading.Lock()

    def path(self, p: str, q: str, mode: FeatureMode) -> Path:
        lo, hi, _ = canonical(p, q)
        return self.directory / "pivot" / self.fingerprint[:16] / FeatureMode(mode).value / f"{lo}__{hi}.json"

    def get(self, p: str, q: str, mode: FeatureMode) -> LogisticModel | None:
        lo, hi, _ = canonical(p, q)
        key = (lo, hi, FeatureMode(mode))
        with self._lock:
            if key in self._memory:
                return self._memory[key]
        path = self.path(lo, hi, mode)
        if not path.exists():
            return None
        model = LogisticModel.from_json(json.loads(path.read_text(encoding="utf-8")))
        with self._lock:
            self._memory[key] = model
        return model

    def put(self, p: str, q: str, model: LogisticModel) -> Path:
        lo, hi, _ = canonical(p, q)
        path = self.path(lo, hi, model.mode)
        path.parent.mkdir(parents=True, exist_ok=True)
        with FileLock(str(path) + ".lock"):
            tmp = path.with_suffix(f".{os.getpid()}.tmp")
            tmp.write_text(json.dumps(model.to_json()), encoding="utf-8")
            tmp.replace(path)
        with self._lock:
            self._memory[(lo, hi, model.mode)] = model
        return path


@dataclass
class PivotTrainer:
    """Lazily trains and caches one model per canonical property pair."""
    store: KnowledgeStore
    corpus: Corpus
    cache: PivotCache
    mode: FeatureMode = FeatureMode.COUNTS
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    cap: int = 10_000
    holdout: int = 200
    min_side: int = 50
    prune_low: float = 0.2
    prune_high: float = 0.2

    def __post_init__(self):
        self.mode = FeatureMode(self.mode)
        self._tfidf = None
        self._failed: dict[tuple[str, str], str] = {}
        self.unconverged: list[tuple[str, str]] = []
        self._lock = threading.Lock()

    @property
    def tfidf(self) -> TfIdfModel:
        if self._tfidf is None:
            self._tfidf = tfidf_fit(self.corpus.vocabulary, self.prune_low, self.prune_high)
        return self._tfidf

    def dataset(self, p: str, q: str) -> PivotDataset:
        lo, hi, _ = canonical(p, q)
        return build_pivot_dataset(self.store, self.corpus, lo, hi, self.cap,
                                   self.holdout, self.min_side, self.mode)

    def model(self, p: str, q: str) -> LogisticModel:
        lo, hi, _ = canonical(p, q)
        model = self.cache.get(lo, hi, self.mode)
        if model is not None:
            return model
        if (lo, hi) in self._failed:
            raise InsufficientPivotData(self._failed[(lo, hi)])
        try:
            ds = self.dataset(lo, hi)
        except InsufficientPivotData as exc:
            self._failed[(lo, hi)] = str(exc)
            raise
        tfidf = self.tfidf if self.mode is FeatureMode.TFIDF else None
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            model = train_logistic(ds, self.store, self.corpus, tfidf, self.hyperparams)
        if not model.converged:
            self.unconverged.append((lo, hi))
            logger.info("pivot model %s/%s stopped at max epochs", lo, hi)
        self.cache.put(lo, hi, model)
        return model


def pivot_judge(trainer: PivotTrainer, e: str, p: str, q: str) -> PreferenceJudgment:
    """Classify e's article; the property of the predicted side wins.

    ``score_first`` is the probability that ``e`` belongs to the side of ``p``.
    """
    check_distinct(p, q)
    record = trainer.store.entity(e)
    if record.article_ref is None or record.article_ref not in trainer.corpus:
        raise Abstention(f"entity {e} has no article")
    model = trainer.model(p, q)
    x = featurize(model, trainer.corpus.tokens(record.article_ref))
    prob_low = float(model.predict_proba(x)[0])
    _, _, swapped = canonical(p, q)
    prob_high = 1.0 - prob_low
    return PreferenceJudgment.from_scores(*((prob_high, prob_low) if swapped else (prob_low, prob_high)))


class PivotJudge:
    def __init__(self, trainer: PivotTrainer, name: str | None = None):
        self.trainer = trainer
        self.name = name or f"regression_{'plain' if trainer.mode is FeatureMode.COUNTS else 'tfidf'}"

    def judge(self, entity, first, second):
        return pivot_judge(self.trainer, entity, first, second)


def read_pairs(path) -> list[tuple[str, str]]:
    """Pairs file: one ``P1 P2`` pair per line (whitespace or comma separated)."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected two property ids")
            pairs.append((parts[0], parts[1]))
    return pairs

