import json
import random
import warnings

import numpy as np
import pytest
import scipy.sparse as sp

from kbrank.judgment import Abstention, Winner
from kbrank.pivot import (ConvergenceWarning, FeatureMode, Hyperparams, InsufficientPivotData,
                          LogisticModel, PivotCache, PivotTrainer, build_pivot_dataset,
                          fit_logistic, logistic_gradient, logistic_loss, pivot_accuracy,
                          pivot_judge, read_pairs, train_logistic)
from kbrank.textcorpus import Corpus, tfidf_fit

from conftest import make_store

FILLER = "born career city family years later moved worked known".split()


def separable_world(n_side=60, seed=0):
    """Side p articles mention goals, side q articles mention priests; both share filler."""
    rng = random.Random(seed)
    entities, articles, docs = {}, {}, []
    for side, word, prop in (("a", "goal", "P413"), ("b", "priest", "P611")):
        for i in range(n_side):
            eid = f"Q{side}{i:03d}"
            entities[eid] = {prop, "P21"}
            articles[eid] = f"doc-{eid}"
            words = [rng.choice(FILLER) for _ in range(rng.randint(5, 15))] + [word] * rng.randint(1, 3)
            rng.shuffle(words)
            docs.append(json.dumps({"doc_id": f"doc-{eid}", "text": " ".join(words)}))
    entities["Qboth"] = {"P413", "P611"}
    entities["Qnone"] = {"P21"}
    store = make_store(entities, articles=articles)
    return store, Corpus.from_jsonl(docs)


def fd_gradient(w, b, X, y, l2, h=1e-6):
    gw = np.empty_like(w)
    for i in range(len(w)):
        e = np.zeros_like(w)
        e[i] = h
        gw[i] = (logistic_loss(w + e, b, X, y, l2) - logistic_loss(w - e, b, X, y, l2)) / (2 * h)
    gb = (logistic_loss(w, b + h, X, y, l2) - logistic_loss(w, b - h, X, y, l2)) / (2 * h)
    return gw, gb


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    worst = 0.0
    for trial in range(100):
        n, d = rng.integers(3, 15), rng.integers(1, 8)
        X = rng.poisson(1.0, size=(n, d)).astype(float)
        if trial % 2:
            X = sp.csr_matrix(X)
        y = rng.integers(0, 2, size=n).astype(float)
        w, b, l2 = rng.normal(size=d), float(rng.normal()), float(rng.uniform(0, 0.1))
        gw, gb = logistic_gradient(w, b, X, y, l2)
        fw, fb = fd_gradient(w, b, X, y, l2)
        g, f = np.r_[gw, gb], np.r_[fw, fb]
        worst = max(worst, np.linalg.norm(g - f) / max(np.linalg.norm(f), 1e-12))
    assert worst <= 1e-4


def test_loss_is_non_increasing_every_epoch():
    rng = np.random.default_rng(1)
    for _ in range(20):
        X = sp.csr_matrix(rng.poisson(2.0, size=(40, 12)).astype(float))
        y = rng.integers(0, 2, size=40).astype(float)
        _, _, history, _ = fit_logistic(X, y, Hyperparams(learning_rate=10.0, max_epochs=200, tol=0))
        assert all(b <= a for a, b in zip(history, history[1:]))


def test_fit_is_deterministic():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(30, 5))
    y = (rng.random(30) < 0.5).astype(float)
    a = fit_logistic(X, y, Hyperparams(seed=3))
    b = fit_logistic(X, y, Hyperparams(seed=3))
    assert np.array_equal(a[0], b[0]) and a[1] == b[1] and a[2] == b[2]


def test_non_convergence_warns():
    store, corpus = separable_world()
    ds = build_pivot_dataset(store, corpus, "P413", "P611", holdout=20, min_side=10)
    with pytest.warns(ConvergenceWarning):
        model = train_logistic(ds, store, corpus, hp=Hyperparams(max_epochs=2, tol=0))
    assert not model.converged and model.epochs == 2


def test_dataset_sides():
    store = make_store({"e1": {"p"}, "e2": {"p"}, "e3": {"p"}, "e4": {"q"}, "e5": {"q"},
                        "e6": {"p", "q"}, "e7": {"p"}},
                       articles={e: e for e in ["e1", "e2", "e3", "e4", "e5", "e6"]})
    corpus = Corpus.from_jsonl(json.dumps({"doc_id": e, "text": "word"}) for e in
                               ["e1", "e2", "e3", "e4", "e5", "e6"])
    ds = build_pivot_dataset(store, corpus, "p", "q", cap=10, min_side=1)
    assert ds.side_sizes == (3, 2)
    assert ds.positives == ["e1", "e2", "e3"] and ds.negatives == ["e4", "e5"]
    with pytest.raises(InsufficientPivotData, match="insufficient pivot data"):
        build_pivot_dataset(store, corpus, "p", "q", min_side=50)
    assert isinstance(InsufficientPivotData("x"), Abstention)
    with pytest.raises(ValueError):
        build_pivot_dataset(store, corpus, "p", "p", min_side=1)


def test_dataset_cap_and_holdout_are_disjoint():
    store, corpus = separable_world(n_side=60)
    ds = build_pivot_dataset(store, corpus, "P413", "P611", cap=30, holdout=20, min_side=10)
    assert len(ds.positives) == len(ds.negatives) == 30
    assert len(ds.holdout_positives) == len(ds.holdout_negatives) == 10
    assert not set(ds.positives) & set(ds.holdout_positives)
    assert not set(ds.positives + ds.holdout_positives) & set(ds.negatives + ds.holdout_negatives)


@pytest.mark.parametrize("mode", list(FeatureMode))
def test_separable_corpus(mode):
    store, corpus = separable_world()
    ds = build_pivot_dataset(store, corpus, "P413", "P611", holdout=40, min_side=10, mode=mode)
    tfidf = tfidf_fit(corpus.vocabulary, 0, 0) if mode is FeatureMode.TFIDF else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        model = train_logistic(ds, store, corpus, tfidf, Hyperparams(max_epochs=300))
    assert pivot_accuracy(model, ds, store, corpus) == 1.0
    w = dict(zip(model.terms, model.weights))
    assert w["goal"] > 0 > w["priest"]
    assert all(b <= a for a, b in zip(model.loss_history, model.loss_history[1:]))


def test_zero_model_scores_half_on_balanced_holdout():
    store, corpus = separable_world()
    ds = build_pivot_dataset(store, corpus, "P413", "P611", holdout=40, min_side=10)
    terms = corpus.vocabulary.terms
    model = LogisticModel(np.zeros(len(terms)), 0.0, terms, FeatureMode.COUNTS)
    # decision 0 predicts the negative side for everybody
    assert pivot_accuracy(model, ds, store, corpus) == 0.5


def trainer(tmp_path, mode=FeatureMode.COUNTS, fingerprint="f" * 64):
    store, corpus = separable_world()
    return PivotTrainer(store, corpus, PivotCache(tmp_path, fingerprint), mode,
                        Hyperparams(max_epochs=100), holdout=20, min_side=10, prune_low=0, prune_high=0)


def test_judge_antisymmetric_and_transfers(tmp_path):
    t = trainer(tmp_path)
    for e in ["Qa000", "Qb005", "Qa010"]:
        j = pivot_judge(t, e, "P413", "P611")
        k = pivot_judge(t, e, "P611", "P413")
        assert k == j.mirrored()
    assert pivot_judge(t, "Qa000", "P413", "P611").winner is Winner.FIRST
    assert pivot_judge(t, "Qb000", "P413", "P611").winner is Winner.SECOND
    with pytest.raises(Abstention, match="no article"):
        pivot_judge(t, "Qboth", "P413", "P611")


def test_untrainable_pair_abstains_and_is_remembered(tmp_path):
    t = trainer(tmp_path)
    with pytest.raises(InsufficientPivotData):
        pivot_judge(t, "Qa000", "P413", "P21")
    with pytest.raises(InsufficientPivotData):
        t.model("P21", "P413")


def test_cache_roundtrip_is_bit_identical(tmp_path):
    t = trainer(tmp_path, FeatureMode.TFIDF)
    model = t.model("P611", "P413")
    path = t.cache.path("P413", "P611", FeatureMode.TFIDF)
    assert path.exists() and path.name == "P413__P611.json"
    fresh = PivotCache(tmp_path, "f" * 64).get("P611", "P413", FeatureMode.TFIDF)
    assert np.array_equal(fresh.weights, model.weights) and fresh.bias == model.bias
    assert fresh.terms == model.terms and np.array_equal(fresh.idf, model.idf)
    assert fresh.loss_history == model.loss_history
    assert PivotCache(tmp_path, "0" * 64).get("P413", "P611", FeatureMode.TFIDF) is None
    assert PivotCache(tmp_path, "f" * 64).get("P413", "P611", FeatureMode.COUNTS) is None


def test_retraining_reproduces_weights(tmp_path):
    a = trainer(tmp_path / "a").model("P413", "P611")
    b = trainer(tmp_path / "b").model("P413", "P611")
    assert np.array_equal(a.weights, b.weights) and a.bias == b.bias


def test_top_weights_and_format_version():
    model = LogisticModel(np.array([0.5, -2.0, 1.0]), 0.0, ["x", "y", "z"], FeatureMode.COUNTS)
    pos, neg = model.top_weights(1)
    assert pos == [("z", 1.0)] and neg == [("y", -2.0)]
    d = model.to_json()
    d["format_version"] = 99
    with pytest.raises(ValueError):
        LogisticModel.from_json(d)


def test_read_pairs(tmp_path):
    path = tmp_path / "pairs.txt"
    path.write_text("# comment\nP413 P611\n\nP1,P2  # trailing\n")
    assert read_pairs(path) == [("P413", "P611"), ("P1", "P2")]
    path.write_text("P1\n")
    with pytest.raises(ValueError, match=":1:"):
        read_pairs(path)
