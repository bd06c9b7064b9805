import numpy as np
import pytest
import scipy.sparse as sp

from kbrank.semantic.lsi import RankError, power_iteration_top, randomized_svd, train_lsi


def low_rank(m, n, r, seed):
    rng = np.random.default_rng(seed)
    return rng.random((m, r)) @ rng.random((r, n))


def test_exact_rank_three_reconstruction():
    A = low_rank(40, 25, 3, 0)
    U, s, Vt = randomized_svd(A, 3)
    assert np.linalg.norm(A - U @ np.diag(s) @ Vt) / np.linalg.norm(A) <= 1e-6


def test_rank_three_corpus_via_train_lsi():
    docs_terms = low_rank(30, 50, 3, 1)
    model = train_lsi(sp.csr_matrix(docs_terms), 3)
    A = docs_terms.T
    recon = model.term_topics @ np.diag(model.singular_values) @ model.doc_topics.T
    assert np.linalg.norm(A - recon) / np.linalg.norm(A) <= 1e-6


@pytest.mark.parametrize("seed", range(5))
def test_top_singular_value_matches_power_iteration(seed):
    A = sp.random(60, 40, density=0.2, random_state=seed, format="csr")
    _, s, _ = randomized_svd(A, 1, seed=seed)
    oracle = power_iteration_top(A, seed=seed + 100)
    assert abs(s[0] - oracle) <= 1e-8 * oracle


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("k", [1, 3, 5, 10, 20])
def test_truncated_svd_matches_dense_oracle(seed, k):
    A = np.random.default_rng(seed).standard_normal((20, 20))
    U, s, Vt = randomized_svd(A, k, seed=seed)
    Ud, sd, Vtd = np.linalg.svd(A)
    assert np.allclose(s, sd[:k], atol=1e-6, rtol=0)
    err = np.linalg.norm(A - U @ np.diag(s) @ Vt)
    oracle = np.linalg.norm(A - Ud[:, :k] @ np.diag(sd[:k]) @ Vtd[:k])
    assert abs(err - oracle) <= 1e-6
    assert np.max(np.abs(U.T @ U - np.eye(k))) <= 1e-6
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)


def test_disjoint_groups_separate():
    rng = np.random.default_rng(3)
    docs = np.zeros((12, 20))
    docs[:6, :10] = rng.random((6, 10)) + 0.1
    docs[6:, 10:] = rng.random((6, 10)) + 0.1
    model = train_lsi(sp.csr_matrix(docs), 2)
    V = model.doc_topics
    V = V / np.linalg.norm(V, axis=1, keepdims=True)
    cos = V @ V.T
    within = min(cos[:6, :6].min(), cos[6:, 6:].min())
    across = np.abs(cos[:6, 6:]).max()
    assert within > across
    for row in np.abs(model.doc_topics):
        assert row.max() / row.sum() > 0.99


def test_fold_in_of_training_document():
    docs = sp.random(30, 15, density=0.4, random_state=4, format="csr")
    model = train_lsi(docs, 6)
    for j in range(docs.shape[0]):
        assert np.allclose(model.fold_in(docs[j]), model.doc_topics[j], atol=1e-6)
        assert np.allclose(model.fold_in(docs[j].toarray().ravel()), model.doc_topics[j], atol=1e-6)


def test_rank_errors():
    with pytest.raises(RankError):
        randomized_svd(np.ones((5, 4)), 5)
    with pytest.raises(RankError):
        randomized_svd(low_rank(10, 10, 2, 0), 4)
    with pytest.raises(RankError):
        train_lsi(sp.csr_matrix(np.eye(3)), 4)
    with pytest.raises(ValueError):
        randomized_svd(np.ones((5, 4)), 0)


def test_seeded_determinism():
    A = sp.random(50, 30, density=0.3, random_state=5, format="csr")
    a = randomized_svd(A, 4, seed=9)
    b = randomized_svd(A, 4, seed=9)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
