"""Latent semantic indexing via seeded randomized truncated SVD."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class RankError(ValueError):
    pass


def randomized_svd(A, k: int, seed: int = 0, oversample: int = 10, n_iter: int = 7,
                   rank_tol: float = 1e-10):
    """Rank-k SVD by randomized subspace iteration.

    Returns ``(U, s, Vt)`` with singular values in descending order. The range
    sketch is re-orthonormalized after every multiplication. When the sketch
    width reaches min(m, n) the result is exact up to rounding.
    """
    m, n = A.shape
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > min(m, n):
        raise RankError(f"k={k} exceeds the maximal rank min({m}, {n})")
    width = min(k + oversample, min(m, n))
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(A @ rng.standard_normal((n, width)))
    for _ in range(n_iter):
        Z, _ = np.linalg.qr(A.T @ Q)
        Q, _ = np.linalg.qr(A @ Z)
    B = np.asarray((A.T @ Q).T)
    Ub, s, Vt = np.linalg.svd(B, full_matrices=False)
    U = Q @ Ub
    U, s, Vt = U[:, :k], s[:k], Vt[:k]
    if s[0] == 0 or s[-1] <= rank_tol * s[0]:
        raise RankError(f"k={k} exceeds the numerical rank of the matrix")
    return U, s, Vt


def power_iteration_top(A, n_iter: int = 2000, seed: int = 0, tol: float = 1e-15) -> float:
    """Largest singular value via power iteration on A^T A."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(n_iter):
        w = A.T @ (A @ v)
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        v = w / norm
        new_sigma = float(np.linalg.norm(A @ v))
        if abs(new_sigma - sigma) <= tol * new_sigma:
            return new_sigma
        sigma = new_sigma
    return sigma


@dataclass
class LsiModel:
    """``term_topics`` is U (|V| x k); ``doc_topics`` holds training fold-ins (D x k)."""
    term_topics: np.ndarray
    singular_values: np.ndarray
    doc_topics: np.ndarray
    seed: int = 0

    @property
    def k(self) -> int:
        return len(self.singular_values)

    def fold_in(self, x) -> np.ndarray:
        """Project a TF-IDF vector (dense or 1 x |V| sparse) into topic space."""
        if sp.issparse(x):
            proj = np.asarray(x @ self.term_topics).ravel()
        else:
            proj = np.asarray(x, dtype=np.float64) @ self.term_topics
        return proj / self.singular_values


def train_lsi(tfidf_matrix, k: int, seed: int = 0, oversample: int = 10, n_iter: int = 7) -> LsiModel:
    """``tfidf_matrix`` is documents x terms; the SVD runs on its transpose."""
    A = sp.csr_matrix(tfidf_matrix).T.tocsr()
    if A.shape[1] < k:
        raise RankError(f"need at least k={k} documents, got {A.shape[1]}")
    U, s, Vt = randomized_svd(A, k, seed, oversample, n_iter)
    return LsiModel(U, s, Vt.T.copy(), seed)
