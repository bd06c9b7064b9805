"""Latent Dirichlet allocation by collapsed Gibbs sampling.

All randomness comes from a numpy Generator: topic initialisation and one
uniform draw per token per sweep. The sampling kernel is compiled with numba
when available; the pure-Python kernel performs the same arithmetic in the
same order, so both produce identical samples.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    njit = None


def _sweep_py(words, docs, z, ndk, nkw, nk, alpha, beta, vbeta, u, p):
    K = nk.shape[0]
    for i in range(words.shape[0]):
        w, d, k = words[i], docs[i], z[i]
        ndk[d, k] -= 1
        nkw[k, w] -= 1
        nk[k] -= 1
        total = 0.0
        for t in range(K):
            total += (ndk[d, t] + alpha) * (nkw[t, w] + beta) / (nk[t] + vbeta)
            p[t] = total
        target = u[i] * total
        k = K - 1
        for t in range(K):
            if p[t] > target:
                k = t
                break
        z[i] = k
        ndk[d, k] += 1
        nkw[k, w] += 1
        nk[k] += 1


def _infer_sweep_py(words, z, nk_doc, phi, alpha, u, p):
    K = nk_doc.shape[0]
    for i in range(words.shape[0]):
        w, k = words[i], z[i]
        nk_doc[k] -= 1
        total = 0.0
        for t in range(K):
            total += (nk_doc[t] + alpha) * phi[t, w]
            p[t] = total
        target = u[i] * total
        k = K - 1
        for t in range(K):
            if p[t] > target:
                k = t
                break
        z[i] = k
        nk_doc[k] += 1


if njit is not None:
    _sweep = njit(cache=True)(_sweep_py)
    _infer_sweep = njit(cache=True)(_infer_sweep_py)
else:  # pragma: no cover
    _sweep, _infer_sweep = _sweep_py, _infer_sweep_py


@dataclass
class LdaModel:
    topic_word: np.ndarray      # phi, k x |V|
    alpha: float
    beta: float
    seed: int
    iterations: int

    @property
    def k(self) -> int:
        return self.topic_word.shape[0]

    def infer(self, word_ids, sweeps: int = 200, seed: int | None = None) -> np.ndarray:
        """Topic distribution of one document with phi held fixed.

        The returned vector is the smoothed doc-topic estimate averaged over
        the second half of the sweeps. Without an explicit seed the seed is
        derived from the model seed and the document content.
        """
        words = np.asarray(word_ids, dtype=np.int64)
        if words.size == 0:
            raise ValueError("no inferable content")
        if seed is None:
            seed = (self.seed * 1_000_003 + zlib.crc32(words.tobytes())) % (2**32)
        rng = np.random.default_rng(seed)
        K = self.k
        z = rng.integers(0, K, size=words.size).astype(np.int64)
        nk_doc = np.bincount(z, minlength=K).astype(np.int64)
        p = np.empty(K)
        acc = np.zeros(K)
        burn = sweeps // 2
        for s in range(sweeps):
            _infer_sweep(words, z, nk_doc, self.topic_word, self.alpha, rng.random(words.size), p)
            if s >= burn:
                acc += nk_doc
        n_kept = sweeps - burn
        theta = (acc / n_kept + self.alpha) / (words.size + K * self.alpha)
        return theta / theta.sum()


def train_lda(documents, vocab_size: int, k: int, alpha: float = 0.01, beta: float = 0.01,
              seed: int = 0, iterations: int = 1000) -> LdaModel:
    """``documents`` is a sequence of word-id sequences."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    lengths = [len(d) for d in documents]
    if not documents or sum(lengths) == 0:
        raise ValueError("empty corpus")
    words = np.concatenate([np.asarray(d, dtype=np.int64) for d in documents if len(d)])
    docs = np.repeat(np.arange(len(documents), dtype=np.int64), lengths)
    if words.min() < 0 or words.max() >= vocab_size:
        raise ValueError("word id outside the vocabulary")
    rng = np.random.default_rng(seed)
    z = rng.integers(0, k, size=words.size).astype(np.int64)
    ndk = np.zeros((len(documents), k), dtype=np.int64)
    nkw = np.zeros((k, vocab_size), dtype=np.int64)
    np.add.at(ndk, (docs, z), 1)
    np.add.at(nkw, (z, words), 1)
    nk = nkw.sum(axis=1)
    p = np.empty(k)
    vbeta = vocab_size * beta
    for _ in range(iterations):
        _sweep(words, docs, z, ndk, nkw, nk, alpha, beta, vbeta, rng.random(words.size), p)
    phi = (nkw + beta) / (nk[:, None] + vbeta)
    return LdaModel(phi, alpha, beta, seed, iterations)
