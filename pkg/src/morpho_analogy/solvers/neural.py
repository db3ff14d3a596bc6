"""Solvers backed by trained models: embedding-space retrieval and autoencoder generation."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..models import Annc, Annr, AutoEncoder
from ..nn import Tensor, no_grad
from .ranking import Deadline, SolverRanking, ranked
from .vector import cosine, score_3cosadd, score_3cosmul, solve_parallelogram


class EmbeddingCache:
    """Memoized, gradient-free word embeddings from any model with ``embed`` or ``encode``."""

    def __init__(self, model, batch_size: int = 512):
        self.model = model
        self.batch_size = batch_size
        self._cache: dict[str, np.ndarray] = {}

    def _run(self, words: Sequence[str]) -> np.ndarray:
        fn = getattr(self.model, "embed", None) or self.model.encode
        with no_grad():
            return fn(list(words)).data

    def __call__(self, words: Sequence[str]) -> np.ndarray:
        missing = list(dict.fromkeys(w for w in words if w not in self._cache))
        for i in range(0, len(missing), self.batch_size):
            chunk = missing[i:i + self.batch_size]
            for w, e in zip(chunk, self._run(chunk)):
                self._cache[w] = e
        return np.stack([self._cache[w] for w in words]) if words else np.zeros((0, 0))


class RetrievalSolver:
    """Rank a fixed candidate pool for ``a:b::c:x`` in an embedding space.

    ``method`` is one of ``annr``, ``3cosmul``, ``3cosadd``, ``parallel``.
    """

    def __init__(self, embedder, candidates: Sequence[str], method: str = "annr",
                 annr: Optional[Annr] = None, k: int = 10, name: Optional[str] = None):
        if method not in ("annr", "3cosmul", "3cosadd", "parallel"):
            raise ValueError(f"unknown retrieval method {method!r}")
        if method == "annr" and annr is None:
            raise ValueError("annr retrieval needs a trained Annr model")
        if len(candidates) == 0:
            raise ValueError("empty candidate set")
        self.embed = embedder if isinstance(embedder, EmbeddingCache) else EmbeddingCache(embedder)
        self.words = list(dict.fromkeys(candidates))
        self.emb = self.embed(self.words).astype(np.float64)
        self.method, self.annr, self.k = method, annr, k
        self.solver_id = name or method

    def target(self, e_a, e_b, e_c) -> np.ndarray:
        if self.method == "annr":
            with no_grad():
                return self.annr.predict(*(Tensor(e[None]) for e in (e_a, e_b, e_c))).data[0]
        return solve_parallelogram(e_a, e_b, e_c)

    def scores(self, e_a, e_b, e_c) -> np.ndarray:
        if self.method == "3cosmul":
            return score_3cosmul(e_a, e_b, e_c, self.emb)
        if self.method == "3cosadd":
            return score_3cosadd(e_a, e_b, e_c, self.emb)
        return cosine(self.target(e_a, e_b, e_c), self.emb)

    def __call__(self, a: str, b: str, c: str, deadline: Optional[Deadline] = None) -> SolverRanking:
        e_a, e_b, e_c = self.embed([a, b, c])
        return SolverRanking((a, b, c), ranked(self.words, self.scores(e_a, e_b, e_c), self.k), self.solver_id)


class AnncRetrievalSolver:
    """Pick the candidate maximizing the ANNc score, optionally after a 3CosMul shortlist."""

    def __init__(self, embedder, annc: Annc, candidates: Sequence[str], prefilter_k: Optional[int] = None,
                 k: int = 10, batch_size: int = 256, name: str = "annc"):
        if len(candidates) == 0:
            raise ValueError("empty candidate set")
        self.embed = embedder if isinstance(embedder, EmbeddingCache) else EmbeddingCache(embedder)
        self.annc, self.prefilter_k, self.k, self.batch_size = annc, prefilter_k, k, batch_size
        self.words = list(dict.fromkeys(candidates))
        self.emb = self.embed(self.words)
        self.solver_id = name

    def __call__(self, a: str, b: str, c: str, deadline: Optional[Deadline] = None) -> SolverRanking:
        e_a, e_b, e_c = self.embed([a, b, c])
        idx = np.arange(len(self.words))
        if self.prefilter_k is not None and self.prefilter_k < len(idx):
            shortlist = score_3cosmul(e_a, e_b, e_c, self.emb)
            order = sorted(idx, key=lambda i: (-shortlist[i], self.words[i]))
            idx = np.array(order[:self.prefilter_k])
        scores = np.empty(len(idx))
        dtype = self.annc.dtype
        with no_grad():
            for s in range(0, len(idx), self.batch_size):
                if deadline is not None:
                    deadline.check()
                chunk = idx[s:s + self.batch_size]
                m = len(chunk)
                stacked = np.stack([np.broadcast_to(e_a, (m, e_a.size)), np.broadcast_to(e_b, (m, e_b.size)),
                                    np.broadcast_to(e_c, (m, e_c.size)), self.emb[chunk]], axis=-1)
                scores[s:s + m] = self.annc.score_stacked(Tensor(stacked.astype(dtype))).data
        words = [self.words[i] for i in idx]
        return SolverRanking((a, b, c), ranked(words, scores, self.k), self.solver_id)


class GenerationSolver:
    """Decode the solution from an autoencoder embedding built by ``parallel`` or ``annr``."""

    generative = True

    def __init__(self, ae: AutoEncoder, method: str = "annr", annr: Optional[Annr] = None,
                 max_length: Optional[int] = None, name: Optional[str] = None):
        if method not in ("parallel", "annr"):
            raise ValueError(f"unknown generation method {method!r}")
        if method == "annr":
            if annr is None:
                raise ValueError("annr generation needs a trained Annr model")
            if annr.config.n != ae.embedding_dim:
                raise ValueError(f"Annr dimension {annr.config.n} != autoencoder embedding {ae.embedding_dim}")
        self.ae, self.method, self.annr, self.max_length = ae, method, annr, max_length
        self.embed = EmbeddingCache(ae)
        self.solver_id = name or f"ae+{method}"

    def targets(self, equations: Sequence[Sequence[str]]) -> np.ndarray:
        flat = [w for eq in equations for w in eq[:3]]
        E = self.embed(flat).reshape(len(equations), 3, -1)
        if self.method == "parallel":
            return solve_parallelogram(E[:, 0], E[:, 1], E[:, 2])
        with no_grad():
            return self.annr.predict(Tensor(E[:, 0]), Tensor(E[:, 1]), Tensor(E[:, 2])).data

    def generate(self, equations: Sequence[Sequence[str]]) -> tuple[list[str], list[bool]]:
        if not equations:
            return [], []
        return self.ae.greedy_decode(self.targets(equations).astype(self.ae.dtype), self.max_length)

    def __call__(self, a: str, b: str, c: str, deadline: Optional[Deadline] = None) -> SolverRanking:
        (word,), (truncated,) = self.generate([(a, b, c)])
        flags = ("truncated",) if truncated else ()
        return SolverRanking((a, b, c), [(word, 1.0)], self.solver_id, flags=flags)


def solve_ae_generate(a: str, b: str, c: str, ae: AutoEncoder, method: str = "parallel",
                      annr: Optional[Annr] = None) -> tuple[str, bool]:
    """Generated word and whether decoding hit the length limit."""
    (word,), (truncated,) = GenerationSolver(ae, method, annr).generate([(a, b, c)])
    return word, truncated


def solve_annr_retrieval(a: str, b: str, c: str, embedder, annr: Annr, candidates: Sequence[str],
                         k: int = 10) -> SolverRanking:
    return RetrievalSolver(embedder, candidates, "annr", annr, k)(a, b, c)


def solve_annc_retrieval(a: str, b: str, c: str, embedder, annc: Annc, candidates: Sequence[str],
                         prefilter_k: Optional[int] = None, k: Optional[int] = 10) -> SolverRanking:
    return AnncRetrievalSolver(embedder, annc, candidates, prefilter_k, k)(a, b, c)
