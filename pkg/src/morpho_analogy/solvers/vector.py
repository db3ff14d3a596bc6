"""Embedding-arithmetic solvers: parallelogram rule, nearest neighbour, 3CosAdd and 3CosMul."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .ranking import SolverRanking, ranked

EPSILON = 0.001


def _vec(x) -> np.ndarray:
    return np.asarray(getattr(x, "data", x), dtype=np.float64)


def solve_parallelogram(e_a, e_b, e_c) -> np.ndarray:
    e_a, e_b, e_c = _vec(e_a), _vec(e_b), _vec(e_c)
    if not (e_a.shape == e_b.shape == e_c.shape):
        raise ValueError(f"dimension mismatch: {e_a.shape}, {e_b.shape}, {e_c.shape}")
    # where a term cancels, return the remaining one so the identities hold bit for bit
    return np.where(e_a == e_b, e_c, np.where(e_a == e_c, e_b, e_b - e_a + e_c))


def cosine(u, M) -> np.ndarray:
    """Cosine of ``u`` against each row of ``M``; 0 wherever either norm is 0."""
    u, M = _vec(u), np.atleast_2d(_vec(M))
    if M.shape[-1] != u.shape[-1]:
        raise ValueError(f"dimension mismatch: {u.shape[-1]} vs {M.shape[-1]}")
    nu = np.linalg.norm(u)
    nm = np.linalg.norm(M, axis=-1)
    denom = nu * nm
    dots = M @ u
    return np.divide(dots, denom, out=np.zeros_like(dots), where=denom > 0)


def _check_candidates(words: Sequence[str], emb) -> np.ndarray:
    emb = np.atleast_2d(_vec(emb))
    if len(words) == 0:
        raise ValueError("empty candidate set")
    if len(words) != emb.shape[0]:
        raise ValueError(f"{len(words)} candidate words but {emb.shape[0]} embeddings")
    return emb


def retrieve_nearest(e_x, words: Sequence[str], emb, k: Optional[int] = None,
                     equation=("", "", "")) -> SolverRanking:
    """Top-k candidates by ascending cosine distance; the score is the cosine similarity."""
    if k is not None and k < 1:
        raise ValueError("k must be >= 1")
    emb = _check_candidates(words, emb)
    return SolverRanking(tuple(equation), ranked(list(words), cosine(e_x, emb), k), "nearest")


def score_3cosadd(e_a, e_b, e_c, emb) -> np.ndarray:
    return cosine(solve_parallelogram(e_a, e_b, e_c), emb)


def score_3cosmul(e_a, e_b, e_c, emb, eps: float = EPSILON) -> np.ndarray:
    return cosine(e_b, emb) * cosine(e_c, emb) / (cosine(e_a, emb) + eps)


def solve_3cosadd(e_a, e_b, e_c, words: Sequence[str], emb, k: Optional[int] = None,
                  equation=("", "", "")) -> SolverRanking:
    emb = _check_candidates(words, emb)
    return SolverRanking(tuple(equation), ranked(list(words), score_3cosadd(e_a, e_b, e_c, emb), k), "3cosadd")


def solve_3cosmul(e_a, e_b, e_c, words: Sequence[str], emb, eps: float = EPSILON,
                  k: Optional[int] = None, equation=("", "", "")) -> SolverRanking:
    emb = _check_candidates(words, emb)
    return SolverRanking(tuple(equation), ranked(list(words), score_3cosmul(e_a, e_b, e_c, emb, eps), k),
                         "3cosmul")
