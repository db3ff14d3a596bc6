"""Analogy equation solvers: symbolic, vector-arithmetic and model-based."""

from .neural import (AnncRetrievalSolver, EmbeddingCache, GenerationSolver, RetrievalSolver,
                     solve_ae_generate, solve_annc_retrieval, solve_annr_retrieval)
from .ranking import Deadline, SolverRanking, SolverTimeout, ranked, solve_with_timeout
from .symbolic import (Bag, CopyRun, Delete, EditProgram, Insert, KolmoResult, alea_candidates, bag_of,
                       bag_target, boundary_map, exhaustive_shuffle_deletions, iter_programs, kolmo_ranking,
                       kolmo_solutions, reanchor, solve_alea, solve_kolmo)
from .vector import (EPSILON, cosine, retrieve_nearest, score_3cosadd, score_3cosmul, solve_3cosadd,
                     solve_3cosmul, solve_parallelogram)

__all__ = [
    "AnncRetrievalSolver", "Bag", "CopyRun", "Deadline", "Delete", "EPSILON", "EditProgram",
    "EmbeddingCache", "GenerationSolver", "Insert", "KolmoResult", "RetrievalSolver", "SolverRanking",
    "SolverTimeout", "alea_candidates", "bag_of", "bag_target", "boundary_map", "cosine",
    "exhaustive_shuffle_deletions", "iter_programs", "kolmo_ranking", "kolmo_solutions", "ranked",
    "reanchor", "retrieve_nearest", "score_3cosadd", "score_3cosmul", "solve_3cosadd", "solve_3cosmul",
    "solve_ae_generate", "solve_alea", "solve_annc_retrieval", "solve_annr_retrieval", "solve_kolmo",
    "solve_parallelogram", "solve_with_timeout",
]
