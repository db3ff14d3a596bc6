"""Ranked solver output and cooperative timeouts."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np


class SolverTimeout(Exception):
    """Raised by a solver that notices its deadline has passed.

    ``partial`` optionally carries the candidates gathered so far.
    """

    def __init__(self, partial: Optional["SolverRanking"] = None):
        super().__init__("solver deadline exceeded")
        self.partial = partial


class Deadline:
    """A monotonic-clock deadline; ``None`` limit means no deadline."""

    def __init__(self, limit: Optional[float] = None):
        self.limit = limit
        self.start = time.monotonic()
        self.end = None if limit is None else self.start + limit

    def expired(self) -> bool:
        return self.end is not None and time.monotonic() >= self.end

    def check(self, partial: Optional[Callable[[], "SolverRanking"]] = None) -> None:
        if self.expired():
            raise SolverTimeout(partial() if partial is not None else None)

    @property
    def elapsed(self) -> float:
        return time.monotonic() - self.start


@dataclass
class SolverRanking:
    """Candidates for ``a:b::c:x`` sorted by descending score, ties by word."""

    equation: tuple[str, str, str]
    candidates: list[tuple[str, float]] = field(default_factory=list)
    solver_id: str = ""
    elapsed: float = 0.0
    timed_out: bool = False
    flags: tuple[str, ...] = ()

    @property
    def words(self) -> list[str]:
        return [w for w, _ in self.candidates]

    @property
    def top(self) -> Optional[str]:
        return self.candidates[0][0] if self.candidates else None

    def rank_of(self, word: str) -> Optional[int]:
        """1-based rank of ``word``, or None if absent."""
        for i, (w, _) in enumerate(self.candidates, 1):
            if w == word:
                return i
        return None


def ranked(words: Sequence[str], scores: Iterable[float], k: Optional[int] = None) -> list[tuple[str, float]]:
    scores = np.asarray(list(scores), dtype=np.float64)
    if len(words) != len(scores):
        raise ValueError("words and scores differ in length")
    # primary key: descending score (NaN last), secondary: word
    safe = np.where(np.isnan(scores), -np.inf, scores)
    order = sorted(range(len(words)), key=lambda i: (-safe[i], words[i]))
    if k is not None:
        order = order[:k]
    return [(words[i], float(scores[i])) for i in order]


SolveFn = Callable[..., SolverRanking]


def solve_with_timeout(solver: SolveFn, equation: Sequence[str], limit: Optional[float] = 10.0,
                       **kwargs) -> SolverRanking:
    """Run ``solver(a, b, c, deadline=..., **kwargs)`` under a cooperative time limit.

    A limit of 0 (or less) times out before the solver starts. Timed-out
    equations return whatever partial ranking the solver handed back.
    """
    a, b, c = equation[:3]
    deadline = Deadline(limit)
    if limit is not None and limit <= 0:
        return SolverRanking((a, b, c), [], getattr(solver, "solver_id", ""), 0.0, True)
    try:
        result = solver(a, b, c, deadline=deadline, **kwargs)
    except SolverTimeout as exc:
        result = exc.partial or SolverRanking((a, b, c), [], getattr(solver, "solver_id", ""))
        result = replace(result, timed_out=True)
    return replace(result, elapsed=deadline.elapsed)
