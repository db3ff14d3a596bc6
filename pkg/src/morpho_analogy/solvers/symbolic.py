"""Symbolic solvers over character strings: Alea (Monte-Carlo) and Kolmo (edit programs)."""

from __future__ import annotations

import heapq
import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .ranking import Deadline, SolverRanking, ranked

Bag = Counter


def bag_of(word: str) -> Bag:
    return Counter(word)


def bag_target(a: str, b: str, c: str) -> Bag:
    """(bag(B) - bag(A)) + bag(C), with per-character subtraction floored at 0."""
    # Counter subtraction already drops non-positive counts
    return (bag_of(b) - bag_of(a)) + bag_of(c)


# ---------------------------------------------------------------- Alea

def _embedding_counts(s: str, a: str) -> list[list[int]]:
    """counts[i][k] = number of ways A[k:] embeds as a subsequence of s[i:]."""
    n, m = len(s), len(a)
    counts = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        counts[i][m] = 1
    for i in range(n - 1, -1, -1):
        row, nxt = counts[i], counts[i + 1]
        for k in range(m - 1, -1, -1):
            row[k] = nxt[k] + (nxt[k + 1] if s[i] == a[k] else 0)
    return counts


def _unrank_deletion(s: str, a: str, counts: list[list[int]], r: int) -> str:
    """Delete the r-th embedding of ``a`` in ``s`` (embeddings ordered by skip-first)."""
    kept = []
    k = 0
    for i, ch in enumerate(s):
        if k == len(a):
            kept.append(s[i:])
            break
        skip = counts[i + 1][k]
        if r < skip:
            kept.append(ch)
            continue
        r -= skip
        k += 1
    return "".join(kept)


def alea_candidates(a: str, b: str, c: str, trials: int, rng: np.random.Generator,
                    deadline: Optional[Deadline] = None) -> Counter:
    """Frequency of each shuffle-deletion outcome over ``trials`` samples.

    A trial interleaves B and C uniformly at random, then removes one
    uniformly chosen subsequence occurrence of A. Trials where A does not
    occur fail and contribute nothing. Outcomes violating the bag identity
    are dropped (this only happens when A is not contained in B).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    nb, n = len(b), len(b) + len(c)
    target = bag_target(a, b, c)
    out: Counter = Counter()
    memo: dict[str, tuple[list[list[int]], int]] = {}
    outcome: dict[tuple[str, int], Optional[str]] = {}
    # draw all randomness up front so results depend only on the seed
    keys = rng.random((trials, n))
    picks = rng.random(trials)
    for t in range(trials):
        if deadline is not None and t % 64 == 0:
            deadline.check(lambda: _alea_ranking(a, b, c, out, t))
        from_b = np.zeros(n, dtype=bool)
        from_b[np.argsort(keys[t], kind="stable")[:nb]] = True
        chars, ib, ic = [], 0, 0
        for flag in from_b:
            if flag:
                chars.append(b[ib]); ib += 1
            else:
                chars.append(c[ic]); ic += 1
        s = "".join(chars)
        if s not in memo:
            counts = _embedding_counts(s, a)
            memo[s] = (counts, counts[0][0])
        counts, total = memo[s]
        if total == 0:
            continue
        r = min(int(picks[t] * total), total - 1)
        key = (s, r)
        if key not in outcome:
            d = _unrank_deletion(s, a, counts, r)
            outcome[key] = d if bag_of(d) == target else None
        if outcome[key] is not None:
            out[outcome[key]] += 1
    return out


def _alea_ranking(a, b, c, freq: Counter, trials: int) -> SolverRanking:
    words = sorted(freq)
    scores = [freq[w] / max(trials, 1) for w in words]
    flags = () if freq else ("no_solution",)
    return SolverRanking((a, b, c), ranked(words, scores), "alea", flags=flags)


def solve_alea(a: str, b: str, c: str, trials: int = 1000, rng: Optional[np.random.Generator] = None,
               deadline: Optional[Deadline] = None, seed: int = 0) -> SolverRanking:
    rng = rng if rng is not None else np.random.default_rng(seed)
    freq = alea_candidates(a, b, c, trials, rng, deadline)
    return _alea_ranking(a, b, c, freq, trials)


solve_alea.solver_id = "alea"


def exhaustive_shuffle_deletions(a: str, b: str, c: str) -> set[str]:
    """Every outcome reachable by some interleaving and some occurrence of A, bag-filtered."""
    n, target = len(b) + len(c), bag_target(a, b, c)
    found = set()
    for pos in itertools.combinations(range(n), len(b)):
        chars, ib, ic, pset = [], 0, 0, set(pos)
        for i in range(n):
            if i in pset:
                chars.append(b[ib]); ib += 1
            else:
                chars.append(c[ic]); ic += 1
        s = "".join(chars)
        for occ in itertools.combinations(range(n), len(a)):
            if all(s[i] == ch for i, ch in zip(occ, a)):
                drop = set(occ)
                d = "".join(ch for i, ch in enumerate(s) if i not in drop)
                if bag_of(d) == target:
                    found.add(d)
    return found


# ---------------------------------------------------------------- Kolmo

@dataclass(frozen=True)
class CopyRun:
    length: int

    @property
    def bits(self) -> int:
        return 2 + self.length.bit_length()


@dataclass(frozen=True)
class Insert:
    text: str

    @property
    def bits(self) -> int:
        return 3 + 8 * len(self.text)


@dataclass(frozen=True)
class Delete:
    length: int

    @property
    def bits(self) -> int:
        return 3 + self.length.bit_length()


EditOp = Union[CopyRun, Insert, Delete]


@dataclass(frozen=True)
class EditProgram:
    ops: tuple[EditOp, ...]

    @property
    def complexity(self) -> int:
        return sum(op.bits for op in self.ops)

    def consumed(self) -> int:
        return sum(op.length for op in self.ops if not isinstance(op, Insert))

    def apply(self, source: str) -> str:
        """Replay left to right; the cursor must end exactly at the end of ``source``."""
        out, i = [], 0
        for op in self.ops:
            if isinstance(op, Insert):
                out.append(op.text)
                continue
            if i + op.length > len(source):
                raise ValueError("program runs past the end of its source")
            if isinstance(op, CopyRun):
                out.append(source[i:i + op.length])
            i += op.length
        if i != len(source):
            raise ValueError("program leaves part of its source unconsumed")
        return "".join(out)

    def __str__(self) -> str:
        parts = []
        for op in self.ops:
            arg = repr(op.text) if isinstance(op, Insert) else op.length
            parts.append(f"{type(op).__name__}({arg})")
        return "[" + ", ".join(parts) + "]"


def _successors(a: str, b: str, i: int, j: int, last: Optional[type]):
    if last is not CopyRun:
        n = 0
        while i + n < len(a) and j + n < len(b) and a[i + n] == b[j + n]:
            n += 1
            yield CopyRun(n), i + n, j + n
    if last is not Insert:
        for n in range(1, len(b) - j + 1):
            yield Insert(b[j:j + n]), i, j + n
    if last is not Delete:
        for n in range(1, len(a) - i + 1):
            yield Delete(n), i + n, j


def iter_programs(a: str, b: str, budget: Optional[int] = 100_000,
                  deadline: Optional[Deadline] = None):
    """Yield programs turning ``a`` into ``b`` in non-decreasing complexity.

    Best-first search over partial programs; states are cursor pairs and the
    last op type (two ops of the same type never follow each other, since
    they would merge into a cheaper single op). ``budget`` caps the number
    of queue pops.
    """
    if budget is not None and budget < 1:
        raise ValueError("budget must be >= 1")
    tie = itertools.count()
    heap = [(0, next(tie), 0, 0, None, ())]
    pops = 0
    while heap:
        if budget is not None and pops >= budget:
            return
        if deadline is not None and pops % 64 == 0:
            deadline.check()
        cost, _, i, j, last, ops = heapq.heappop(heap)
        pops += 1
        if i == len(a) and j == len(b):
            yield EditProgram(ops)
            continue
        for op, ni, nj in _successors(a, b, i, j, last):
            heapq.heappush(heap, (cost + op.bits, next(tie), ni, nj, type(op), ops + (op,)))


def _lcs_alignment(a: str, c: str) -> dict[int, int]:
    """Map from positions of ``a`` to positions of ``c`` along one longest common subsequence."""
    n, m = len(a), len(c)
    L = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            L[i][j] = L[i + 1][j + 1] + 1 if a[i] == c[j] else max(L[i + 1][j], L[i][j + 1])
    match, i, j = {}, 0, 0
    while i < n and j < m:
        if a[i] == c[j]:
            match[i] = j
            i += 1
            j += 1
        elif L[i + 1][j] >= L[i][j + 1]:
            i += 1
        else:
            j += 1
    return match


def boundary_map(a: str, c: str) -> list[int]:
    """Map each cut point 0..len(a) of ``a`` to a cut point of ``c``."""
    match = _lcs_alignment(a, c)
    n, m = len(a), len(c)
    known: list[Optional[int]] = [None] * (n + 1)
    known[0], known[n] = 0, m
    for p in range(1, n):
        left = match[p - 1] + 1 if p - 1 in match else None
        right = match.get(p)
        # extra characters of C between the two neighbours join the longer side of the cut
        if left is not None and right is not None:
            known[p] = right if 2 * p > n else left
        else:
            known[p] = left if left is not None else right
    out = list(known)
    for p in range(n + 1):
        if out[p] is None:
            lo = max(q for q in range(p) if known[q] is not None)
            hi = min(q for q in range(p + 1, n + 1) if known[q] is not None)
            frac = (p - lo) / (hi - lo)
            out[p] = int(round(known[lo] + frac * (known[hi] - known[lo])))
    for p in range(1, n + 1):
        out[p] = max(out[p], out[p - 1])
    return out


def reanchor(program: EditProgram, a: str, c: str) -> Optional[EditProgram]:
    """Transfer a program written against ``a`` onto ``c``; None if some span vanishes."""
    cuts = boundary_map(a, c)
    ops, p = [], 0
    for op in program.ops:
        if isinstance(op, Insert):
            ops.append(op)
            continue
        lo, hi = cuts[p], cuts[p + op.length]
        if hi <= lo:
            return None
        ops.append(type(op)(hi - lo))
        p += op.length
    return EditProgram(tuple(ops))


@dataclass
class KolmoResult:
    word: Optional[str]
    program: Optional[EditProgram]  # the A->B program that produced ``word``
    anchored: Optional[EditProgram] = None
    explored: int = 0

    @property
    def solved(self) -> bool:
        return self.word is not None


def kolmo_solutions(a: str, b: str, c: str, k: int = 1, budget: Optional[int] = 100_000,
                    deadline: Optional[Deadline] = None) -> list[KolmoResult]:
    """Up to ``k`` distinct outputs from applicable programs, cheapest first."""
    found: list[KolmoResult] = []
    seen: set[str] = set()
    for n, prog in enumerate(iter_programs(a, b, budget, deadline), 1):
        anchored = reanchor(prog, a, c)
        if anchored is None:
            continue
        d = anchored.apply(c)
        if d in seen:
            continue
        seen.add(d)
        found.append(KolmoResult(d, prog, anchored, n))
        if len(found) >= k:
            break
    return found


def solve_kolmo(a: str, b: str, c: str, budget: Optional[int] = 100_000,
                deadline: Optional[Deadline] = None) -> KolmoResult:
    found = kolmo_solutions(a, b, c, 1, budget, deadline)
    return found[0] if found else KolmoResult(None, None)


def kolmo_ranking(a: str, b: str, c: str, k: int = 10, budget: Optional[int] = 100_000,
                  deadline: Optional[Deadline] = None) -> SolverRanking:
    found = kolmo_solutions(a, b, c, k, budget, deadline)
    words = [r.word for r in found]
    scores = [-float(r.program.complexity) for r in found]
    flags = () if found else ("no_solution",)
    return SolverRanking((a, b, c), ranked(words, scores), "kolmo", flags=flags)


kolmo_ranking.solver_id = "kolmo"
