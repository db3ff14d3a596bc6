"""Classification, retrieval and generation metrics, and the benchmark harness."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from .data import AnalogyQuadruple
from .solvers.ranking import SolverRanking, solve_with_timeout

log = logging.getLogger(__name__)

HIT_KS = (1, 3, 5, 10)
TRACE_RANKS = 10


def _rate(num: int, den: int) -> Optional[float]:
    return num / den if den else None


@dataclass
class ClassificationMetrics:
    """Confusion counts and derived rates; ``None`` marks a rate whose denominator is zero."""

    tp: int
    fp: int
    tn: int
    fn: int
    tpr: Optional[float]
    tnr: Optional[float]
    f1: Optional[float]
    balanced_accuracy: Optional[float]

    def to_dict(self) -> dict:
        return asdict(self)


def classification_metrics(scores, labels, threshold: float = 0.5) -> ClassificationMetrics:
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ValueError(f"{scores.size} scores for {labels.size} labels")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    pred = scores >= threshold
    pos = labels == 1
    tp = int((pred & pos).sum())
    fn = int((~pred & pos).sum())
    fp = int((pred & ~pos).sum())
    tn = int((~pred & ~pos).sum())
    P, N = tp + fn, tn + fp
    tpr, tnr = _rate(tp, P), _rate(tn, N)
    f1 = _rate(2 * tp, 2 * tp + fp + fn)
    # TPR and TNR weighted by class counts; absent classes contribute nothing
    weighted = (tpr or 0.0) * P + (tnr or 0.0) * N
    balanced = weighted / (P + N) if P + N else None
    return ClassificationMetrics(tp, fp, tn, fn, tpr, tnr, f1, balanced)


@dataclass
class RetrievalMetrics:
    hit_at: dict[int, float]
    n_equations: int
    n_timed_out: int = 0

    def to_dict(self) -> dict:
        return {"hit_at": {str(k): v for k, v in self.hit_at.items()},
                "n_equations": self.n_equations, "n_timed_out": self.n_timed_out}


def hit_at_k(rankings: Sequence[SolverRanking], golds: Sequence[str], ks: Sequence[int] = HIT_KS) -> RetrievalMetrics:
    if len(rankings) != len(golds):
        raise ValueError(f"{len(rankings)} rankings for {len(golds)} gold words")
    ks = sorted(set(ks))
    hits = {k: 0 for k in ks}
    timed_out = 0
    for r, gold in zip(rankings, golds):
        if r.timed_out:
            timed_out += 1
            continue
        rank = r.rank_of(gold)
        for k in ks:
            if rank is not None and rank <= k:
                hits[k] += 1
    n = len(golds)
    return RetrievalMetrics({k: (hits[k] / n if n else 0.0) for k in ks}, n, timed_out)


@dataclass
class GenerationMetrics:
    word_accuracy: float
    char_accuracy: float
    truncation_rate: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


def char_accuracy(pred: str, gold: str) -> float:
    """Positional match rate over max(|pred|, |gold|); missing positions count as wrong."""
    width = max(len(pred), len(gold))
    if width == 0:
        return 1.0
    return sum(p == g for p, g in zip(pred, gold)) / width


def generation_metrics(predictions: Sequence[str], golds: Sequence[str],
                       truncated: Optional[Sequence[bool]] = None) -> GenerationMetrics:
    if len(predictions) != len(golds):
        raise ValueError(f"{len(predictions)} predictions for {len(golds)} gold words")
    n = len(golds)
    if n == 0:
        return GenerationMetrics(0.0, 0.0, 0.0, 0)
    word = sum(p == g for p, g in zip(predictions, golds)) / n
    char = float(np.mean([char_accuracy(p, g) for p, g in zip(predictions, golds)]))
    trunc = float(np.mean(truncated)) if truncated is not None and len(truncated) else 0.0
    return GenerationMetrics(word, char, trunc, n)


# ------------------------------------------------------------------ harness

SolverFactory = Callable[[int], Callable[..., SolverRanking]]


@dataclass
class SeedResult:
    solver: str
    seed: int
    retrieval: RetrievalMetrics
    generation: Optional[GenerationMetrics]
    n_errors: int
    rankings: list[SolverRanking] = field(repr=False, default_factory=list)
    golds: list[str] = field(repr=False, default_factory=list)
    wall_time: float = 0.0

    def metric_values(self) -> dict[str, float]:
        out = {f"hit@{k}": v for k, v in self.retrieval.hit_at.items()}
        out["timeouts"] = float(self.retrieval.n_timed_out)
        if self.generation is not None:
            out["word_accuracy"] = self.generation.word_accuracy
            out["char_accuracy"] = self.generation.char_accuracy
            out["truncation_rate"] = self.generation.truncation_rate
        return out


@dataclass
class BenchmarkReport:
    language: str
    results: list[SeedResult]
    timeout: Optional[float]

    def solvers(self) -> list[str]:
        return list(dict.fromkeys(r.solver for r in self.results))

    def aggregate(self) -> dict[str, dict[str, tuple[float, float]]]:
        """solver -> metric -> (mean, population std) over seeds."""
        out: dict[str, dict[str, tuple[float, float]]] = {}
        for name in self.solvers():
            rows = [r.metric_values() for r in self.results if r.solver == name]
            out[name] = {m: (float(np.mean([row[m] for row in rows])), float(np.std([row[m] for row in rows])))
                         for m in rows[0]}
        return out

    def to_json(self) -> dict:
        return {
            "language": self.language,
            "timeout": self.timeout,
            "aggregate": {s: {m: {"mean": mu, "std": sd} for m, (mu, sd) in ms.items()}
                          for s, ms in self.aggregate().items()},
            "per_seed": [{
                "solver": r.solver, "seed": r.seed, "retrieval": r.retrieval.to_dict(),
                "generation": r.generation.to_dict() if r.generation else None,
                "n_errors": r.n_errors,
            } for r in self.results],
            "timing": {f"{r.solver}/seed{r.seed}": {
                "wall_time_s": r.wall_time,
                "mean_elapsed_ms": 1000 * float(np.mean([x.elapsed for x in r.rankings])) if r.rankings else 0.0,
                "timeouts": r.retrieval.n_timed_out,
            } for r in self.results},
        }

    def report_tsv(self) -> str:
        lines = ["language\tsolver\tmetric\tmean\tstd\tper_seed"]
        for solver, metrics in self.aggregate().items():
            seeds = [r for r in self.results if r.solver == solver]
            for m, (mu, sd) in metrics.items():
                per = ",".join(f"{r.seed}:{r.metric_values()[m]:.6f}" for r in seeds)
                lines.append(f"{self.language}\t{solver}\t{m}\t{mu:.6f}\t{sd:.6f}\t{per}")
        return "\n".join(lines) + "\n"

    def table(self) -> str:
        """Human-readable summary: accuracy (hit@1) and hit@10 in percent, mean ± std."""
        rows = [("language", "solver", "accuracy", "hit@10", "timeouts")]
        for solver, m in self.aggregate().items():
            acc = m["word_accuracy"] if "word_accuracy" in m else m["hit@1"]
            rows.append((self.language, solver, f"{100 * acc[0]:.2f} ± {100 * acc[1]:.2f}",
                         f"{100 * m['hit@10'][0]:.2f} ± {100 * m['hit@10'][1]:.2f}",
                         f"{m['timeouts'][0]:.1f}"))
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        fmt = lambda r: "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()  # noqa: E731
        return "\n".join([fmt(rows[0]), "  ".join("-" * w for w in widths)] + [fmt(r) for r in rows[1:]]) + "\n"

    def write(self, out_dir: Union[str, Path]) -> Path:
        out = Path(out_dir)
        (out / "traces").mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(json.dumps(self.to_json(), indent=2, sort_keys=True), encoding="utf-8")
        (out / "report.tsv").write_text(self.report_tsv(), encoding="utf-8")
        (out / "table.txt").write_text(self.table(), encoding="utf-8")
        for r in self.results:
            (out / "traces" / f"{_safe(r.solver)}.seed{r.seed}.tsv").write_text(trace_tsv(r.rankings, r.golds),
                                                                               encoding="utf-8")
        return out


def _safe(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in name.replace("+", "-"))


def trace_tsv(rankings: Sequence[SolverRanking], golds: Sequence[str]) -> str:
    head = ["A", "B", "C", "gold"] + [f"rank{i}" for i in range(1, TRACE_RANKS + 1)] + ["timed_out", "elapsed_ms"]
    lines = ["\t".join(head)]
    for r, gold in zip(rankings, golds):
        ranks = r.words[:TRACE_RANKS]
        ranks += [""] * (TRACE_RANKS - len(ranks))
        lines.append("\t".join(list(r.equation) + [gold] + ranks
                               + [str(int(r.timed_out)), f"{1000 * r.elapsed:.3f}"]))
    return "\n".join(lines) + "\n"


def evaluate_solver(solver: Callable[..., SolverRanking], equations: Sequence[AnalogyQuadruple],
                    timeout: Optional[float] = 10.0, name: str = "", seed: int = 0) -> SeedResult:
    """Solve every equation under the timeout; failures are logged and scored as misses."""
    start = time.monotonic()
    rankings, errors = [], 0
    for q in equations:
        try:
            r = solve_with_timeout(solver, (q.a, q.b, q.c), timeout)
        except Exception as exc:  # a failing equation must not abort the run
            log.warning("%s failed on %s: %s", name, q, exc)
            errors += 1
            r = SolverRanking((q.a, q.b, q.c), [], name, flags=("error",))
        rankings.append(replace(r, solver_id=name or r.solver_id))
    golds = [q.d for q in equations]
    generation = None
    if getattr(solver, "generative", False):
        preds = [r.top or "" for r in rankings]
        generation = generation_metrics(preds, golds, ["truncated" in r.flags for r in rankings])
    return SeedResult(name, seed, hit_at_k(rankings, golds), generation, errors, rankings, golds,
                      time.monotonic() - start)


def run_benchmark(solvers: Mapping[str, SolverFactory], equations: Sequence[AnalogyQuadruple],
                  timeout: Optional[float] = 10.0, seeds: Sequence[int] = (0,), language: str = "",
                  out_dir: Optional[Union[str, Path]] = None) -> BenchmarkReport:
    """Evaluate each solver (built per seed by its factory) on the test equations."""
    if not solvers:
        raise ValueError("no solvers requested")
    results = []
    for name, factory in solvers.items():
        for seed in seeds:
            log.info("benchmark %s seed %d on %d equations", name, seed, len(equations))
            results.append(evaluate_solver(factory(seed), equations, timeout, name, seed))
    report = BenchmarkReport(language, results, timeout)
    if out_dir is not None:
        report.write(out_dir)
    return report


def read_trace(path: Union[str, Path]) -> list[dict]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    head = lines[0].split("\t")
    return [dict(zip(head, line.split("\t"))) for line in lines[1:]]

