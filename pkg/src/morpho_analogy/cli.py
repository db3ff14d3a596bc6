"""Command line: prepare data, train models, solve equations, run benchmarks, print reports.

Every artifact of one configuration lives under ``<runs>/<config hash>/``::

    config.json
    data/                       split TSVs, word lists, manifests
    models/seed<N>/             checkpoints (+ .json sidecars) and train reports
    benchmarks/<bench hash>/    metrics.json, report.tsv, table.txt, traces/

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import toy
from .data import (COLUMN_ORDERS, DataError, SplitSizes, build_analogy_corpus, build_word_dataset,
                   dedup_analogies, parse_inflection_file, read_split, split_corpus, words_from_triples, write_split)
from .evaluation import run_benchmark
from .models import (AnncConfig, AnnrConfig, AutoEncoderConfig, CnnEmbedder, CnnEmbedderConfig, load_model,
                     save_model)
from .solvers import (AnncRetrievalSolver, GenerationSolver, RetrievalSolver, kolmo_ranking,
                      solve_alea, solve_with_timeout)
from .training import (TrainConfig, pretrain_ae, train_ae_annr, train_annc, train_cnn_annr, vocabulary_for)

log = logging.getLogger("morpho_analogy")

MODELS = ("ae", "annc", "cnn-annr", "ae-annr")
SOLVERS = ("alea", "kolmo", "cnn+3cosmul", "cnn+3cosadd", "cnn+annc", "cnn+annr", "ae+parallel", "ae+annr")
DEFAULT_SOLVERS = ("alea", "kolmo", "cnn+3cosmul", "cnn+annc", "cnn+annr", "ae+parallel", "ae+annr")
TRAIN_PRESETS = {"ae": TrainConfig.for_ae, "annc": TrainConfig.for_annc, "cnn-annr": TrainConfig.for_cnn_annr,
                 "ae-annr": TrainConfig.for_ae_annr}

# checkpoint files per training step: (file stem, what it holds)
CHECKPOINTS = {
    "ae": ["ae"],
    "annc": ["cnn_annc", "annc"],
    "cnn-annr": ["cnn_annr", "annr_cnn"],
    "ae-annr": ["ae_annr", "annr_ae"],
}
PREREQUISITES = {"cnn-annr": "annc", "ae-annr": "ae"}


class UsageError(Exception):
    """Bad flags or configuration; exit code 2."""


@dataclass
class RunConfig:
    """Everything needed to rebuild a run from its inputs."""

    language: str = "toy"
    toy: bool = False
    inputs: list[str] = field(default_factory=list)
    column_order: str = "lemma-features-form"
    strict: bool = False
    split_seed: int = 0
    sizes: dict = field(default_factory=lambda: asdict(SplitSizes()))
    word_sizes: dict = field(default_factory=lambda: {"dev": 500, "test": 500, "train_max": 40000})
    cnn: dict = field(default_factory=dict)
    ae: dict = field(default_factory=dict)
    annc: dict = field(default_factory=dict)
    annr: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)  # model name -> TrainConfig overrides
    seeds: list[int] = field(default_factory=lambda: [0])
    solvers: list[str] = field(default_factory=lambda: list(DEFAULT_SOLVERS))
    timeout: float = 10.0
    alea_trials: int = 1000
    kolmo_budget: int = 100_000
    annc_prefilter: Optional[int] = None

    # fields that pick what to run on an existing run directory rather than defining it
    SELECTION = ("seeds", "solvers", "timeout", "alea_trials", "kolmo_budget", "annc_prefilter")

    @classmethod
    def toy_preset(cls, **kw) -> "RunConfig":
        sizes = toy.TOY_SIZES
        base = dict(
            language="toy", toy=True,
            sizes={"dev": sizes.dev, "test": sizes.test, "train_max": sizes.train_max},
            word_sizes={"dev": 500, "test": 500, "train_max": 40000},
            annc={"f1_filters": 32, "f2_filters": 16},
            ae={"hidden_size": 64},
            train={"annc": {"batch_size": 32, "max_epochs": 30},
                   "cnn-annr": {"batch_size": 32, "learning_rate": 3e-3},
                   "ae": {"batch_size": 64, "patience": 10},
                   "ae-annr": {"batch_size": 32, "learning_rate": 3e-3}},
            seeds=[0, 1, 2],
        )
        base.update(kw)
        return cls(**base)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    def identity(self) -> dict:
        d = self.to_dict()
        for k in self.SELECTION:
            d.pop(k)
        return d

    def digest(self) -> str:
        blob = json.dumps(self.identity(), sort_keys=True, ensure_ascii=False).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:12]

    def train_config(self, model: str, seed: int) -> TrainConfig:
        return TRAIN_PRESETS[model](**{**self.train.get(model, {}), "seed": seed})


# ---------------------------------------------------------------- run layout

class Run:
    def __init__(self, config: RunConfig, root: Path):
        self.config = config
        self.dir = root / config.digest()

    @property
    def data_dir(self) -> Path:
        return self.dir / "data"

    def model_dir(self, seed: int) -> Path:
        return self.dir / "models" / f"seed{seed}"

    def checkpoint(self, stem: str, seed: int) -> Path:
        return self.model_dir(seed) / f"{stem}.mann"

    def ensure(self) -> None:
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.dir / "config.json"
        text = json.dumps(self.config.to_dict(), indent=2, sort_keys=True, ensure_ascii=False)
        path.write_text(text + "\n", encoding="utf-8")

    def load_split(self):
        if not (self.data_dir / "split.json").exists():
            raise RuntimeError(f"no prepared data in {self.data_dir}; run `prepare` first")
        return read_split(self.data_dir)

    def load(self, stem: str, seed: int):
        path = self.checkpoint(stem, seed)
        if not path.exists():
            raise RuntimeError(f"missing checkpoint {path}")
        return load_model(path)


# ------------------------------------------------------------------ commands

def _resolve_input(name: str, data_root: Path) -> Path:
    p = Path(name)
    return p if p.is_absolute() or p.exists() else data_root / p


def cmd_prepare(run: Run, args) -> int:
    cfg = run.config
    if cfg.toy:
        split = toy.toy_split(cfg.split_seed, sizes=SplitSizes(**cfg.sizes))
        words = toy.toy_words(cfg.split_seed, dev=cfg.word_sizes["dev"], test=cfg.word_sizes["test"])
        sources = []
    else:
        if not cfg.inputs:
            raise UsageError("prepare needs --input files or --toy")
        triples = []
        sources = [_resolve_input(name, args.data_dir) for name in cfg.inputs]
        for path in sources:
            if not path.exists():
                raise RuntimeError(f"input file not found: {path}")
            parsed = parse_inflection_file(path.read_text(encoding="utf-8"), cfg.column_order, cfg.strict)
            for line_no, msg in parsed.warnings:
                log.warning("%s:%d: %s", path.name, line_no, msg)
            triples += parsed
        corpus = dedup_analogies(build_analogy_corpus(triples))
        pool = words_from_triples(triples)
        split = split_corpus(corpus, pool, cfg.split_seed, SplitSizes(**cfg.sizes))
        words = build_word_dataset(pool, cfg.split_seed, **cfg.word_sizes)
    run.ensure()
    meta = write_split(split, run.data_dir, sources, words)
    log.info("prepared %s: train %d, dev %d, test %d analogies; %d candidate words",
             cfg.language, meta["sizes"]["train"], meta["sizes"]["dev"], meta["sizes"]["test"],
             len(split.word_pool))
    print(run.dir)
    return 0


def _train_one(run: Run, model: str, seed: int) -> None:
    cfg = run.config
    split, words = run.load_split()
    tc = cfg.train_config(model, seed)
    needed = PREREQUISITES.get(model)
    if needed is not None:
        stem = CHECKPOINTS[needed][0]
        if not run.checkpoint(stem, seed).exists():
            raise RuntimeError(f"{model} needs the {needed} checkpoint {run.checkpoint(stem, seed)}; "
                               f"run `train {needed}` first")
    if model == "ae":
        if words is None:
            raise RuntimeError("prepared data has no word lists for the autoencoder")
        ae, report = pretrain_ae(words, tc, AutoEncoderConfig(**cfg.ae))
        outputs = [ae]
    elif model == "annc":
        vocab = vocabulary_for(split, words)
        emb = CnnEmbedder(vocab, CnnEmbedderConfig(**cfg.cnn), rng=np.random.default_rng([seed, 0]))
        annc_cfg = AnncConfig(**{"n": emb.output_dim, **cfg.annc})
        emb, annc, report = train_annc(split, emb, tc, annc_cfg)
        outputs = [emb, annc]
    elif model == "cnn-annr":
        emb = run.load("cnn_annc", seed)
        annr_cfg = AnnrConfig(**{"n": emb.output_dim, **cfg.annr})
        emb, annr, report = train_cnn_annr(split, emb, tc, annr_cfg)
        outputs = [emb, annr]
    else:
        ae = run.load("ae", seed)
        ae, annr, report = train_ae_annr(split, ae, tc)
        outputs = [ae, annr]
    out = run.model_dir(seed)
    out.mkdir(parents=True, exist_ok=True)
    for stem, m in zip(CHECKPOINTS[model], outputs):
        save_model(m, out / f"{stem}.mann")
    (out / f"{model}.report.json").write_text(report.dumps() + "\n", encoding="utf-8")
    log.info("trained %s seed %d: %s after %d epochs", model, seed, report.stop_reason, len(report.epochs))


def cmd_train(run: Run, args) -> int:
    for seed in run.config.seeds:
        _train_one(run, args.model, seed)
    print(run.model_dir(run.config.seeds[0]).parent)
    return 0


def build_solver(name: str, run: Run, seed: int, candidates: Sequence[str]):
    """Instantiate one roster entry for ``seed``; neural entries load their checkpoints."""
    cfg = run.config
    if name == "alea":
        def alea(a, b, c, deadline=None):
            return solve_alea(a, b, c, cfg.alea_trials, deadline=deadline, seed=seed)
        alea.solver_id = "alea"
        return alea
    if name == "kolmo":
        def kolmo(a, b, c, deadline=None):
            return kolmo_ranking(a, b, c, budget=cfg.kolmo_budget, deadline=deadline)
        kolmo.solver_id = "kolmo"
        return kolmo
    if name in ("cnn+3cosmul", "cnn+3cosadd"):
        return RetrievalSolver(run.load("cnn_annc", seed), candidates, name.split("+")[1], name=name)
    if name == "cnn+annc":
        return AnncRetrievalSolver(run.load("cnn_annc", seed), run.load("annc", seed), candidates,
                                   prefilter_k=cfg.annc_prefilter, name=name)
    if name == "cnn+annr":
        return RetrievalSolver(run.load("cnn_annr", seed), candidates, "annr", run.load("annr_cnn", seed),
                               name=name)
    if name == "ae+parallel":
        return GenerationSolver(run.load("ae", seed), "parallel", name=name)
    if name == "ae+annr":
        return GenerationSolver(run.load("ae_annr", seed), "annr", run.load("annr_ae", seed), name=name)
    raise UsageError(f"unknown solver {name!r}; choose from {', '.join(SOLVERS)}")


def _candidates(run: Run, name: str) -> list[str]:
    if name in ("alea", "kolmo") or name.startswith("ae+"):
        return []
    split, _ = run.load_split()
    return split.word_pool


def cmd_solve(run: Run, args) -> int:
    if args.solver not in SOLVERS:
        raise UsageError(f"unknown solver {args.solver!r}; choose from {', '.join(SOLVERS)}")
    seed = run.config.seeds[0]
    solver = build_solver(args.solver, run, seed, _candidates(run, args.solver))
    r = solve_with_timeout(solver, (args.a, args.b, args.c), run.config.timeout)
    cands = r.candidates[:args.k]
    if args.json:
        print(json.dumps({"equation": list(r.equation), "solver": args.solver, "timed_out": r.timed_out,
                          "flags": list(r.flags), "candidates": [{"word": w, "score": s} for w, s in cands]},
                         ensure_ascii=False))
    else:
        if r.timed_out:
            print(f"# timed out after {r.elapsed:.2f}s")
        if not cands:
            print("# no solution")
        for i, (w, s) in enumerate(cands, 1):
            print(f"{i}\t{w}\t{s:.6g}")
    return 0


def cmd_benchmark(run: Run, args) -> int:
    cfg = run.config
    if not cfg.solvers:
        raise UsageError("no solvers requested")
    bad = [s for s in cfg.solvers if s not in SOLVERS]
    if bad:
        raise UsageError(f"unknown solver(s) {', '.join(bad)}; choose from {', '.join(SOLVERS)}")
    split, _ = run.load_split()
    equations = split.test[:args.limit] if args.limit else split.test
    factories = {name: (lambda seed, name=name: build_solver(name, run, seed, split.word_pool))
                 for name in cfg.solvers}
    # load everything up front so a missing checkpoint fails before hours of solving
    for name, make in factories.items():
        for seed in cfg.seeds:
            make(seed)
    selection = {k: getattr(cfg, k) for k in RunConfig.SELECTION}
    selection["limit"] = args.limit
    tag = hashlib.sha256(json.dumps(selection, sort_keys=True).encode()).hexdigest()[:12]
    out = run.dir / "benchmarks" / tag
    run.ensure()
    report = run_benchmark(factories, equations, cfg.timeout, cfg.seeds, cfg.language, out)
    (out / "selection.json").write_text(json.dumps(selection, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(report.table(), end="")
    print(out)
    return 0


def cmd_report(run: Run, args) -> int:
    if args.bundle is not None:
        bundle = Path(args.bundle)
    else:
        found = sorted((run.dir / "benchmarks").glob("*/metrics.json"), key=lambda p: p.stat().st_mtime)
        if not found:
            raise RuntimeError(f"no benchmark bundle under {run.dir}")
        bundle = found[-1].parent
    table = bundle / "table.txt"
    if not table.exists():
        raise RuntimeError(f"{bundle} is not a benchmark bundle")
    print(table.read_text(encoding="utf-8"), end="")
    if args.tsv:
        print((bundle / "report.tsv").read_text(encoding="utf-8"), end="")
    return 0


# -------------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON RunConfig; flags override its values")
    common.add_argument("--toy", action="store_true", help="use the built-in synthetic language")
    common.add_argument("--language", help="language tag for reports")
    common.add_argument("--runs", type=Path, default=Path("runs"), help="root of run directories")
    common.add_argument("--data-dir", type=Path, default=Path(os.environ.get("MORPHO_DATA_DIR", ".")),
                        help="where relative --input paths are looked up (default: $MORPHO_DATA_DIR)")
    common.add_argument("--seeds", type=_int_list, help="comma-separated seeds, e.g. 0,1,2")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="morpho-analogy", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("prepare", parents=[common], help="build analogy splits and word lists")
    sp.add_argument("--input", nargs="+", dest="inputs", help="inflection files (TSV)")
    sp.add_argument("--column-order", choices=COLUMN_ORDERS)
    sp.add_argument("--strict", action="store_true", default=None, help="fail on malformed lines")
    sp.add_argument("--split-seed", type=int)

    sp = sub.add_parser("train", parents=[common], help="train one model family")
    sp.add_argument("model", choices=MODELS)

    sp = sub.add_parser("solve", parents=[common], help="solve A:B::C:x")
    sp.add_argument("--solver", required=True)
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("c")
    sp.add_argument("-k", type=int, default=10)
    sp.add_argument("--json", action="store_true")
    sp.add_argument("--timeout", type=float)

    sp = sub.add_parser("benchmark", parents=[common], help="evaluate solvers on the test split")
    sp.add_argument("--solvers", help=f"comma-separated roster from: {', '.join(SOLVERS)}")
    sp.add_argument("--timeout", type=float)
    sp.add_argument("--limit", type=int, help="only the first N test equations")

    sp = sub.add_parser("report", parents=[common], help="print a benchmark table")
    sp.add_argument("--bundle", type=Path, help="bundle directory (default: most recent)")
    sp.add_argument("--tsv", action="store_true", help="also print report.tsv")
    return p


def resolve_config(args) -> RunConfig:
    base: dict[str, Any] = {}
    if args.config is not None:
        try:
            base = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
    cfg = RunConfig.toy_preset(**base) if (args.toy or base.get("toy")) else RunConfig.from_dict(base)
    overrides = {
        "language": args.language,
        "seeds": args.seeds,
        "inputs": getattr(args, "inputs", None),
        "column_order": getattr(args, "column_order", None),
        "strict": getattr(args, "strict", None),
        "split_seed": getattr(args, "split_seed", None),
        "timeout": getattr(args, "timeout", None),
    }
    solvers = getattr(args, "solvers", None)
    if solvers is not None:
        overrides["solvers"] = [s.strip() for s in solvers.split(",") if s.strip()]
    for k, v in overrides.items():
        if v is not None:
            setattr(cfg, k, v)
    if cfg.column_order not in COLUMN_ORDERS:
        raise UsageError(f"column order must be one of {', '.join(COLUMN_ORDERS)}")
    if not cfg.seeds:
        raise UsageError("at least one seed is required")
    return cfg


COMMANDS = {"prepare": cmd_prepare, "train": cmd_train, "solve": cmd_solve, "benchmark": cmd_benchmark,
            "report": cmd_report}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        run = Run(resolve_config(args), args.runs)
        return COMMANDS[args.command](run, args)
    except UsageError as exc:
        print(f"morpho-analogy: error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, DataError, OSError, ValueError) as exc:
        print(f"morpho-analogy: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
