"""Inflection data ingestion, analogy corpus construction and deterministic splits."""

from __future__ import annotations

import hashlib
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

log = logging.getLogger(__name__)

COLUMN_ORDERS = ("lemma-features-form", "lemma-form-features")


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class InflectionTriple:
    lemma: str
    features: str
    inflected: str

    def __post_init__(self):
        if not (self.lemma and self.features and self.inflected):
            raise DataError(f"empty field in {self!r}")


@dataclass(frozen=True)
class AnalogyQuadruple:
    """``a:b::c:d``; ``feature`` is the transformation tag shared by both pairs."""

    a: str
    b: str
    c: str
    d: str
    feature: str = ""

    def __post_init__(self):
        if not (self.a and self.b and self.c and self.d):
            raise DataError(f"empty word in {self!r}")

    @property
    def words(self) -> tuple[str, str, str, str]:
        return (self.a, self.b, self.c, self.d)

    def serialize(self) -> str:
        return "\t".join(self.words)

    def __str__(self) -> str:
        return f"{self.a}:{self.b}::{self.c}:{self.d}"


class ParsedTriples(list):
    """List of triples plus the ``(line_number, message)`` warnings raised while parsing."""

    def __init__(self, items=(), warnings=()):
        super().__init__(items)
        self.warnings: list[tuple[int, str]] = list(warnings)


def parse_inflection_file(text: Union[str, Iterable[str]], column_order: str = "lemma-features-form",
                          strict: bool = False) -> ParsedTriples:
    """Parse tab-separated inflection triples, one per line.

    Malformed lines are skipped with a recorded warning, or raise
    :class:`DataError` when ``strict``.
    """
    if column_order not in COLUMN_ORDERS:
        raise ValueError(f"column_order must be one of {COLUMN_ORDERS}, got {column_order!r}")
    lines = text.splitlines() if isinstance(text, str) else text
    out = ParsedTriples()
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        fields = line.split("\t")
        problem = None
        if len(fields) != 3:
            problem = f"expected 3 tab-separated fields, got {len(fields)}"
        elif not all(f.strip() for f in fields):
            problem = "empty field"
        if problem:
            if strict:
                raise DataError(f"line {lineno}: {problem}")
            out.warnings.append((lineno, problem))
            log.warning("line %d skipped: %s", lineno, problem)
            continue
        if column_order == "lemma-features-form":
            lemma, feats, form = fields
        else:
            lemma, form, feats = fields
        out.append(InflectionTriple(lemma.strip(), feats.strip(), form.strip()))
    return out


def build_analogy_corpus(triples: Sequence[InflectionTriple]) -> list[AnalogyQuadruple]:
    """One quadruple per unordered pair of triples with an identical feature tag.

    Pairing a triple with itself yields the identity form ``a:b::a:b``.
    """
    groups: dict[str, list[InflectionTriple]] = defaultdict(list)
    for t in triples:
        groups[t.features].append(t)
    corpus = []
    for feats, group in groups.items():
        for i, t1 in enumerate(group):
            for t2 in group[i:]:
                corpus.append(AnalogyQuadruple(t1.lemma, t1.inflected, t2.lemma, t2.inflected, feats))
    return corpus


def dedup_analogies(corpus: Iterable[AnalogyQuadruple]) -> list[AnalogyQuadruple]:
    """Collapse ``A:B::C:D`` / ``C:D::A:B`` pairs (and exact repeats) to one representative.

    The surviving form is the one with the lexicographically smaller
    serialization; output follows the order in which each class first appears.
    """
    chosen: dict[tuple, AnalogyQuadruple] = {}
    for q in corpus:
        flipped = (q.c, q.d, q.a, q.b)
        key = min(q.words, flipped)
        kept = chosen.get(key)
        if kept is None:
            chosen[key] = q if q.words == key else AnalogyQuadruple(*key, q.feature)
    return list(chosen.values())


@dataclass
class SplitSizes:
    dev: int = 500
    test: int = 5000
    train_max: int = 50000


@dataclass
class CorpusSplit:
    train: list[AnalogyQuadruple]
    dev: list[AnalogyQuadruple]
    test: list[AnalogyQuadruple]
    word_pool: list[str]
    seed: int
    sizes: SplitSizes = field(default_factory=SplitSizes)


def split_corpus(corpus: Sequence[AnalogyQuadruple], word_pool: Iterable[str], seed: int,
                 sizes: Optional[SplitSizes] = None) -> CorpusSplit:
    """Disjoint uniform samples for dev, then test, then train (each truncating to what is left)."""
    sizes = sizes or SplitSizes()
    unique = list(dict.fromkeys(corpus))
    if len(unique) < sizes.dev + 1:
        raise DataError(f"corpus has {len(unique)} distinct analogies; need more than {sizes.dev} for the dev set")
    order = np.random.default_rng(seed).permutation(len(unique))
    dev_idx = order[:sizes.dev]
    rest = order[sizes.dev:]
    test_idx = rest[:sizes.test]
    train_idx = rest[sizes.test:sizes.test + sizes.train_max]
    pick = lambda idx: [unique[i] for i in idx]  # noqa: E731
    return CorpusSplit(pick(train_idx), pick(dev_idx), pick(test_idx),
                       sorted(set(word_pool)), seed, sizes)


# ---------------------------------------------------------------- vocabulary

PAD, UNK, BOW, EOW = "<PAD>", "<UNK>", "<BOW>", "<EOW>"
RESERVED = (PAD, UNK, BOW, EOW)


class Vocabulary:
    """Character <-> index map; indices 0..3 are PAD, UNK, BOW, EOW."""

    def __init__(self, chars: Iterable[str]):
        chars = sorted(set(chars))
        for ch in chars:
            if len(ch) != 1:
                raise ValueError(f"vocabulary entries are single characters, got {ch!r}")
        self.chars = chars
        self.tokens = list(RESERVED) + chars
        self._index = {tok: i for i, tok in enumerate(self.tokens)}

    pad = 0
    unk = 1
    bow = 2
    eow = 3

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "Vocabulary":
        return cls(ch for w in words for ch in w)

    def __len__(self) -> int:
        return len(self.tokens)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def index(self, token: str) -> int:
        return self._index.get(token, self.unk)

    def token(self, i: int) -> str:
        return self.tokens[i]

    def encode(self, word: str) -> list[int]:
        """Character ids; characters outside the vocabulary map to UNK."""
        get = self._index.get
        return [get(ch, self.unk) for ch in word]

    def decode(self, ids: Iterable[int]) -> str:
        """Inverse of :meth:`encode` for data characters; stops at EOW, drops PAD/BOW."""
        out = []
        for i in ids:
            i = int(i)
            if i == self.eow:
                break
            if i in (self.pad, self.bow):
                continue
            out.append("�" if i == self.unk else self.tokens[i])
        return "".join(out)

    def to_json(self) -> dict:
        return {"chars": self.chars}

    @classmethod
    def from_json(cls, data: dict) -> "Vocabulary":
        return cls(data["chars"])


# -------------------------------------------------------------- word dataset

@dataclass
class WordDataset:
    train: list[str]
    dev: list[str]
    test: list[str]
    vocab: Vocabulary
    seed: int


def words_from_triples(triples: Iterable[InflectionTriple]) -> list[str]:
    words = []
    for t in triples:
        words.append(t.lemma)
        words.append(t.inflected)
    return words


def build_word_dataset(words: Iterable[str], seed: int, train_max: int = 40000, dev: int = 500,
                       test: int = 500, min_words: int = 1000) -> WordDataset:
    """Disjoint dev/test/train word samples for autoencoder pre-training."""
    distinct = sorted(set(words))
    if len(distinct) < min_words:
        raise DataError(f"only {len(distinct)} distinct words; need at least {min_words}")
    if len(distinct) < dev + test + 1:
        raise DataError(f"{len(distinct)} words cannot fill dev={dev} and test={test} plus a training set")
    order = np.random.default_rng(seed).permutation(len(distinct))
    pick = lambda idx: [distinct[i] for i in idx]  # noqa: E731
    dev_w = pick(order[:dev])
    test_w = pick(order[dev:dev + test])
    train_w = pick(order[dev + test:dev + test + train_max])
    vocab = Vocabulary.from_words(train_w + dev_w + test_w)
    return WordDataset(train_w, dev_w, test_w, vocab, seed)


# ----------------------------------------------------------------- manifests

def write_quadruples_tsv(quads: Iterable[AnalogyQuadruple], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for q in quads:
            fh.write(f"{q.a}\t{q.b}\t{q.c}\t{q.d}\t{q.feature}\n")


def read_quadruples_tsv(path: Union[str, Path]) -> list[AnalogyQuadruple]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            fields = line.rstrip("\n").split("\t")
            if len(fields) not in (4, 5):
                raise DataError(f"{path}:{lineno}: expected 4 or 5 fields")
            out.append(AnalogyQuadruple(*fields[:4], fields[4] if len(fields) == 5 else ""))
    return out


def file_checksum(path: Union[str, Path]) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_split(split: CorpusSplit, out_dir: Union[str, Path], sources: Sequence[Union[str, Path]] = (),
                words: Optional[WordDataset] = None) -> dict:
    """Write ``train/dev/test.tsv`` (+ word lists) and a ``split.json`` sidecar; returns the sidecar."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in ("train", "dev", "test"):
        write_quadruples_tsv(getattr(split, name), out_dir / f"{name}.tsv")
    (out_dir / "word_pool.txt").write_text("".join(w + "\n" for w in split.word_pool), encoding="utf-8")
    meta = {
        "seed": split.seed,
        "sizes": {"dev": len(split.dev), "test": len(split.test), "train": len(split.train),
                  "requested": vars(split.sizes)},
        "source_checksums": {Path(s).name: file_checksum(s) for s in sources},
    }
    if words is not None:
        for name in ("train", "dev", "test"):
            (out_dir / f"words_{name}.txt").write_text("".join(w + "\n" for w in getattr(words, name)),
                                                      encoding="utf-8")
        (out_dir / "vocab.json").write_text(json.dumps(words.vocab.to_json(), ensure_ascii=False), encoding="utf-8")
        meta["word_sizes"] = {n: len(getattr(words, n)) for n in ("train", "dev", "test")}
        meta["word_seed"] = words.seed
    meta["checksums"] = {p.name: file_checksum(p) for p in sorted(out_dir.iterdir())
                         if p.suffix in (".tsv", ".txt") or p.name == "vocab.json"}
    (out_dir / "split.json").write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")
    return meta


def read_split(in_dir: Union[str, Path]) -> tuple[CorpusSplit, Optional[WordDataset]]:
    in_dir = Path(in_dir)
    meta = json.loads((in_dir / "split.json").read_text(encoding="utf-8"))
    pool = (in_dir / "word_pool.txt").read_text(encoding="utf-8").split("\n")
    split = CorpusSplit(read_quadruples_tsv(in_dir / "train.tsv"), read_quadruples_tsv(in_dir / "dev.tsv"),
                        read_quadruples_tsv(in_dir / "test.tsv"), [w for w in pool if w], meta["seed"],
                        SplitSizes(**meta["sizes"]["requested"]))
    words = None
    if (in_dir / "vocab.json").exists():
        lists = {n: [w for w in (in_dir / f"words_{n}.txt").read_text(encoding="utf-8").split("\n") if w]
                 for n in ("train", "dev", "test")}
        vocab = Vocabulary.from_json(json.loads((in_dir / "vocab.json").read_text(encoding="utf-8")))
        words = WordDataset(lists["train"], lists["dev"], lists["test"], vocab, meta.get("word_seed", meta["seed"]))
    return split, words
