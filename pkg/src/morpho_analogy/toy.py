"""A small synthetic agglutinative language for smoke runs and end-to-end checks.

Stems are random consonant-vowel syllable strings; each stem takes five
suffixes whose vowel agrees with the stem's last vowel (front ``e, i`` or
back ``a, o, u``).
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .data import (CorpusSplit, InflectionTriple, SplitSizes, WordDataset, build_analogy_corpus,
                   build_word_dataset, dedup_analogies, split_corpus, words_from_triples)

CONSONANTS = "bdgklmnprstvz"
VOWELS = "aeiou"
FRONT = set("ei")

# tag -> (back-vowel suffix, front-vowel suffix)
SUFFIXES = {
    "N;PL": ("lar", "ler"),
    "N;LOC": ("da", "de"),
    "N;ABL": ("tan", "ten"),
    "N;POSS": ("um", "im"),
    "N;DIM": ("cuk", "cik"),
}

TOY_SIZES = SplitSizes(dev=200, test=300, train_max=1500)
# autoencoder words come from more stems than the analogies; the first 200 stems are shared
TOY_WORD_STEMS = 1000


def _stem(rng: np.random.Generator) -> str:
    n_syll = int(rng.integers(2, 4))
    return "".join(CONSONANTS[rng.integers(len(CONSONANTS))] + VOWELS[rng.integers(len(VOWELS))]
                   for _ in range(n_syll))


def inflect(stem: str, tag: str) -> str:
    back, front = SUFFIXES[tag]
    last_vowel = [ch for ch in stem if ch in VOWELS][-1]
    return stem + (front if last_vowel in FRONT else back)


def toy_triples(seed: int = 0, n_stems: int = 200) -> list[InflectionTriple]:
    rng = np.random.default_rng(seed)
    stems: list[str] = []
    seen: set[str] = set()
    while len(stems) < n_stems:
        s = _stem(rng)
        if s not in seen:
            seen.add(s)
            stems.append(s)
    return [InflectionTriple(s, tag, inflect(s, tag)) for s in stems for tag in SUFFIXES]


def toy_split(seed: int = 0, n_stems: int = 200, n_analogies: int = 2000,
              sizes: Optional[SplitSizes] = None) -> CorpusSplit:
    """Subsample ``n_analogies`` same-tag analogies and split them dev/test/train."""
    triples = toy_triples(seed, n_stems)
    corpus = dedup_analogies(build_analogy_corpus(triples))
    rng = np.random.default_rng([seed, 7])
    keep = np.sort(rng.choice(len(corpus), size=min(n_analogies, len(corpus)), replace=False))
    sample = [corpus[i] for i in keep]
    return split_corpus(sample, words_from_triples(triples), seed, sizes or TOY_SIZES)


def toy_words(seed: int = 0, n_stems: int = TOY_WORD_STEMS, dev: int = 500, test: int = 500) -> WordDataset:
    """Autoencoder word split over every toy word form (``6 * n_stems`` words)."""
    words = words_from_triples(toy_triples(seed, n_stems))
    return build_word_dataset(words, seed, dev=dev, test=test, min_words=min(1000, len(set(words))))
