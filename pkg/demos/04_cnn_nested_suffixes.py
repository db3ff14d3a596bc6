"""Why nested suffixes are hard for the max-pooled CNN embedder.

Every window of a prefix is also a window of the longer word, so with
max-pooling the longer word's features are at least as large in every
dimension. The embeddings of ...da and ...dan then differ only where a
window containing the final n wins.

Run: python3 demos/04_cnn_nested_suffixes.py
"""

import numpy as np

from morpho_analogy.data import Vocabulary
from morpho_analogy.models import CnnEmbedder
from morpho_analogy.solvers import cosine

pairs = [("kalemlerinda", "kalemlerindan"), ("ruvadudu", "ruvadudun"), ("evlerde", "evlerden")]
emb = CnnEmbedder(Vocabulary.from_words(w for p in pairs for w in p), rng=np.random.default_rng(0))

for short, long in pairs:
    e = emb.embed([short, long]).data.astype(np.float64)
    dominated = bool(np.all(e[1] >= e[0]))
    print(f"{short:14s} vs {long:14s}  long >= short everywhere: {dominated}  "
          f"dims that differ: {int(np.sum(e[1] != e[0]))}/80  cosine {cosine(e[0], e[1:])[0]:.4f}")
