"""Axiom augmentation and the two symbolic baselines on a handful of equations.

Run: python3 demos/01_axioms_and_symbolic.py
"""

import numpy as np

from morpho_analogy.axioms import augment_for_classification, invalid_forms, valid_forms
from morpho_analogy.data import AnalogyQuadruple
from morpho_analogy.solvers import exhaustive_shuffle_deletions, solve_alea, solve_kolmo

# %% the 8 equivalent forms of one analogy
q = AnalogyQuadruple("walk", "walked", "talk", "talked")
for f in valid_forms(q):
    print(":".join(f.words[:2]), "::", ":".join(f.words[2:]))

# %% invalid forms; collisions with valid forms are filtered before sampling
sang = AnalogyQuadruple("sang", "sang", "was", "were")
print(len(invalid_forms(sang)), "raw invalid forms")
batch = augment_for_classification(sang, np.random.default_rng(0))
print(len(batch.valid), "valid,", len(batch.invalid), "invalid after filtering")
print("sang:sang::was:were kept as invalid?", sang.words in {f.words for f in batch.invalid})

# %% Alea: shuffle B with C, delete one occurrence of A, keep bag-consistent outcomes
r = solve_alea("cat", "cats", "animal", trials=1000, seed=0)
print("alea top 5:", r.candidates[:5])
print("exhaustive outcomes for a:ab::a", sorted(exhaustive_shuffle_deletions("a", "ab", "a")))
print("alea on undo:do::untie:", solve_alea("undo", "do", "untie").flags)

# %% Kolmo: cheapest A->B edit program, re-anchored onto C
for a, b, c in [("walk", "walked", "talk"), ("undo", "do", "untie"), ("cat", "cats", "animal"),
                ("rainy", "rain", "windy")]:
    k = solve_kolmo(a, b, c)
    print(f"{a}:{b}::{c}:{k.word}  program {k.program}  ({k.program.complexity} bits)")
