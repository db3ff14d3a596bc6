"""Parallelogram, 3CosAdd and 3CosMul on hand-made 2-d embeddings.

Run: python3 demos/02_vector_baselines.py
"""

import numpy as np

from morpho_analogy.solvers import solve_3cosadd, solve_3cosmul, solve_parallelogram

# %% a tiny space where the plural offset is the vector (0, 1)
words = ["cat", "cats", "dog", "dogs", "bird", "birds"]
emb = np.array([[1.0, 0.1], [1.0, 1.1], [0.2, 0.1], [0.2, 1.1], [-0.6, 0.1], [-0.6, 1.1]])
e = dict(zip(words, emb))

print("parallelogram cat:cats::dog ->", solve_parallelogram(e["cat"], e["cats"], e["dog"]))
print("3CosAdd:", solve_3cosadd(e["cat"], e["cats"], e["dog"], words, emb).candidates[:3])
print("3CosMul:", solve_3cosmul(e["cat"], e["cats"], e["dog"], words, emb).candidates[:3])

# %% the identities hold exactly, even for values that do not round-trip through b - a + c
u, v = np.array([0.1, 1e20]), np.array([0.3, 1.0])
print(np.array_equal(solve_parallelogram(u, u, v), v), np.array_equal(solve_parallelogram(u, v, u), v))
print("naive b - a + c:", v - u + u)
