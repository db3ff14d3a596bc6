"""Train the neural models on the synthetic toy language and compare solvers.

Takes about 4 minutes per seed on one CPU core; pass --quick for a
reduced run that only shows the pipeline.

Run: python3 demos/03_toy_end_to_end.py [--quick]
"""

import sys

import numpy as np

from morpho_analogy.data import SplitSizes
from morpho_analogy.evaluation import evaluate_solver
from morpho_analogy.models import AnncConfig, AutoEncoderConfig, CnnEmbedder
from morpho_analogy.solvers import GenerationSolver, RetrievalSolver
from morpho_analogy.toy import toy_split, toy_words
from morpho_analogy.training import (TrainConfig, pretrain_ae, train_ae_annr, train_annc, train_cnn_annr,
                                     vocabulary_for)

quick = "--quick" in sys.argv
epochs = {"max_epochs": 3} if quick else {}

# %% data: 200 stems x 5 suffixes, ~2000 analogies
split = toy_split(0, sizes=SplitSizes(50, 100, 300) if quick else None)
words = toy_words(0)
print(len(split.train), "train /", len(split.dev), "dev /", len(split.test), "test analogies")
print("e.g.", split.test[0])

# %% CNN embedder + ANNc classifier
emb = CnnEmbedder(vocabulary_for(split, words), rng=np.random.default_rng([0, 0]))
emb, annc, rep = train_annc(split, emb, TrainConfig.for_annc(batch_size=32, **{"max_epochs": 30, **epochs}),
                            AnncConfig(80, 32, 16))
print("ANNc held-out balanced accuracy:", round(rep.metrics["test"]["balanced_accuracy"], 4))

# %% retrieval: 3CosMul on the ANNc embedder vs. a fine-tuned CNN + ANNr
mul = evaluate_solver(RetrievalSolver(emb, split.word_pool, "3cosmul"), split.test, None, "cnn+3cosmul")
emb_r, annr, _ = train_cnn_annr(split, emb, TrainConfig.for_cnn_annr(batch_size=32, learning_rate=3e-3, **epochs))
ret = evaluate_solver(RetrievalSolver(emb_r, split.word_pool, "annr", annr), split.test, None, "cnn+annr")
print("hit@k CNN+3CosMul:", mul.retrieval.hit_at)
print("hit@k CNN+ANNr:   ", ret.retrieval.hit_at)

# %% generation: autoencoder pre-training, then joint AE + ANNr
ae, rep = pretrain_ae(words, TrainConfig.for_ae(batch_size=64, patience=10, **epochs),
                      AutoEncoderConfig(hidden_size=64))
print("AE held-out round trip:", rep.metrics["test_accuracy"])
par = evaluate_solver(GenerationSolver(ae, "parallel"), split.test, None, "ae+parallel")
ae, annr_g, _ = train_ae_annr(split, ae, TrainConfig.for_ae_annr(batch_size=32, learning_rate=3e-3, **epochs))
gen = evaluate_solver(GenerationSolver(ae, "annr", annr_g), split.test, None, "ae+annr")
print("word accuracy AE+parallel:", par.generation.word_accuracy, " AE+ANNr:", gen.generation.word_accuracy)
for q, r in list(zip(split.test, gen.rankings))[:5]:
    print(f"  {q.a}:{q.b}::{q.c}:x  ->  {r.top}  (gold {q.d})")
