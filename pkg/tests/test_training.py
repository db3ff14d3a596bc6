import json

import numpy as np
import pytest

from morpho_analogy.data import SplitSizes, Vocabulary, build_word_dataset
from morpho_analogy.models import AnncConfig, Annr, AnnrConfig, AutoEncoder, AutoEncoderConfig, CnnEmbedder, \
    CnnEmbedderConfig
from morpho_analogy.nn import Module
from morpho_analogy.nn import losses as L
from morpho_analogy.toy import toy_split, toy_words
from morpho_analogy.training import (EarlyStopping, TrainConfig, TrainReport, ae_annr_loss, lambda_schedule,
                                     pretrain_ae, train_ae_annr, train_annc, train_cnn_annr, vocabulary_for)

SMALL = SplitSizes(dev=10, test=10, train_max=40)


@pytest.fixture(scope="module")
def split():
    return toy_split(0, n_stems=20, n_analogies=60, sizes=SMALL)


def _cnn(split, seed=0):
    return CnnEmbedder(vocabulary_for(split), CnnEmbedderConfig(char_emb_dim=6, filters_per_width=2),
                       rng=np.random.default_rng(seed))


class TestLambda:
    @pytest.mark.parametrize("epoch,expected", [(0, 0.01), (2, 0.4), (5, 0.99), (40, 0.99)])
    def test_values(self, epoch, expected):
        assert lambda_schedule(epoch) == pytest.approx(expected)

    def test_negative_epoch(self):
        with pytest.raises(ValueError):
            lambda_schedule(-1)


class TestEarlyStopping:
    def test_restores_best(self):
        m = Module()
        p = m.add_param("w", np.zeros(1))
        stop = EarlyStopping([m], patience=2)
        for epoch, (value, w) in enumerate([(3.0, 1.0), (1.0, 2.0), (2.0, 3.0), (1.5, 4.0)]):
            p.data[...] = w
            stop.update(epoch, value)
        assert stop.should_stop and stop.best_epoch == 1
        stop.restore()
        assert p.data[0] == 2.0

    def test_relative_min_delta(self):
        stop = EarlyStopping([], patience=1, min_delta=0.1)
        stop.update(0, 1.0)
        assert not stop.update(1, 0.95)  # 5% is not enough
        assert stop.should_stop


class TestReport:
    def test_monotone_epochs(self):
        r = TrainReport("x", {})
        r.log_epoch(epoch=0, loss=np.float32(1.0))
        with pytest.raises(ValueError):
            r.log_epoch(epoch=0, loss=1.0)
        assert json.loads(r.dumps())["epochs"][0]["loss"] == 1.0


class TestAnnc:
    def test_smoke_and_determinism(self, split):
        cfg = TrainConfig.for_annc(batch_size=8, max_epochs=2, seed=1)
        runs = [train_annc(split, _cnn(split), cfg, AnncConfig(n=10, f1_filters=4, f2_filters=2)) for _ in range(2)]
        (e1, a1, r1), (e2, a2, r2) = runs
        assert len(r1.epochs) == 2 and r1.metrics["dev"]["tp"] + r1.metrics["dev"]["fn"] == 8 * len(split.dev)
        assert r1.deterministic_view() == r2.deterministic_view()
        for p, q in zip(e1.parameters() + a1.parameters(), e2.parameters() + a2.parameters()):
            np.testing.assert_array_equal(p.data, q.data)


class TestCnnAnnr:
    def test_phases_and_freeze(self, split):
        cfg = TrainConfig.for_cnn_annr(batch_size=8, max_epochs=6, phase1_patience=1, patience=2,
                                       phase1_min_delta=0.5)
        emb = _cnn(split)
        _, _, rep = train_cnn_annr(split, emb, cfg)
        phases = [e["phase"] for e in rep.epochs]
        assert phases[0] == 1 and 2 in phases
        assert phases == sorted(phases)
        assert rep.metrics["phase1_embedder_unchanged"] is True
        assert rep.metrics["total_epochs"] == len(rep.epochs) <= 6

    def test_epoch_cap(self, split):
        cfg = TrainConfig.for_cnn_annr(batch_size=8, max_epochs=3, phase1_min_delta=0.0)
        _, _, rep = train_cnn_annr(split, _cnn(split), cfg)
        assert len(rep.epochs) <= 3


class TestAutoEncoder:
    def test_pretrain_smoke(self):
        words = build_word_dataset(toy_words(0).train[:60], seed=0, dev=5, test=5, min_words=10)
        cfg = TrainConfig.for_ae(batch_size=16, max_epochs=2)
        ae, rep = pretrain_ae(words, cfg, AutoEncoderConfig(hidden_size=4))
        ae2, rep2 = pretrain_ae(words, cfg, AutoEncoderConfig(hidden_size=4))
        assert rep.deterministic_view() == rep2.deterministic_view()
        assert 0.0 <= rep.metrics["test_accuracy"] <= 1.0

    def test_epoch_zero_weights(self, split):
        ae = AutoEncoder(vocabulary_for(split), AutoEncoderConfig(hidden_size=3), rng=np.random.default_rng(0),
                         dtype=np.float64)
        annr = Annr(AnnrConfig(n=12), rng=np.random.default_rng(1), dtype=np.float64)
        forms = [q.words for q in split.train[:4]]
        perm = L.batch_shuffle_permutation(4, np.random.default_rng(2))
        total, l_annr, l_ae = ae_annr_loss(ae, annr, forms, perm, lambda_schedule(0))
        assert float(total.data) == pytest.approx(0.99 * float(l_annr.data) + 0.01 * float(l_ae.data))
        lo, hi = sorted((float(l_annr.data), float(l_ae.data)))
        for lam in (0.01, 0.4, 0.99):
            t = float(ae_annr_loss(ae, annr, forms, perm, lam)[0].data)
            assert lo - 1e-12 <= t <= hi + 1e-12

    def test_ae_annr_smoke(self, split):
        ae = AutoEncoder(vocabulary_for(split), AutoEncoderConfig(hidden_size=3), rng=np.random.default_rng(0))
        cfg = TrainConfig.for_ae_annr(batch_size=8, max_epochs=2)
        _, _, rep = train_ae_annr(split, ae, cfg)
        assert [e["lam"] for e in rep.epochs] == [0.01, 0.2]


def test_config_rejects_zero_batch():
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)


def test_vocabulary_for_covers_split(split):
    v = vocabulary_for(split)
    assert isinstance(v, Vocabulary)
    assert all(v.unk not in v.encode(w) for q in split.test for w in q.words)
