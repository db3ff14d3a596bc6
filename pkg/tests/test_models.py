import numpy as np
import pytest

from morpho_analogy.data import Vocabulary
from morpho_analogy.models import (Annc, AnncConfig, Annr, AnnrConfig, AutoEncoder, AutoEncoderConfig,
                                   CnnEmbedder, CnnEmbedderConfig, load_model, save_model)
from morpho_analogy.nn import Optimizer, Tensor, clip_grad_norm, losses as L
from morpho_analogy.toy import toy_words

VOCAB = Vocabulary.from_words(["walked", "talks", "cat", "xyz"])


def _zero(model):
    for p in model.parameters():
        p.data[...] = 0


class TestCnnEmbedder:
    def test_output_dim(self):
        cnn = CnnEmbedder(VOCAB)
        assert CnnEmbedderConfig().output_dim == 80
        assert cnn.embed(["walked", "a", "catcatcatcat"]).shape == (3, 80)

    def test_one_char_word_is_finite(self):
        out = CnnEmbedder(VOCAB).embed(["c"]).data
        assert np.all(np.isfinite(out))

    def test_equal_words_equal_embeddings(self):
        out = CnnEmbedder(VOCAB).embed(["cat", "walked", "cat"]).data
        np.testing.assert_array_equal(out[0], out[2])

    def test_batch_independence(self):
        cnn = CnnEmbedder(VOCAB)
        alone = cnn.embed(["cat"]).data[0]
        mixed = cnn.embed(["walkedwalked", "cat"]).data[1]
        np.testing.assert_allclose(alone, mixed, atol=1e-6)

    def test_permutation_sensitive(self):
        out = CnnEmbedder(VOCAB, rng=np.random.default_rng(3)).embed(["abc", "cab"]).data
        assert not np.allclose(out[0], out[1])


class TestAutoEncoder:
    def test_embedding_dim(self):
        ae = AutoEncoder(VOCAB, AutoEncoderConfig(hidden_size=8))
        for w in ["a", "walked", "talkstalkstalks"]:
            assert ae.encode([w]).shape == (1, 32)

    def test_single_char_symmetric_directions(self):
        ae = AutoEncoder(VOCAB, AutoEncoderConfig(hidden_size=4))
        # share weights so the two directions see the same cell
        ae.enc_b[0].data[...] = ae.enc_f[0].data
        ae.enc_b[1].data[...] = ae.enc_f[1].data
        e = ae.encode(["c"]).data[0]
        np.testing.assert_allclose(e[:4], e[4:8])
        np.testing.assert_allclose(e[8:12], e[12:16])

    def test_teacher_length_includes_eow(self):
        ae = AutoEncoder(VOCAB, AutoEncoderConfig(hidden_size=4))
        probs = ae.decode_teacher(ae.encode(["cat"]), ["cat"])
        assert probs.shape == (1, 4, len(VOCAB))
        np.testing.assert_allclose(probs.data.sum(-1), 1.0, rtol=1e-5)

    def test_decode_dim_mismatch(self):
        ae = AutoEncoder(VOCAB, AutoEncoderConfig(hidden_size=4))
        with pytest.raises(ValueError):
            ae.greedy_decode(np.zeros((1, 15)))

    def test_greedy_stops_at_first_eow(self):
        ae = AutoEncoder(VOCAB, AutoEncoderConfig(hidden_size=4))
        _zero(ae)
        ae.out_b.data[VOCAB.eow] = 5.0
        words, truncated = ae.greedy_decode(np.zeros((1, 16)))
        assert words == [""] and truncated == [False]

    def test_never_eow_is_truncated(self):
        ae = AutoEncoder(VOCAB, AutoEncoderConfig(hidden_size=4, max_decode_length=7))
        _zero(ae)
        ae.out_b.data[VOCAB.encode("c")[0]] = 5.0
        words, truncated = ae.greedy_decode(np.zeros((2, 16)))
        assert words == ["ccccccc"] * 2 and truncated == [True, True]

    def test_memorizes_fifty_words(self):
        words = toy_words(0).train[:50]
        vocab = Vocabulary.from_words(words)
        ae = AutoEncoder(vocab, AutoEncoderConfig(hidden_size=32), rng=np.random.default_rng(0))
        opt = Optimizer(ae.parameters(), "nadam", 1e-2)
        acc = 0.0
        for step in range(300):
            logits, tgt, mask = ae.decode_logits(ae.encode(words), words)
            loss = L.cross_entropy_logits(logits, tgt, mask)
            loss.backward()
            clip_grad_norm(opt.params, 5.0)
            opt.step()
            if step % 20 == 19:
                out, _ = ae.greedy_decode(ae.encode(words))
                acc = np.mean([a == b for a, b in zip(out, words)])
                if acc == 1.0:
                    break
        assert acc == 1.0


class TestAnnc:
    def test_range_and_shapes(self):
        annc = Annc(AnncConfig(n=10, f1_filters=4, f2_filters=3), rng=np.random.default_rng(0))
        rng = np.random.default_rng(1)
        e = [Tensor(rng.normal(size=(5, 10))) for _ in range(4)]
        s = annc.score(*e).data
        assert s.shape == (5,) and np.all((s > 0) & (s < 1))
        assert annc.stage2(Tensor(rng.normal(size=(2, 10, 4)))).shape == (2, 9, 3)

    def test_zero_weights_half(self):
        annc = Annc(AnncConfig(n=6, f1_filters=2, f2_filters=2))
        _zero(annc)
        e = Tensor(np.ones((3, 6)))
        np.testing.assert_allclose(annc.score(e, e, e, e).data, 0.5)

    def test_batching_invariant(self):
        annc = Annc(AnncConfig(n=8, f1_filters=4, f2_filters=3), dtype=np.float64)
        rng = np.random.default_rng(2)
        e = [rng.normal(size=(6, 8)) for _ in range(4)]
        full = annc.score(*map(Tensor, e)).data
        single = [annc.score(*(Tensor(x[i:i + 1]) for x in e)).data[0] for i in range(6)]
        np.testing.assert_allclose(full, single, rtol=1e-12)

    def test_dim_mismatch(self):
        annc = Annc(AnncConfig(n=8, f1_filters=2, f2_filters=2))
        with pytest.raises(ValueError):
            annc.score(*[Tensor(np.zeros((1, 7)))] * 4)


class TestAnnr:
    def test_output_dim_and_zero(self):
        annr = Annr(AnnrConfig(n=6))
        e = Tensor(np.ones((2, 6)))
        assert annr.predict(e, e, e).shape == (2, 6)
        _zero(annr)
        np.testing.assert_array_equal(annr.predict(e, e, e).data, 0)

    def test_f1_f2_independent(self):
        annr = Annr(AnnrConfig(n=4, hidden=3), dtype=np.float64)
        assert annr.f1[0] is not annr.f2[0]
        rng = np.random.default_rng(0)
        ea, eb, ec = (Tensor(rng.normal(size=(1, 4))) for _ in range(3))
        import morpho_analogy.nn.functional as F
        v_before = F.relu(F.affine(F.concat([ea, ec], axis=-1), *annr.f2)).data.copy()
        annr.f1[0].data += 1.0
        v_after = F.relu(F.affine(F.concat([ea, ec], axis=-1), *annr.f2)).data
        np.testing.assert_array_equal(v_before, v_after)

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            Annr(AnnrConfig(n=4)).predict(*[Tensor(np.zeros((1, 5)))] * 3)


class TestPersistence:
    @pytest.mark.parametrize("kind", ["cnn", "ae", "annc", "annr"])
    def test_reload_bitwise(self, kind, tmp_path):
        rng = np.random.default_rng(9)
        words = ["walked", "cat", "xyz"]
        if kind == "cnn":
            model = CnnEmbedder(VOCAB, CnnEmbedderConfig(char_emb_dim=5), rng=rng)
            run = lambda m: m.embed(words).data  # noqa: E731
        elif kind == "ae":
            model = AutoEncoder(VOCAB, AutoEncoderConfig(hidden_size=3), rng=rng)
            run = lambda m: m.encode(words).data  # noqa: E731
        elif kind == "annc":
            model = Annc(AnncConfig(n=5, f1_filters=3, f2_filters=2), rng=rng)
            x = [Tensor(rng.normal(size=(2, 5)).astype(np.float32)) for _ in range(4)]
            run = lambda m: m.score(*x).data  # noqa: E731
        else:
            model = Annr(AnnrConfig(n=5), rng=rng)
            x = [Tensor(rng.normal(size=(2, 5)).astype(np.float32)) for _ in range(3)]
            run = lambda m: m.predict(*x).data  # noqa: E731
        save_model(model, tmp_path / "m.mann")
        back = load_model(tmp_path / "m.mann")
        assert type(back) is type(model) and back.config == model.config
        np.testing.assert_array_equal(run(back), run(model))
