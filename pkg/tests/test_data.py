import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morpho_analogy.data import (AnalogyQuadruple, DataError, InflectionTriple, SplitSizes, Vocabulary,
                                 build_analogy_corpus, build_word_dataset, dedup_analogies, parse_inflection_file,
                                 read_split, split_corpus, write_split)


class TestParse:
    def test_lemma_features_form(self):
        out = parse_inflection_file("run\tV;PTCP;PRS\trunning\n")
        assert out == [InflectionTriple("run", "V;PTCP;PRS", "running")]

    def test_lemma_form_features(self):
        out = parse_inflection_file("run\trunning\tV;PTCP;PRS\n", column_order="lemma-form-features")
        assert out == [InflectionTriple("run", "V;PTCP;PRS", "running")]

    def test_empty(self):
        assert parse_inflection_file("") == []

    def test_malformed_line_lenient(self):
        out = parse_inflection_file("run\trunning\nwalk\tV;PST\twalked\n")
        assert len(out) == 1 and len(out.warnings) == 1
        assert out.warnings[0][0] == 1

    def test_malformed_line_strict(self):
        with pytest.raises(DataError):
            parse_inflection_file("run\trunning\n", strict=True)

    def test_bad_column_order(self):
        with pytest.raises(ValueError):
            parse_inflection_file("", column_order="form-lemma")

    def test_unicode_kept_verbatim(self):
        # composed and decomposed forms stay distinct
        out = parse_inflection_file("café\tN\tcafés\ncafé\tN\tcafés\n")
        assert out[0].lemma != out[1].lemma


class TestCorpus:
    def test_pairs_share_tag(self):
        triples = [InflectionTriple("run", "T", "running"), InflectionTriple("dance", "T", "dancing")]
        corpus = build_analogy_corpus(triples)
        assert AnalogyQuadruple("run", "running", "dance", "dancing", "T") in corpus

    def test_identity_form(self):
        corpus = build_analogy_corpus([InflectionTriple("run", "T", "running")])
        assert corpus == [AnalogyQuadruple("run", "running", "run", "running", "T")]

    def test_disjoint_tags(self):
        triples = [InflectionTriple("run", "T1", "running"), InflectionTriple("dance", "T2", "danced")]
        corpus = build_analogy_corpus(triples)
        assert all(q.a == q.c for q in corpus)
        assert not [q for q in corpus if q.a != q.c]

    def test_dedup_symmetric_pair(self):
        a = AnalogyQuadruple("run", "running", "dance", "dancing")
        b = AnalogyQuadruple("dance", "dancing", "run", "running")
        out = dedup_analogies([a, b])
        assert out == [b]  # "dance..." sorts first

    def test_dedup_keeps_identity(self):
        q = AnalogyQuadruple("run", "running", "run", "running")
        assert dedup_analogies([q]) == [q]
        assert dedup_analogies([]) == []

    @given(st.lists(st.tuples(*[st.sampled_from("abc")] * 4), max_size=30))
    @settings(max_examples=100, deadline=None)
    def test_dedup_idempotent(self, rows):
        corpus = [AnalogyQuadruple(*r) for r in rows]
        once = dedup_analogies(corpus)
        assert dedup_analogies(once) == once
        # each symmetric class keeps exactly one member
        classes = {min(q.words, (q.c, q.d, q.a, q.b)) for q in corpus}
        assert len(once) == len(classes)


def _corpus(n):
    return [AnalogyQuadruple(f"a{i}", f"b{i}", f"c{i}", f"d{i}") for i in range(n)]


class TestSplit:
    def test_sizes_and_disjoint(self):
        split = split_corpus(_corpus(60000), [], seed=7)
        assert (len(split.train), len(split.dev), len(split.test)) == (50000, 500, 5000)
        tr, dv, te = set(split.train), set(split.dev), set(split.test)
        assert not (tr & dv) and not (te & (tr | dv))

    def test_truncation(self):
        split = split_corpus(_corpus(600), [], seed=1)
        assert len(split.dev) == 500 and len(split.test) == 100 and split.train == []

    def test_too_small(self):
        with pytest.raises(DataError):
            split_corpus(_corpus(500), [], seed=1)

    def test_deterministic(self, tmp_path):
        c = _corpus(1200)
        sizes = SplitSizes(dev=100, test=200, train_max=500)
        meta1 = write_split(split_corpus(c, ["x"], 3, sizes), tmp_path / "one")
        meta2 = write_split(split_corpus(c, ["x"], 3, sizes), tmp_path / "two")
        assert meta1["checksums"] == meta2["checksums"]

    def test_manifest_round_trip(self, tmp_path):
        c = [AnalogyQuadruple(f"w{i}", f"w{i}s", f"v{i}", f"v{i}s", "PL") for i in range(300)]
        split = split_corpus(c, ["w1", "v2s"], 0, SplitSizes(dev=50, test=50, train_max=100))
        words = build_word_dataset([f"word{i}" for i in range(40)], 0, dev=5, test=5, min_words=10)
        write_split(split, tmp_path, words=words)
        back, back_words = read_split(tmp_path)
        assert back.train == split.train and back.dev == split.dev and back.test == split.test
        assert back.word_pool == split.word_pool
        assert back_words.vocab == words.vocab and back_words.train == words.train
        meta = json.loads((tmp_path / "split.json").read_text())
        assert meta["sizes"]["dev"] == 50


class TestWords:
    def test_disjoint_and_sizes(self):
        ds = build_word_dataset([f"w{i}" for i in range(45000)], seed=3)
        assert (len(ds.train), len(ds.dev), len(ds.test)) == (40000, 500, 500)
        assert not (set(ds.train) & set(ds.dev)) and not (set(ds.dev) & set(ds.test))

    def test_duplicates_removed(self):
        ds = build_word_dataset([f"w{i}" for i in range(1200)] * 2, seed=0, dev=100, test=100)
        assert len(ds.train) == 1000

    def test_too_few_words(self):
        with pytest.raises(DataError):
            build_word_dataset([f"w{i}" for i in range(999)], seed=0)


class TestVocabulary:
    def test_reserved_indices(self):
        v = Vocabulary.from_words(["ab"])
        assert [v.pad, v.unk, v.bow, v.eow] == [0, 1, 2, 3]
        assert v.encode("ab") == [4, 5]

    def test_unknown_char(self):
        v = Vocabulary.from_words(["ab"])
        assert v.encode("az") == [4, v.unk]

    def test_stable_under_reload(self):
        v = Vocabulary.from_words(["zebra", "ant"])
        assert Vocabulary.from_json(json.loads(json.dumps(v.to_json()))) == v

    @given(st.text(alphabet="abcdéπ", min_size=1, max_size=12))
    def test_round_trip(self, word):
        v = Vocabulary.from_words(["abcdéπ"])
        assert v.decode(v.encode(word)) == word
        for i in range(4, len(v)):
            assert v.encode(v.token(i)) == [i]

    def test_decode_stops_at_eow(self):
        v = Vocabulary.from_words(["ab"])
        assert v.decode([v.bow, 4, 5, v.eow, 4]) == "ab"


def test_quadruple_rejects_empty_word():
    with pytest.raises(DataError):
        AnalogyQuadruple("a", "", "c", "d")


def test_split_sampling_is_uniform_enough():
    # every quadruple of a small corpus should land in dev about dev/n of the time
    c = _corpus(20)
    hits = np.zeros(20)
    for seed in range(400):
        for q in split_corpus(c, [], seed, SplitSizes(dev=5, test=5, train_max=10)).dev:
            hits[int(q.a[1:])] += 1
    assert hits.min() > 50 and hits.max() < 150
