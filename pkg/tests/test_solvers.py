import itertools
import string
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morpho_analogy.data import Vocabulary
from morpho_analogy.models import Annc, AnncConfig, AutoEncoder, AutoEncoderConfig, CnnEmbedder, \
    CnnEmbedderConfig
from morpho_analogy.solvers import (AnncRetrievalSolver, CopyRun, Deadline, Delete, EditProgram, GenerationSolver,
                                    Insert, RetrievalSolver, SolverRanking, alea_candidates, bag_of, bag_target,
                                    cosine, exhaustive_shuffle_deletions, iter_programs, kolmo_ranking, ranked,
                                    retrieve_nearest, solve_3cosadd, solve_3cosmul, solve_alea, solve_kolmo,
                                    solve_parallelogram, solve_with_timeout)

from suites import AFFIX_SUITE

short = st.text(alphabet="abc", min_size=1, max_size=4)


class TestRanking:
    def test_ties_lexicographic(self):
        assert [w for w, _ in ranked(["b", "a", "c"], [1.0, 1.0, 2.0])] == ["c", "a", "b"]

    def test_nan_last(self):
        assert [w for w, _ in ranked(["a", "b"], [float("nan"), -5.0])] == ["b", "a"]

    def test_rank_of(self):
        r = SolverRanking(("a", "b", "c"), ranked(["x", "y"], [0.2, 0.9]))
        assert r.rank_of("x") == 2 and r.rank_of("z") is None and r.top == "y"


class TestBag:
    def test_cat_animal(self):
        assert bag_target("cat", "cats", "animal") == bag_of("aailmns")

    def test_a_equals_b(self):
        assert bag_target("ab", "ab", "xyz") == bag_of("xyz")

    def test_saturates(self):
        assert bag_target("xq", "x", "c") == bag_of("c")


class TestAlea:
    def test_cat_animals(self):
        r = solve_alea("cat", "cats", "animal", trials=1000, seed=0)
        assert "animals" in r.words
        assert all(bag_of(w) == bag_of("aailmns") for w in r.words)

    def test_walk_talked_modal(self):
        for seed in range(3):
            assert solve_alea("walk", "walked", "talk", trials=1000, seed=seed).top == "talked"

    def test_a_b_a_contains_b(self):
        for a, b in [("ab", "abc"), ("cat", "cats"), ("do", "undo")]:
            assert b in solve_alea(a, b, a, trials=2000, seed=1).words

    def test_a_b_a_single_letter_only_b(self):
        assert solve_alea("aa", "aaa", "aa", trials=200).words == ["aaa"]

    def test_a_b_a_may_yield_other_words(self):
        # shuffling lets letters of B cross over the deleted copy of A
        assert exhaustive_shuffle_deletions("a", "ab", "a") == {"ab", "ba"}

    def test_no_solution_flag(self):
        r = solve_alea("undo", "do", "untie", trials=200)
        assert r.words == [] and "no_solution" in r.flags

    def test_seed_stable(self):
        a = solve_alea("walk", "walked", "talk", trials=500, seed=4)
        b = solve_alea("walk", "walked", "talk", trials=500, seed=4)
        assert a.candidates == b.candidates

    def test_trials_must_be_positive(self):
        with pytest.raises(ValueError):
            solve_alea("a", "b", "c", trials=0)

    @given(short, short, short, st.integers(0, 10_000))
    @settings(max_examples=150, deadline=None)
    def test_sound_and_within_exhaustive(self, a, b, c, seed):
        got = set(alea_candidates(a, b, c, 300, np.random.default_rng(seed)))
        target = bag_target(a, b, c)
        assert all(bag_of(w) == target for w in got)
        assert got <= exhaustive_shuffle_deletions(a, b, c)

    def test_complete_on_short_words(self):
        rng = np.random.default_rng(0)
        for _ in range(40):
            a, b, c = ("".join(rng.choice(list("ab"), size=rng.integers(1, 4))) for _ in range(3))
            b = a + b  # keep A inside B so the bag filter leaves something
            exact = exhaustive_shuffle_deletions(a, b, c)
            assert set(alea_candidates(a, b, c, 10_000, rng)) == exact


def _brute_min_cost(a, b, limit=60):
    """Cheapest cost over all op sequences mapping a to b, by plain depth-first search."""
    best = [limit + 1]

    def go(i, j, cost):
        if cost >= best[0]:
            return
        if i == len(a) and j == len(b):
            best[0] = cost
            return
        for n in range(1, len(a) - i + 1):
            if a[i:i + n] == b[j:j + n]:
                go(i + n, j + n, cost + CopyRun(n).bits)
            go(i + n, j, cost + Delete(n).bits)
        for n in range(1, len(b) - j + 1):
            go(i, j + n, cost + Insert(b[j:j + n]).bits)
    go(0, 0, 0)
    return best[0]


class TestKolmo:
    def test_walk_talked(self):
        r = solve_kolmo("walk", "walked", "talk")
        assert r.word == "talked"
        assert r.program.ops == (CopyRun(4), Insert("ed"))
        assert r.anchored.ops == (CopyRun(4), Insert("ed"))

    def test_undo_untie(self):
        r = solve_kolmo("undo", "do", "untie")
        assert r.word == "tie"
        assert r.program.ops == (Delete(2), CopyRun(2))
        assert r.anchored.ops == (Delete(2), CopyRun(3))

    def test_cat_animals(self):
        assert solve_kolmo("cat", "cats", "animal").word == "animals"

    @given(short, short)
    @settings(max_examples=60, deadline=None)
    def test_a_b_a_gives_b(self, a, b):
        assert solve_kolmo(a, b, a).word == b

    def test_bit_costs(self):
        assert CopyRun(1).bits == 3 and CopyRun(4).bits == 5
        assert Insert("ed").bits == 19 and Delete(3).bits == 5
        assert EditProgram((CopyRun(4), Insert("ed"))).complexity == 24

    def test_apply_rejects_bad_length(self):
        with pytest.raises(ValueError):
            EditProgram((CopyRun(5),)).apply("abc")
        with pytest.raises(ValueError):
            EditProgram((CopyRun(2),)).apply("abc")

    @given(st.text(alphabet="ab", max_size=4), st.text(alphabet="ab", max_size=4))
    @settings(max_examples=80, deadline=None)
    def test_minimal_and_replays(self, a, b):
        progs = list(itertools.islice(iter_programs(a, b, budget=None), 5))
        assert progs
        assert progs[0].complexity == _brute_min_cost(a, b)
        costs = [p.complexity for p in progs]
        assert costs == sorted(costs)
        for p in progs:
            assert p.apply(a) == b

    def test_affix_suite(self):
        for a, b, c, d in AFFIX_SUITE:
            assert solve_kolmo(a, b, c).word == d, (a, b, c)

    def test_ranking_scores_descend(self):
        r = kolmo_ranking("walk", "walked", "talk", k=5)
        scores = [s for _, s in r.candidates]
        assert scores == sorted(scores, reverse=True) and r.top == "talked"

    def test_budget_exhausted(self):
        r = solve_kolmo("abcdefgh", "hgfedcba", "abcdefgh", budget=1)
        assert not r.solved


class TestTimeout:
    def test_fast_instance(self):
        r = solve_with_timeout(kolmo_ranking, ("walk", "walked", "talk"), limit=10)
        assert not r.timed_out and r.elapsed > 0

    def test_zero_limit(self):
        r = solve_with_timeout(solve_alea, ("a", "b", "c"), limit=0)
        assert r.timed_out and r.candidates == []

    def test_adversarial_repeated_letters(self):
        eq = ("a" * 30 + "b", "b" + "a" * 31, "a" * 29 + "b")
        t = time.monotonic()
        r = solve_with_timeout(kolmo_ranking, eq, limit=0.2, budget=None)
        assert r.timed_out
        assert time.monotonic() - t < 2.0

    def test_deadline_none_never_expires(self):
        assert not Deadline(None).expired()


def _oracle_cos(u, v):
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    return 0.0 if nu == 0 or nv == 0 else float(u @ v / (nu * nv))


class TestVector:
    def test_parallelogram(self):
        np.testing.assert_array_equal(solve_parallelogram([0, 1], [1, 1], [2, 0]), [3, 0])
        with pytest.raises(ValueError):
            solve_parallelogram([0, 1], [1], [2, 0])

    @given(st.lists(st.floats(-100, 100), min_size=3, max_size=3), st.lists(st.floats(-100, 100), min_size=3,
                                                                              max_size=3))
    def test_parallelogram_identities(self, a, c):
        a, c = np.array(a), np.array(c)
        np.testing.assert_array_equal(solve_parallelogram(a, a, c), c)
        np.testing.assert_array_equal(solve_parallelogram(a, c, a), c)

    def test_3cosadd_example(self):
        r = solve_3cosadd([1, 0], [0, 1], [1, 0], ["x", "y"], [[0, 1], [1, 0]])
        assert r.words == ["x", "y"]

    def test_identical_candidates_lexicographic(self):
        r = solve_3cosadd([1, 0], [0, 1], [1, 0], ["b", "c", "a"], [[1, 1]] * 3)
        assert r.words == ["a", "b", "c"]

    def test_3cosmul_prefers_orthogonal_to_a(self):
        e_a, e_b, e_c = np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0.9, 0.1])
        r = solve_3cosmul(e_a, e_b, e_c, ["like_a", "good"], [[1.0, 0, 0], [0, 1.0, 0.1]])
        assert r.top == "good"
        assert r.candidates[0][1] > 100 and r.candidates[1][1] == pytest.approx(0.0)

    def test_single_candidate(self):
        assert solve_3cosmul([1, 0], [0, 1], [1, 1], ["only"], [[-1, 0]]).words == ["only"]

    def test_zero_norm_is_orthogonal(self):
        np.testing.assert_array_equal(cosine([0, 0], [[1, 0], [0, 0]]), [0, 0])

    def test_nearest(self):
        emb = np.eye(3)
        r = retrieve_nearest([0, 1, 0], ["a", "b", "c"], emb, k=10)
        assert r.top == "b" and len(r.candidates) == 3
        with pytest.raises(ValueError):
            retrieve_nearest([0, 1, 0], [], np.zeros((0, 3)))

    @given(st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_formula_oracle(self, seed):
        rng = np.random.default_rng(seed)
        e_a, e_b, e_c = rng.normal(size=(3, 4))
        emb = rng.normal(size=(5, 4))
        words = list("vwxyz")
        x = e_b - e_a + e_c
        add = [_oracle_cos(x, d) for d in emb]
        mul = [_oracle_cos(d, e_b) * _oracle_cos(d, e_c) / (_oracle_cos(d, e_a) + 0.001) for d in emb]
        for got, want in ((solve_3cosadd(e_a, e_b, e_c, words, emb), add),
                          (solve_3cosmul(e_a, e_b, e_c, words, emb), mul)):
            order = sorted(range(5), key=lambda i: (-want[i], words[i]))
            assert got.words == [words[i] for i in order]
            np.testing.assert_allclose([s for _, s in got.candidates], [want[i] for i in order], rtol=1e-9)


WORDS = ["walk", "walked", "talk", "talked", "jump", "jumped"]


class TestNeural:
    def setup_method(self):
        self.vocab = Vocabulary.from_words(WORDS)
        self.cnn = CnnEmbedder(self.vocab, CnnEmbedderConfig(char_emb_dim=4, filters_per_width=2),
                               rng=np.random.default_rng(0), dtype=np.float64)

    def test_retrieval_matches_vector_solver(self):
        solver = RetrievalSolver(self.cnn, WORDS, "3cosmul")
        emb = self.cnn.embed(WORDS).data
        e = self.cnn.embed(["walk", "walked", "talk"]).data
        want = solve_3cosmul(*e, WORDS, emb)
        assert solver("walk", "walked", "talk").candidates == want.candidates

    def test_annc_scores_bounded_and_exhaustive(self):
        annc = Annc(AnncConfig(n=10, f1_filters=3, f2_filters=2), rng=np.random.default_rng(1), dtype=np.float64)
        full = AnncRetrievalSolver(self.cnn, annc, WORDS, k=None)("walk", "walked", "talk")
        assert all(0 < s < 1 for _, s in full.candidates)
        emb = self.cnn.embed(WORDS + ["walk", "walked", "talk"]).data
        brute = [float(annc.score(*(emb[None, 6 + j] for j in range(3)), emb[None, i]).data[0])
                 for i in range(6)]
        order = sorted(range(6), key=lambda i: (-brute[i], WORDS[i]))
        assert full.words == [WORDS[i] for i in order]
        total = AnncRetrievalSolver(self.cnn, annc, WORDS, prefilter_k=len(WORDS))("walk", "walked", "talk")
        assert total.top == full.top
        short = AnncRetrievalSolver(self.cnn, annc, WORDS, prefilter_k=2, k=None)("walk", "walked", "talk")
        assert len(short.candidates) == 2

    def test_generation_deterministic_and_parallel_identity(self):
        ae = AutoEncoder(self.vocab, AutoEncoderConfig(hidden_size=3), rng=np.random.default_rng(2),
                         dtype=np.float64)
        gen = GenerationSolver(ae, "parallel")
        e_x = gen.targets([("walk", "talk", "walk")])[0]
        np.testing.assert_allclose(e_x, ae.encode(["talk"]).data[0], atol=1e-12)
        assert gen("walk", "walked", "talk").candidates == gen("walk", "walked", "talk").candidates

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            RetrievalSolver(self.cnn, WORDS, "nearest")
        with pytest.raises(ValueError):
            RetrievalSolver(self.cnn, WORDS, "annr")


def test_alphabet_of_suite_is_plain():
    assert all(set("".join(q)) <= set(string.ascii_lowercase) for q in AFFIX_SUITE)
