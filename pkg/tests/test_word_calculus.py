# tests/test_word_calculus.py

import logging
from collections import defaultdict
from itertools import product

import numpy as np
import pytest

from scripts.graph_core import all_subsets, star
from scripts.raag_errors import WordFormatError
from scripts.word_calculus import (
    Letter, NormalForm, Word, abelianize, ball, commutator, conjugate, conjugates_into,
    cyclically_reduce, identity, in_special_subgroup, is_conjugate, is_cyclically_reduced, parse,
    reduce, support,
)
from tests.conftest import graphs_up_to, graphs_up_to_isomorphism, random_graph


def _words(graph, max_len):
    letters = [Letter(v, s) for v in range(graph.vertex_count) for s in (1, -1)]
    for k in range(max_len + 1):
        for combo in product(letters, repeat=k):
            yield Word(graph, combo)


def _random_word(rng, graph, length):
    return Word(graph, tuple(Letter(rng.randrange(graph.vertex_count), rng.choice((1, -1)))
                             for _ in range(length)))


def _scramble(rng, w: Word) -> Word:
    """群元を変えずに、相殺対の挿入と可換な隣接文字の交換を繰り返す"""
    letters = list(w.letters)
    graph = w.graph
    for _ in range(rng.randint(0, 6)):
        if rng.random() < 0.4:
            letter = Letter(rng.randrange(graph.vertex_count), rng.choice((1, -1)))
            i = rng.randint(0, len(letters))
            letters[i:i] = [letter, letter.inverse()]
        elif len(letters) > 1:
            i = rng.randrange(len(letters) - 1)
            u, v = letters[i].vertex, letters[i + 1].vertex
            if u == v or graph.adjacent(u, v):
                letters[i], letters[i + 1] = letters[i + 1], letters[i]
    return Word(graph, tuple(letters))


def _random_reduction(rng, w: Word) -> Word:
    """適用できる相殺と可換な隣接文字の交換から毎回1つを乱択し、相殺が尽きるまで続ける"""
    graph = w.graph
    letters = list(w.letters)

    def commutes(u, v):
        return u == v or graph.adjacent(u, v)

    while True:
        cancels = [(i, j) for i in range(len(letters)) for j in range(i + 1, len(letters))
                   if letters[j] == letters[i].inverse()
                   and all(commutes(letters[k].vertex, letters[i].vertex) for k in range(i + 1, j))]
        if not cancels:
            return Word(graph, tuple(letters))
        swaps = [i for i in range(len(letters) - 1)
                 if letters[i].vertex != letters[i + 1].vertex
                 and graph.adjacent(letters[i].vertex, letters[i + 1].vertex)]
        if swaps and rng.random() < 0.5:
            i = rng.choice(swaps)
            letters[i], letters[i + 1] = letters[i + 1], letters[i]
            continue
        i, j = rng.choice(cancels)
        del letters[j]
        del letters[i]


def _bounded_conjugates(w: Word, conjugators) -> frozenset:
    return frozenset(conjugate(w, g).letters for g in conjugators)


class TestParsing:
    def test_tokens(self, edge):
        w = Word.parse("a b^-1 a⁻¹", edge)
        assert w.letters == (Letter(0, 1), Letter(1, -1), Letter(0, -1))
        assert str(w) == "a b^-1 a^-1"

    def test_empty_string_is_identity(self, edge):
        assert parse("", edge) == identity(edge)

    def test_unknown_generator(self, edge):
        with pytest.raises(WordFormatError):
            Word.parse("a z", edge)


class TestReduce:
    def test_commuting_cancellation(self, edge):
        assert str(parse("a b a^-1", edge)) == "b"

    def test_free_group_keeps_word(self, free2):
        assert str(parse("a b a^-1", free2)) == "a b a^-1"

    def test_swap_canonicalisation(self, edge):
        assert str(parse("b a", edge)) == "a b"

    def test_idempotent(self, path3):
        nf = parse("c b a c^-1", path3)
        assert reduce(nf) is nf
        assert isinstance(nf, NormalForm)

    def test_confluence(self, rng):
        for _ in range(20):
            g = random_graph(rng, rng.randint(1, 5))
            for _ in range(50):
                w = _random_word(rng, g, rng.randint(0, 12))
                expected = reduce(w)
                for _ in range(2):
                    done = _random_reduction(rng, _scramble(rng, w))
                    assert len(done) == len(expected)
                    assert reduce(done) == expected

    def test_homomorphism_compatible(self, rng):
        g = random_graph(rng, 4)
        for _ in range(100):
            u = _random_word(rng, g, rng.randint(0, 6))
            v = _random_word(rng, g, rng.randint(0, 6))
            assert reduce(u * v) == reduce(Word.__mul__(reduce(u), reduce(v)))

    def test_group_operations(self, free2):
        a, b = parse("a", free2), parse("b", free2)
        assert str(commutator(a, b)) == "a^-1 b^-1 a b"
        assert str(conjugate(b, a)) == "a^-1 b a"
        assert (a * b) * (a * b).inverse() == identity(free2)
        assert str(a ** -2) == "a^-1 a^-1"


class TestCyclicReduction:
    def test_free_conjugate(self, free2):
        y, core = cyclically_reduce(Word.parse("a b a^-1", free2))
        assert str(y) == "a^-1"
        assert str(core) == "b"
        assert conjugate(core, y) == parse("a b a^-1", free2)

    def test_already_reduced(self, free2):
        y, core = cyclically_reduce(Word.parse("a b", free2))
        assert y.is_identity() and str(core) == "a b"
        assert is_cyclically_reduced(Word.parse("a b", free2))

    def test_trivial(self, free2):
        y, core = cyclically_reduce(Word.parse("a a^-1", free2))
        assert y.is_identity() and core.is_identity()

    def test_decomposition_holds(self, rng):
        for _ in range(200):
            g = random_graph(rng, rng.randint(1, 5))
            w = _random_word(rng, g, rng.randint(0, 10))
            y, core = cyclically_reduce(w)
            assert conjugate(core, y) == reduce(w)
            y2, core2 = cyclically_reduce(core)
            assert y2.is_identity() and core2 == core

    def test_core_of_conjugated_special_element(self, rng):
        for _ in range(100):
            g = random_graph(rng, rng.randint(2, 5))
            sigma = [s for s in all_subsets(g) if s][rng.randrange((1 << g.vertex_count) - 1)]
            members = list(sigma)
            u = Word(g, tuple(Letter(rng.choice(members), rng.choice((1, -1)))
                              for _ in range(rng.randint(1, 6))))
            w = conjugate(u, _random_word(rng, g, rng.randint(0, 5)))
            _, core = cyclically_reduce(w)
            assert support(core) <= sigma


class TestConjugacy:
    def test_free_rotation(self, free2):
        g = is_conjugate(Word.parse("a b", free2), Word.parse("b a", free2))
        assert str(g) == "a"

    def test_different_abelianisation(self, free2):
        assert is_conjugate(Word.parse("a b", free2), Word.parse("a b^-1", free2)) is None

    def test_equal_elements(self, edge):
        g = is_conjugate(Word.parse("a b", edge), Word.parse("b a", edge))
        assert g is not None and g.is_identity()

    def test_matches_brute_force(self):
        for graph in graphs_up_to(3):
            conjugators = ball(graph, 4)
            words = [reduce(w) for w in _words(graph, 2)]
            for w1 in words:
                orbit = {conjugate(w1, g).letters for g in conjugators}
                for w2 in words:
                    g = is_conjugate(w1, w2)
                    assert (g is not None) == (w2.letters in orbit), (graph, w1, w2)
                    if g is not None:
                        assert conjugate(w1, g) == w2

    @pytest.mark.slow
    def test_matches_brute_force_up_to_length_five(self):
        # 長さ 6 以下の共役元は長さ 3 以下の2つの積なので、
        # g⁻¹·w1·g = w2 (|g| ≤ 6) ⇔ 半径 3 の共役の集合が交わる
        for graph in graphs_up_to(3):
            near = ball(graph, 3)
            buckets = defaultdict(list)
            for w in ball(graph, 5):
                buckets[tuple(abelianize(w))].append((w, _bounded_conjugates(w, near)))
            for members in buckets.values():
                for i, (w1, near1) in enumerate(members):
                    for w2, near2 in members[i:]:
                        g = is_conjugate(w1, w2)
                        assert (g is not None) == bool(near1 & near2), (graph, w1, w2)
                        if g is not None:
                            assert conjugate(w1, g) == w2

    @pytest.mark.slow
    def test_matches_brute_force_on_four_vertices(self, rng):
        for _ in range(10):
            graph = random_graph(rng, 4)
            near = ball(graph, 3)
            for _ in range(25):
                w1 = reduce(_random_word(rng, graph, rng.randint(0, 5)))
                shuffled = list(w1.letters)
                rng.shuffle(shuffled)
                partners = [
                    conjugate(w1, _random_word(rng, graph, rng.randint(0, 6))),
                    reduce(Word(graph, tuple(shuffled))),
                    reduce(_random_word(rng, graph, rng.randint(0, 5))),
                ]
                near1 = _bounded_conjugates(w1, near)
                for w2 in partners:
                    g = is_conjugate(w1, w2)
                    assert (g is not None) == bool(near1 & _bounded_conjugates(w2, near)), \
                        (graph, w1, w2)
                    if g is not None:
                        assert conjugate(w1, g) == w2

    def test_long_core_is_logged(self, free2, caplog):
        w = Word.parse(" ".join(["a b"] * 9), free2)
        with caplog.at_level(logging.WARNING, logger="scripts.word_calculus"):
            assert is_conjugate(w, w).is_identity()
        assert "core_length" in caplog.text

    def test_witness_on_long_words(self, rng):
        for _ in range(100):
            graph = random_graph(rng, 4)
            w1 = _random_word(rng, graph, rng.randint(0, 8))
            w2 = conjugate(w1, _random_word(rng, graph, rng.randint(0, 6)))
            g = is_conjugate(w1, w2)
            assert g is not None
            assert conjugate(w1, g) == w2


class TestSupport:
    def test_support_after_reduction(self, edge):
        assert support(Word.parse("a b a^-1", edge)).labels == ("b",)

    def test_special_subgroup(self, free2):
        assert not in_special_subgroup(Word.parse("a b", free2), free2.subset(["a"]))

    def test_abelianize(self, free2):
        assert np.array_equal(abelianize(Word.parse("a b a b^-1", free2)), [2, 0])


@pytest.mark.slow
def test_normaliser_law():
    for graph in graphs_up_to_isomorphism(4):
        words = ball(graph, 4)
        for delta in all_subsets(graph):
            st = star(delta)
            for g in words:
                assert conjugates_into(g, delta, delta) == (support(g) <= st), (graph, delta, g)


def test_ball_counts(free2, edge):
    # F₂: 1 + 4 + 12
    assert len(ball(free2, 2)) == 17
    # Z²: 格子点 |x| + |y| ≤ 2
    assert len(ball(edge, 2)) == 13
