# tests/test_cube_complex.py

from collections import deque
from fractions import Fraction
from math import gcd

import numpy as np
import pytest

from scripts.aut_raag import compose, outer_equal
from scripts.cube_complex import (
    EDGE, VERTEX, CircleMotion, CubeComplex, Factor, MarkedComplex, ComplexAction,
    coordinate_action, generator_loops, geometric_representative, induced_outer_action,
    npc_check, product, realises, reverse_path, rotation_invariant, salvetti,
    shortest_path, square_boundary, subdivide, subdivide_action, torus_keys, trivial_action,
    verify_marking, walk,
)
from scripts.graph_core import SimplicialGraph, dimension
from scripts.pipelines import FLIP, PIPELINES, STAY, flip_all, invert_all, run_pipeline
from scripts.raag_errors import ActionError, ComplexError
from scripts.realisation import build_circle_action
from scripts.word_calculus import abelianize, parse, support
from tests.conftest import graphs_up_to, graphs_up_to_isomorphism, random_graph

Z2 = np.array([[0, 1], [1, 0]])


def _euler(X: CubeComplex) -> int:
    return sum((-1) ** c.dim for c in X.cells)


def _null_homotopic(X: CubeComplex, loop) -> bool:
    """往復の除去と正方形の反対側への置き換えだけで空の道に縮むか"""
    flips = {}
    for c in X.ids(2):
        boundary = square_boundary(X, c)
        for cycle in (boundary, reverse_path(boundary)):
            for i in range(4):
                turned = cycle[i:] + cycle[:i]
                flips.setdefault(tuple(turned[:2]), set()).add(tuple(reverse_path(turned[2:])))

    start = tuple(loop)
    seen = {start}
    queue = deque([start])
    while queue:
        path = queue.popleft()
        if not path:
            return True
        moves = []
        for i in range(len(path) - 1):
            (e, s), (f, t) = path[i], path[i + 1]
            if e == f and s == -t:
                moves.append(path[:i] + path[i + 2:])
            for other in flips.get(path[i:i + 2], ()):
                moves.append(path[:i] + other + path[i + 2:])
        for move in moves:
            if move not in seen:
                seen.add(move)
                queue.append(move)
    return False


def _random_loop(rng, X: CubeComplex, start: int):
    path, v = [], start
    for _ in range(rng.randint(1, 3)):
        steps = [(e, 1) for e in X.ids(1) if X.endpoints(e)[0] == v]
        steps += [(e, -1) for e in X.ids(1) if X.endpoints(e)[1] == v]
        step = rng.choice(steps)
        path.append(step)
        v = walk(X, v, [step])
    return path + shortest_path(X, v, start)


# --- 構成 ---

def test_circle_and_factor():
    X = CubeComplex.circle(3, "a")
    assert len(X.ids(0)) == 3 and len(X.ids(1)) == 3
    assert X.dimension == 1
    assert X.is_connected()
    assert X.cells[X.ids(1)[0]].lengths == (Fraction(1, 3),)

    with pytest.raises(ComplexError):
        Factor("a", 1)
    with pytest.raises(ComplexError):
        Factor("a", 2, 0)


def test_from_coordinates_closes_faces():
    factors = (Factor("a", 2), Factor("b", 2))
    X = CubeComplex.from_coordinates(factors, torus_keys(factors, [0, 1]))
    assert [len(X.ids(d)) for d in range(3)] == [4, 8, 4]
    assert _euler(X) == 0
    with pytest.raises(ComplexError):
        CubeComplex.from_coordinates(factors, [((EDGE, 2), (VERTEX, 0))])
    with pytest.raises(ComplexError):
        X.cell_id(((EDGE, 0), (EDGE, 5)))


def test_walk_and_shortest_path():
    X = CubeComplex.circle(4)
    start, end = X.cell_id(((VERTEX, 0),)), X.cell_id(((VERTEX, 2),))
    path = shortest_path(X, start, end)
    assert len(path) == 2
    assert walk(X, start, path) == end
    assert walk(X, end, reverse_path(path)) == start
    assert shortest_path(X, start, start) == []


# --- Salvetti 複体 ---

def test_salvetti_cell_counts(edge, free2):
    torus = salvetti(edge, 2).complex
    assert [len(torus.ids(d)) for d in range(3)] == [4, 8, 4]
    rose = salvetti(free2, 2).complex
    assert [len(rose.ids(d)) for d in range(2)] == [3, 4]
    assert _euler(rose) == -1


def test_salvetti_is_npc_with_graph_dimension():
    for g in graphs_up_to(4):
        M = salvetti(g, 2)
        report = npc_check(M.complex, jobs=1)
        assert report.ok, (str(g), report.witness)
        assert M.complex.dimension == dimension(g)


def test_salvetti_is_npc_on_five_vertices(rng):
    for _ in range(30):
        g = random_graph(rng, 5)
        M = salvetti(g, 2)
        assert npc_check(M.complex, jobs=1).ok, str(g)
        assert M.complex.dimension == dimension(g)


def test_salvetti_npc_in_parallel(square):
    assert npc_check(salvetti(square, 2).complex, jobs=2).ok


def test_cube_corner_is_not_npc():
    factors = tuple(Factor(name, 2) for name in "abc")
    zero, e0 = (VERTEX, 0), (EDGE, 0)
    keys = [(e0, e0, zero), (e0, zero, e0), (zero, e0, e0)]
    report = npc_check(CubeComplex.from_coordinates(factors, keys), jobs=1)
    assert not report
    assert report.witness["reason"] == "empty_simplex"
    assert report.witness["vertex"] == 0
    assert len(report.witness["simplex"]) == 3


def test_salvetti_marking(path3):
    M = verify_marking(salvetti(path3, 3))
    for v, loop in enumerate(generator_loops(M)):
        assert walk(M.complex, M.basepoint, loop) == M.basepoint
        assert M.path_word(loop) == parse(path3.labels[v], path3)
    X = M.complex
    assert len(M.marking()) == len(X.ids(1)) - len(X.ids(0)) + 1


def test_searched_loops_match_stored(edge):
    M = salvetti(edge, 2)
    bare = MarkedComplex(M.complex, M.graph, M.basepoint, M.edge_words)
    for v, loop in enumerate(generator_loops(bare)):
        assert bare.path_word(loop) == parse(edge.labels[v], edge)
    verify_marking(bare)


def test_broken_marking_is_rejected(edge):
    M = salvetti(edge, 2)
    words = dict(M.edge_words)
    e = next(iter(words))
    words[e] = words[e] * words[e]
    with pytest.raises(ComplexError):
        verify_marking(MarkedComplex(M.complex, M.graph, M.basepoint, words, M.loops))


def test_marked_complex_json(path3):
    M = salvetti(path3, 2)
    back = MarkedComplex.from_json(M.to_json())
    assert back == M
    assert dict(back.edge_words) == dict(M.edge_words)
    assert back.loops == M.loops


def test_marking_kills_exactly_the_null_homotopic_loops(rng):
    outcomes = set()
    for g in graphs_up_to_isomorphism(4):
        M = salvetti(g, 2)
        for _ in range(20):
            loop = _random_loop(rng, M.complex, M.basepoint)
            trivial = _null_homotopic(M.complex, loop)
            assert M.path_word(loop).is_identity() == trivial, (str(g), loop)
            outcomes.add(trivial)
    assert outcomes == {True, False}


# --- 積と細分 ---

def test_product_of_circles_is_the_torus(edge):
    a = salvetti(SimplicialGraph.discrete(["a"]), 2)
    b = salvetti(SimplicialGraph.discrete(["b"]), 2)
    M = verify_marking(product(a, b))
    assert M.complex == salvetti(edge, 2).complex
    assert M.graph.labels == ("a", "b")
    assert M.graph.adjacent(0, 1)


def test_subdivide_keeps_marking(edge):
    M = subdivide(salvetti(edge, 2), "a", 3)
    assert M.complex.factors[0].m == 6
    verify_marking(M)
    assert npc_check(M.complex, jobs=1).ok
    for v, loop in enumerate(generator_loops(M)):
        assert M.path_word(loop) == parse(edge.labels[v], edge)


def test_product_splits_abelianisation(free2):
    M = verify_marking(product(salvetti(free2, 2), salvetti(SimplicialGraph.path(["c", "d"]), 2)))
    X = M.complex
    assert M.graph.labels == ("a", "b", "c", "d")
    # 辺のラベルは自分の円周の生成元だけ
    for e, w in M.edge_words.items():
        assert support(w).labels == (X.factors[X.axis_factor(e)].name,)
    columns = np.column_stack([abelianize(w) for w in M.marking().values()])
    assert np.linalg.matrix_rank(columns) == 4
    for v, loop in enumerate(generator_loops(M)):
        sides = {X.axis_factor(e) < 2 for e, _ in loop}
        assert sides == {v < 2}


# --- 群作用 ---

def test_trivial_action(path3):
    X = salvetti(path3, 2).complex
    A = trivial_action(X)
    assert A.order == 1
    assert A.invariant_cells() == list(range(len(X.cells)))


def test_coordinate_action_validation(free2):
    circle = CubeComplex.circle(2)
    A = coordinate_action(circle, Z2, [(CircleMotion(),), (CircleMotion(1, 1),)])
    assert A.element_order(1) == 2
    assert A.invariant_cells() == []

    with pytest.raises(ActionError):
        coordinate_action(CubeComplex.circle(3), Z2, [(CircleMotion(),), (CircleMotion(1, 1),)])
    with pytest.raises(ActionError):
        coordinate_action(circle, Z2, [(CircleMotion(),), ()])

    rose = salvetti(free2, 2).complex
    with pytest.raises(ActionError):
        coordinate_action(rose, Z2, [(CircleMotion(),) * 2, (CircleMotion(1, 1), CircleMotion())])


def test_action_json_roundtrip(edge):
    M = salvetti(edge, 2)
    A = flip_all(M)
    back = ComplexAction.from_json(A.to_json(), M.complex)
    assert back.permutations == A.permutations
    assert back.motions == A.motions


def test_subdivided_action_still_realises(edge):
    M = salvetti(edge, 2)
    A = flip_all(M)
    fine = subdivide(M, "b", 2)
    assert realises(fine, subdivide_action(A, fine.complex, "b", 2), invert_all(edge))


# --- 誘導外部作用 ---

def test_flip_realises_inversion(edge, two_edges):
    for g in (edge, two_edges):
        M = salvetti(g, 2)
        assert realises(M, flip_all(M), invert_all(g))


def test_representative_is_basepoint_independent(edge):
    M = salvetti(edge, 3)
    A = flip_all(M)
    phi = invert_all(edge)
    reference = induced_outer_action(M, A, 1)
    for b in M.complex.ids(0):
        rep = geometric_representative(M, A, 1, b)
        assert rep.basepoint == b
        assert walk(M.complex, b, rep.path) == A.act(1, b)
        assert outer_equal(rep.automorphism, reference)
        assert outer_equal(rep.automorphism, phi.elements[1])


@pytest.mark.parametrize("name", sorted(PIPELINES))
def test_pipeline_representatives_are_basepoint_independent(name):
    result = run_pipeline(name, subdivision=2)
    M, A = result.marked, result.action
    for h in range(A.order):
        reference = induced_outer_action(M, A, h)
        for b in M.complex.ids(0):
            assert outer_equal(geometric_representative(M, A, h, b).automorphism, reference)


def _dihedral_on_circle():
    circle = build_circle_action(4, [CircleMotion(s, t) for s in (1, -1) for t in range(4)])
    M = salvetti(SimplicialGraph.discrete(["a"]), 4)
    return M, coordinate_action(M.complex, circle.table, circle.motions)


def _klein_on_torus():
    M = salvetti(SimplicialGraph.path(["a", "b"]), 2)
    table = np.array([[i ^ j for j in range(4)] for i in range(4)])
    motions = [(STAY, STAY), (FLIP, STAY), (STAY, FLIP), (FLIP, FLIP)]
    return M, coordinate_action(M.complex, table, motions)


@pytest.mark.parametrize("build", [_dihedral_on_circle, _klein_on_torus])
def test_induced_action_follows_the_table(build):
    M, A = build()
    induced = [induced_outer_action(M, A, h) for h in range(A.order)]
    for h in range(A.order):
        for g in range(A.order):
            assert outer_equal(induced[int(A.table[h, g])], compose(induced[h], induced[g]))


def test_realises_rejects_other_tables(edge):
    M = salvetti(edge, 2)
    with pytest.raises(ActionError):
        realises(M, trivial_action(M.complex), invert_all(edge))


# --- 円周作用の不変量 ---

@pytest.mark.parametrize("m", range(2, 9))
def test_rotation_invariant(m):
    for shift in range(1, m):
        order = m // gcd(m, shift)
        A = build_circle_action(m, [CircleMotion(1, shift * i) for i in range(order)])
        inv = rotation_invariant(A, 1)
        assert inv["kind"] == "rotation"
        assert inv["shift"] == shift
        assert inv["order"] == order
        assert inv["residue"] == (shift // gcd(m, shift)) % order
        assert gcd(inv["residue"], order) == 1


def test_flip_invariant():
    through_vertices = rotation_invariant(build_circle_action(4, [(1, 0), (-1, 0)]), 1)
    assert through_vertices == {"kind": "flip", "shift": 0,
                                "fixed_vertices": [0, 2], "fixed_edges": []}
    through_edges = rotation_invariant(build_circle_action(4, [(1, 0), (-1, 1)]), 1)
    assert through_edges["fixed_vertices"] == []
    assert through_edges["fixed_edges"] == [0, 2]


def test_rotation_invariant_needs_a_circle(edge):
    X = salvetti(edge, 2).complex
    with pytest.raises(ComplexError):
        rotation_invariant(trivial_action(X), 0)
