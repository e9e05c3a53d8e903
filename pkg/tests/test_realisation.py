# tests/test_realisation.py

from math import gcd

import numpy as np
import pytest

from scripts.cube_complex import (
    CircleMotion, coordinate_action, generator_loops, npc_check, realises, salvetti,
    square_boundary, verify_marking, walk,
)
from scripts.graph_core import SimplicialGraph
from scripts.path_utils import load_json
from scripts.pipelines import (
    PIPELINES, edge_product, flip_all, invert_all, load_bundle, path_fault_correction,
    path_gluing, run_pipeline, standard_gluing, two_edge_wedge,
)
from scripts.raag_errors import (
    ActionError, IncompatibleActions, NoFixedPoint, NonIsometricGluing, NotAJoin, ValidityError,
)
from scripts.realisation import (
    GluingSpec, align_circles, build_circle_action, compute_fault, correct_gluing, fixed_point,
    glue_actions, glue_marked, point_action, product_realisation, wedge_realisation,
)
from scripts.word_calculus import (
    Word, abelianize, cyclically_reduce, is_conjugate, parse, reduce, support,
)

Z2 = np.array([[0, 1], [1, 0]])


def _circle(label, m=2):
    return salvetti(SimplicialGraph.discrete([label]), m)


# --- 円周の整列 ---

def test_align_circles_subdivides_to_common_length():
    left = build_circle_action(2, [(1, 0), (1, 1)])
    right = build_circle_action(4, [(1, 0), (1, 2)])
    alignment = align_circles(left, right)
    assert alignment.m == 4
    assert alignment.isometry == CircleMotion(1, 0)


def test_align_circles_uses_a_flip_for_opposite_rotations():
    left = build_circle_action(4, [(1, 0), (1, 1), (1, 2), (1, 3)])
    right = build_circle_action(4, [(1, 0), (1, 3), (1, 2), (1, 1)])
    alignment = align_circles(left, right, flags={"same_rotation_number": False})
    assert alignment.isometry.sign == -1


def test_align_circles_on_compatible_rotations():
    for n in (2, 3, 4):
        sizes = [m for m in range(n, 9, n)]
        for u in [u for u in range(1, n) if gcd(u, n) == 1]:
            for m1 in sizes:
                for m2 in sizes:
                    left = build_circle_action(m1, [(1, (m1 // n) * u * i) for i in range(n)])
                    right = build_circle_action(m2, [(1, (m2 // n) * u * i) for i in range(n)])
                    alignment = align_circles(left, right)
                    assert alignment.m % m1 == 0 and alignment.m % m2 == 0
                    assert alignment.isometry == CircleMotion(1, 0)


def test_align_circles_rejects_different_residues():
    moving = build_circle_action(2, [(1, 0), (1, 1)])
    still = build_circle_action(2, [(1, 0), (1, 0)], table=Z2)
    with pytest.raises(IncompatibleActions):
        align_circles(moving, still)


# --- 固定点 ---

def test_fixed_point_on_a_vertex():
    M = _circle("a")
    A = flip_all(M)
    same, _, v = fixed_point(M, A)
    assert same is M
    assert all(A.act(h, v) == v for h in range(A.order))


def test_fixed_point_after_subdivision():
    M = _circle("a")
    A = coordinate_action(M.complex, Z2, [(CircleMotion(),), (CircleMotion(-1, 1),)])
    assert not [c for c in A.invariant_cells() if M.complex.cells[c].dim == 0]
    fine, B, v = fixed_point(M, A)
    assert fine.complex.factors[0].m == 4
    assert B.act(1, v) == v
    verify_marking(fine)


def test_fixed_point_missing_for_rotation():
    M = _circle("a")
    A = coordinate_action(M.complex, Z2, [(CircleMotion(),), (CircleMotion(1, 1),)])
    with pytest.raises(NoFixedPoint):
        fixed_point(M, A)


def test_point_action():
    A = point_action(Z2)
    assert A.order == 2
    assert A.invariant_cells() == [0]


# --- ウェッジと積 ---

def test_wedge_of_two_tori(two_edges):
    result = two_edge_wedge(two_edges, 2)
    report = result.report
    assert report["ok"]
    assert report["realises"]
    assert report["npc"]["ok"]
    assert report["dimension"] == report["graph_dimension"] == 2
    assert report["pieces"] == 2
    verify_marking(result.marked)


def test_wedge_with_free_circle(edge):
    target = SimplicialGraph.from_edges("abc", [("a", "b")])
    M = salvetti(edge, 2)
    phi = invert_all(target)
    wedge, action = wedge_realisation([(M, flip_all(M))], free_part={"c": [1, -1]},
                                      target=target, phi=phi)
    assert wedge.graph.labels == ("a", "b", "c")
    assert realises(wedge, action, phi)
    assert npc_check(wedge.complex, jobs=1).ok


def test_wedge_rejects_joined_pieces(edge):
    a, b = _circle("a"), _circle("b")
    with pytest.raises(ValidityError):
        wedge_realisation([(a, flip_all(a)), (b, flip_all(b))], target=edge)
    with pytest.raises(ValidityError):
        wedge_realisation([])


def test_single_piece_wedge_needs_a_fixed_point():
    M = _circle("a")
    rotation = coordinate_action(M.complex, Z2, [(CircleMotion(1, 0),), (CircleMotion(1, 1),)])
    with pytest.raises(NoFixedPoint):
        wedge_realisation([(M, rotation)])


def test_product_realisation(edge):
    a, b = _circle("a"), _circle("b")
    phi = invert_all(edge)
    M, A = product_realisation((a, flip_all(a)), (b, flip_all(b)), phi, edge)
    assert M.complex.dimension == 2
    assert realises(M, A, phi)


def test_edge_product_pipeline(edge, path3):
    assert edge_product(edge, 2).report["ok"]
    cone = edge_product(path3, 2).report
    assert cone["ok"]
    assert cone["dimension"] == 2


def test_product_needs_a_join(two_edges):
    with pytest.raises(NotAJoin):
        edge_product(two_edges, 2)


# --- 貼り合わせと fault ---

def test_aligned_gluing_has_no_fault(path3):
    glued = standard_gluing(path3, ["a", "b"], ["b", "c"], offset=0, subdivision=2)
    assert glued.fault.is_trivial()
    assert realises(glued.gluing.marked, glued.action, glued.phi)
    assert glued.gluing.marked.graph.labels == ("a", "b", "c")


def test_shifted_gluing_has_central_fault(path3):
    glued = standard_gluing(path3, ["a", "b"], ["b", "c"], offset=1, subdivision=2)
    fault = glued.fault
    assert not fault.is_trivial()
    assert fault.within_centre
    assert fault.words[1] in (parse("b", path3), parse("b^-1", path3))
    assert fault.to_json()["common"] == ["b"]


def test_fault_correction_pipeline(path3):
    result = path_fault_correction(path3, offset=1, subdivision=2)
    report = result.report
    assert report["ok"]
    assert report["offsets_before"] == {"b": 1}
    assert report["offsets_after"] == {"b": 0}
    assert report["fault_before"]["faults"]["1"] in ("b", "b^-1")
    assert set(report["fault_after"]["faults"].values()) == {""}


def test_uncorrected_gluing_reports_fault(path3):
    report = path_gluing(path3, offset=1, subdivision=2).report
    assert report["offsets"] == {"b": 1}
    assert report["fault"]["within_centre"]


@pytest.mark.parametrize("offset", [0, 1])
def test_gluing_keeps_both_markings(path3, offset):
    glued = standard_gluing(path3, ["a", "b"], ["b", "c"], offset=offset, subdivision=2).gluing
    M, left, right = glued.marked, glued.spec.left, glued.spec.right
    verify_marking(M)
    for c in left.complex.ids(1):
        assert M.label(c) == reduce(left.label(c).transport(M.graph))
    for name, loop in zip(right.graph.labels, generator_loops(right)):
        mapped = [(glued.right_map[e], s) for e, s in loop]
        assert walk(M.complex, glued.q, mapped) == glued.q
        assert is_conjugate(M.path_word(mapped), parse(name, M.graph)) is not None


def test_glued_squares_read_commutators(path3):
    M = standard_gluing(path3, ["a", "b"], ["b", "c"], offset=0, subdivision=2).gluing.marked
    free = SimplicialGraph.discrete(["a", "b", "c"])
    squares = M.complex.ids(2)
    assert len(squares) == 8
    kinds = set()
    for c in squares:
        word = Word(free, ())
        for e, s in square_boundary(M.complex, c):
            w = M.label(e).transport(free)
            word = word * (w if s > 0 else w.inverse())
        _, core = cyclically_reduce(word)
        if core.is_identity():
            kinds.add("empty")
            continue
        assert len(core) == 4
        assert support(core).labels in (("a", "b"), ("b", "c"))
        assert not abelianize(core).any()
        kinds.add("commutator")
    assert kinds == {"empty", "commutator"}


def test_correct_gluing_is_idempotent(path3):
    aligned = standard_gluing(path3, ["a", "b"], ["b", "c"], offset=0, subdivision=2)
    same, _ = correct_gluing(aligned.gluing, aligned.left_action, aligned.right_action,
                             aligned.phi, aligned.fault)
    assert same is aligned.gluing

    shifted = standard_gluing(path3, ["a", "b"], ["b", "c"], offset=1, subdivision=2)
    corrected, action = correct_gluing(shifted.gluing, shifted.left_action, shifted.right_action,
                                       shifted.phi, shifted.fault)
    assert dict(corrected.spec.offsets) == {"b": 0}
    fault = compute_fault(corrected, action, shifted.phi)
    assert fault.is_trivial()
    again, _ = correct_gluing(corrected, shifted.left_action, shifted.right_action,
                              shifted.phi, fault)
    assert again is corrected
    assert dict(again.spec.offsets) == {"b": 0}


def test_gluing_needs_matching_circles(path3):
    left = salvetti(path3.induced(path3.subset("ab")), 2)
    right = salvetti(path3.induced(path3.subset("bc")), 4)
    with pytest.raises(NonIsometricGluing):
        GluingSpec.along_common(path3, left, right)
    same = salvetti(path3.induced(path3.subset("bc")), 2)
    with pytest.raises(NonIsometricGluing):
        GluingSpec.along_common(path3, left, same, {"a": 1})


def test_gluing_covers_the_graph(path4):
    with pytest.raises(ValidityError):
        standard_gluing(path4, ["a", "b"], ["b", "c"])


def test_glue_actions_checks_tables(path3):
    left = salvetti(path3.induced(path3.subset("ab")), 2)
    right = salvetti(path3.induced(path3.subset("bc")), 2)
    glued = glue_marked(GluingSpec.along_common(path3, left, right))
    trivial = coordinate_action(right.complex, np.zeros((1, 1)), [(CircleMotion(),) * 2])
    with pytest.raises(ActionError):
        glue_actions(glued, flip_all(left), trivial)


# --- パイプライン ---

def test_run_pipeline_and_bundle(two_edges):
    result = run_pipeline("wedge", two_edges, subdivision=2)
    marked, action, phi = load_bundle(result.bundle())
    assert marked == result.marked
    assert realises(marked, action, phi)


@pytest.mark.parametrize("name, params", [
    ("wedge", {}), ("glue", {"offset": 0}), ("fault_correction", {}), ("product", {}),
])
def test_committed_bundles_match_pipelines(fixtures_dir, name, params):
    marked, action, phi = load_bundle(load_json(fixtures_dir / "bundles" / f"{name}.json"))
    result = run_pipeline(name, subdivision=2, **params)
    assert marked == result.marked
    assert {e: str(w) for e, w in marked.edge_words.items()} == \
        {e: str(w) for e, w in result.marked.edge_words.items() if not w.is_identity()}
    assert marked.loops == result.marked.loops
    assert action.permutations == result.action.permutations
    assert [str(f) for f in phi.elements] == [str(f) for f in result.phi.elements]


def test_unknown_pipeline():
    assert set(PIPELINES) == {"wedge", "glue", "fault_correction", "product"}
    with pytest.raises(ValidityError):
        run_pipeline("spiral")
