# tests/test_invariant_system.py

import numpy as np
import pytest

from scripts.aut_raag import (
    compose, enumerate_generators, identity_map, load_automorphisms, make_graph_symmetry,
    make_inversion, make_partial_conjugation, make_transvection, transvection_kind,
)
from scripts.graph_core import SimplicialGraph, all_subsets, link
from scripts.invariant_system import (
    FAIL, PASS, SKIPPED, FiniteOuterGroup, InvariantSystem, assembly_plan, brute_force_invariant,
    check_table, close_group, compute_L, containing, contained_in, depth, intersection,
    is_invariant, maximal_members, restrict, union, verify_closure,
)
from scripts.path_utils import load_json
from scripts.raag_errors import (
    AmbiguousMaximal, CapExceeded, DegenerateSupport, NoProperSupergraph, NotAMember,
    TooManyVertices, ValidityError, ViolationFound,
)
from tests.conftest import random_graph

Z2 = [[0, 1], [1, 0]]


def _u0_pool(g, symmetries):
    """U⁰ の生成元（symmetries ならグラフ対称も）。fold は v の反転と合成した位数 2 の元で入れる"""
    pool = [f for f in enumerate_generators(g, symmetries=symmetries)
            if f.tag in ("inversion", "partial_conjugation", "graph_symmetry")]
    for w in range(g.vertex_count):
        for v in range(g.vertex_count):
            if transvection_kind(g, w, v) == "fold":
                pool.append(compose(make_inversion(g, v), make_transvection(g, w, v)))
    return pool


def _sample_groups(rng, count, max_vertices=5, symmetries=True, cap=8):
    """U⁰ の生成元から位数 cap 以下の有限群をいくつか作る（無限位数になったものは捨てる）"""
    found = []
    for _ in range(count * 40):
        g = random_graph(rng, rng.randint(2, max_vertices))
        pool = _u0_pool(g, symmetries)
        picked = rng.sample(pool, min(len(pool), rng.randint(1, 3)))
        try:
            found.append(close_group(picked, cap=cap, graph=g))
        except CapExceeded:
            continue
        if len(found) == count:
            break
    return found


class TestCloseGroup:
    def test_inversion_has_order_two(self, free2):
        H = close_group([make_inversion(free2, "a")])
        assert H.order == 2
        assert H.element_order(1) == 2
        assert H.inverse(1) == 1

    def test_empty_generating_set(self, free2):
        H = close_group([], graph=free2)
        assert H.order == 1

    def test_empty_set_needs_graph(self):
        with pytest.raises(ValidityError):
            close_group([])

    def test_fold_has_infinite_order(self, square):
        with pytest.raises(CapExceeded):
            close_group([make_transvection(square, "a", "c")], cap=10)

    def test_inner_generators_collapse(self, path3, fixtures_dir):
        maps = load_automorphisms(path3, load_json(fixtures_dir / "auts" / "path3_mixed.json"))
        assert close_group(maps).order == 2

    def test_klein_four(self, free2):
        H = close_group([make_inversion(free2, "a"), make_inversion(free2, "b")])
        assert H.order == 4
        assert all(H.element_order(i) <= 2 for i in range(4))
        check_table(H.table, H.identity, H.order)

    def test_json_round_trip(self, free2):
        H = close_group([make_inversion(free2, "a")])
        again = FiniteOuterGroup.from_json(H.to_json(), free2)
        assert again.order == 2
        assert np.array_equal(again.table, H.table)
        assert again.elements[1].images == H.elements[1].images


class TestTables:
    def test_rejects_non_associative_table(self, free2):
        with pytest.raises(ValidityError):
            check_table(np.array([[0, 1, 2], [1, 0, 0], [2, 2, 1]]), 0, 3)

    def test_rejects_wrong_identity(self, free2):
        with pytest.raises(ValidityError):
            check_table(np.array([[1, 0], [0, 1]]), 0, 2)

    def test_from_table_allows_kernel(self, edge):
        f = make_inversion(edge, "a")
        H = FiniteOuterGroup.from_table(edge, [[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1],
                                               [3, 2, 1, 0]],
                                        [identity_map(edge), f, identity_map(edge), f])
        assert not H.faithful and H.order == 4

    def test_from_table_checks_homomorphism(self, edge):
        f = make_inversion(edge, "a")
        with pytest.raises(ValidityError):
            FiniteOuterGroup.from_table(edge, [[0, 1], [1, 0]], [f, f])


class TestInvariance:
    def test_inversions_fix_everything(self, path4):
        H = close_group([make_inversion(path4, "a"), make_inversion(path4, "c")])
        assert all(is_invariant(H, s) for s in all_subsets(path4))

    def test_partial_conjugation_on_path(self, path4):
        f = make_partial_conjugation(path4, "c", ["a"])
        H = FiniteOuterGroup(path4, (identity_map(path4), f), np.array(Z2), 0, (1,))
        assert is_invariant(H, path4.subset(["a"]))
        assert is_invariant(H, path4.subset(["a", "d"]))
        assert brute_force_invariant(H, path4.subset(["a", "d"]), 1)

    def test_symmetry_moves_vertices(self, path4):
        H = close_group([make_graph_symmetry(path4, {"a": "d", "b": "c", "c": "b", "d": "a"})])
        assert not is_invariant(H, path4.subset(["a"]))
        assert is_invariant(H, path4.subset(["a", "d"]))

    @pytest.mark.slow
    def test_agrees_with_oracle(self, rng):
        groups = _sample_groups(rng, 12, max_vertices=4, cap=4)
        assert groups
        for H in groups:
            assert H.order <= 4
            for s in all_subsets(H.graph):
                try:
                    fast = is_invariant(H, s)
                except DegenerateSupport:
                    continue
                assert fast == brute_force_invariant(H, s, 6), (H.graph, s)

    def test_oracle_rejects_moved_abelianisation(self, path4):
        H = close_group([make_graph_symmetry(path4, {"a": "d", "b": "c", "c": "b", "d": "a"})])
        assert not brute_force_invariant(H, path4.subset(["a", "b"]), 6)


class TestComputeL:
    def test_trivial_group(self, path4):
        L = compute_L(close_group([], graph=path4))
        assert len(L) == 16
        assert L.flags["complete"] is True

    def test_free_group_inversion(self, free2):
        assert len(compute_L(close_group([make_inversion(free2, "a")]))) == 4

    @pytest.mark.parametrize("golden", ["path4_L.json", "path4_reverse_L.json"])
    def test_golden_tables(self, fixtures_dir, golden):
        data = load_json(fixtures_dir / "golden" / golden)
        graph = SimplicialGraph.from_json(load_json(fixtures_dir / "graphs" / data["graph"]))
        maps = load_automorphisms(graph, load_json(fixtures_dir / "auts" / data["automorphisms"]))
        L = compute_L(close_group(maps))
        assert [list(s.labels) for s in L] == data["members"]

    def test_fast_path_matches(self, rng):
        for H in _sample_groups(rng, 10):
            assert compute_L(H, fast=True).masks == compute_L(H).masks

    def test_parallel_matches(self, path4):
        H = close_group([make_graph_symmetry(path4, {"a": "d", "b": "c", "c": "b", "d": "a"})])
        assert compute_L(H, jobs=2).masks == compute_L(H, jobs=1).masks

    def test_vertex_cap(self, path4):
        with pytest.raises(TooManyVertices):
            compute_L(close_group([], graph=path4), vertex_cap=3)


class TestClosure:
    @pytest.mark.slow
    def test_sampled_u0_systems_pass(self, rng, path4):
        groups = _sample_groups(rng, 25)
        assert len(groups) >= 25
        # a ↦ a·c の後に c を反転（位数 2）
        groups.append(close_group([compose(make_inversion(path4, "c"),
                                           make_transvection(path4, "a", "c"))]))
        assert groups[-1].order == 2
        for H in groups:
            report = verify_closure(compute_L(H), strict=True)
            assert report.passed
            expected = PASS if H.flags()["in_UAut0"] else SKIPPED
            assert report.status("all_links") == expected

    def test_symmetry_skips_aut0_checks(self, path4):
        H = close_group([make_graph_symmetry(path4, {"a": "d", "b": "c", "c": "b", "d": "a"})])
        report = verify_closure(compute_L(H))
        assert report.passed
        assert report.status("extended_stars") == SKIPPED

    def test_hand_built_system_fails(self, free2):
        L = InvariantSystem.from_masks(free2, [0, 0b01], {"in_Aut0": True, "in_UAut0": True})
        report = verify_closure(L)
        assert report.status("contains_empty_and_whole") == FAIL
        with pytest.raises(ViolationFound):
            verify_closure(L, strict=True)

    def test_links_are_members_for_u0(self, rng):
        for H in _sample_groups(rng, 8, symmetries=False):
            L = compute_L(H)
            assert all(link(s) in L for s in all_subsets(H.graph))


class TestSubsystems:
    def test_operations(self, path4):
        L = compute_L(close_group([], graph=path4))
        theta = path4.subset(["c", "d"])
        assert all(theta <= s for s in containing(L, theta))
        assert all(s <= theta for s in contained_in(L, theta))
        assert len(restrict(L, theta)) == 4
        assert intersection([], path4) == path4.vertices()
        assert union([path4.subset(["a"]), theta], path4).labels == ("a", "c", "d")
        assert depth(L) == 4
        assert len(maximal_members(L)) == 4

    def test_json_round_trip(self, path4):
        L = compute_L(close_group([], graph=path4))
        assert InvariantSystem.from_json(L.to_json()).masks == L.masks


class TestAssemblyPlan:
    def test_part_one_on_two_edges(self, two_edges):
        H = close_group([make_graph_symmetry(two_edges, {"c": "d", "d": "c"})])
        plan = assembly_plan(compute_L(H), two_edges.subset(["a", "b"]))
        assert plan.gamma_prime.labels == ("a", "b")
        assert plan.part == "components"
        assert plan.theta.labels == ("c", "d")
        assert not plan.is_join

    def test_ties_are_reported(self, two_edges):
        L = compute_L(close_group([], graph=two_edges))
        with pytest.raises(AmbiguousMaximal) as info:
            assembly_plan(L, two_edges.subset(["a", "b"]))
        assert len(info.value.candidates) == 2
        plan = assembly_plan(L, two_edges.subset(["a", "b"]), choose="least")
        assert plan.gamma_prime.labels == ("a", "b", "c")

    def test_connected_graph_is_part_two(self, path3):
        L = compute_L(close_group([], graph=path3))
        plan = assembly_plan(L, path3.empty(), choose="least")
        assert plan.part == "all_but_one"
        assert plan.claims["trivial_link"]

    def test_empty_maximal_member_on_connected_graph(self):
        triangle = SimplicialGraph.cycle(["a", "b", "c"])
        H = close_group([make_graph_symmetry(triangle, {"a": "b", "b": "c", "c": "a"})])
        L = compute_L(H)
        assert [list(s.labels) for s in L] == [[], ["a", "b", "c"]]
        plan = assembly_plan(L, triangle.empty())
        assert plan.gamma_prime == triangle.empty()
        assert plan.part == "all_but_one"
        assert plan.edge_case == "empty"

    def test_whole_graph_has_no_supergraph(self, path3):
        L = compute_L(close_group([], graph=path3))
        with pytest.raises(NoProperSupergraph):
            assembly_plan(L, path3.vertices())

    def test_non_member(self, path4):
        H = close_group([make_graph_symmetry(path4, {"a": "d", "b": "c", "c": "b", "d": "a"})])
        with pytest.raises(NotAMember):
            assembly_plan(compute_L(H), path4.subset(["a"]))
