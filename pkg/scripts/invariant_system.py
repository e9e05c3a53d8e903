# scripts/invariant_system.py
# raagkit - 有限外部群 H、不変部分グラフの系 L^φ、閉包則の検査、組み立て計画
#
# H は外部類ごとに代表の自己同型を1つ持ち、乗積表は類の番号で引く。

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
import sympy
from joblib import Parallel, delayed

from scripts.aut_raag import (
    RaagMap, abelian_matrix, classify_untwisted, compose, generator_from_json,
    identity_map, inverse, outer_equal,
)
from scripts.graph_core import (
    SimplicialGraph, VertexSet, all_subsets, boundary, components, extended_star,
    is_cone, is_join, link, star,
)
from scripts.raag_errors import (
    AmbiguousMaximal, CapExceeded, DegenerateSupport, GraphMismatchError,
    NoProperSupergraph, NotAMember, RaagkitError, TooManyVertices, ValidityError,
    ViolationFound,
)
from scripts.settings import get_setting, log_event, setup_logging
from scripts.word_calculus import (
    Letter, NormalForm, Word, abelianize, ball, cyclically_reduce, in_special_subgroup,
    reduce, support,
)

logger = setup_logging(__name__)

# --- 定数 ---
PASS, FAIL, SKIPPED = "pass", "fail", "skipped"
CHUNK_SIZE = 64
MAX_WITNESSES = 10

CHECK_NAMES = (
    "contains_empty_and_whole",
    "intersection",
    "conditional_union",
    "components_with_edge",
    "extended_stars",
    "links_of_non_cones",
    "stars_of_members",
    "all_links",
    "boundary_of_maximal",
)


def _configured_bound() -> Optional[int]:
    """設定の conjugator_bound（0 は写像ごとの既定値）"""
    bound = get_setting('search', 'conjugator_bound', int)
    return bound or None


def _conjoin(flags: Iterable[Dict[str, Optional[bool]]]) -> Dict[str, Optional[bool]]:
    """要素ごとの分類を群全体にまとめる（1つでも False なら False、未分類があれば None）"""
    result: Dict[str, Optional[bool]] = {"in_Aut0": True, "in_UAut0": True}
    for item in flags:
        for key in result:
            value = item.get(key)
            if value is False or result[key] is False:
                result[key] = False
            elif value is None:
                result[key] = None
    return result


# --- データクラス ---

@dataclass(frozen=True)
class FiniteOuterGroup:
    """φ(H) ≤ Out(A_Γ)。elements[i] は i 番目の外部類の代表"""
    graph: SimplicialGraph
    elements: Tuple[RaagMap, ...]
    table: np.ndarray = field(compare=False, repr=False)
    identity: int = 0
    generators: Tuple[int, ...] = ()
    # from_table で作った核を持つ作用では False
    faithful: bool = True

    def __post_init__(self):
        check_table(self.table, self.identity, len(self.elements))

    @property
    def order(self) -> int:
        return len(self.elements)

    def multiply(self, i: int, j: int) -> int:
        """elements[i] ∘ elements[j] の類"""
        return int(self.table[i, j])

    def inverse(self, i: int) -> int:
        return int(np.flatnonzero(self.table[i] == self.identity)[0])

    def inverse_map(self, i: int) -> RaagMap:
        return inverse(self.elements[i])

    def element_order(self, i: int) -> int:
        k, x = 1, i
        while x != self.identity:
            x = self.multiply(x, i)
            k += 1
        return k

    def flags(self) -> Dict[str, Optional[bool]]:
        maps = [self.elements[i] for i in self.generators] if self.generators else list(self.elements)
        return _conjoin(classify_untwisted(f) for f in maps)

    def to_json(self) -> Dict:
        return {
            "order": self.order,
            "identity": self.identity,
            "generators": list(self.generators),
            "faithful": self.faithful,
            "table": self.table.tolist(),
            "elements": [f.to_json() for f in self.elements],
            "flags": self.flags(),
        }

    @classmethod
    def from_table(cls, graph: SimplicialGraph, table, elements: Sequence[RaagMap],
                   generators: Sequence[int] = (), check: bool = True,
                   bound: Optional[int] = None) -> "FiniteOuterGroup":
        """抽象群の乗積表と各元の像で H → Out(A_Γ) を与える（核があってもよい）"""
        table = np.asarray(table, dtype=np.int64)
        elements = tuple(elements)
        for f in elements:
            if f.graph != graph:
                raise GraphMismatchError("element acts on another graph")
        group = cls(graph, elements, table, 0, tuple(generators), faithful=False)
        if check:
            for i in range(group.order):
                for j in range(group.order):
                    product = compose(elements[i], elements[j])
                    if not outer_equal(product, elements[group.multiply(i, j)], bound):
                        raise ValidityError(
                            "homomorphism", f"φ({i})φ({j}) is not φ({group.multiply(i, j)})")
        return group

    @classmethod
    def from_json(cls, data: Dict, graph: SimplicialGraph) -> "FiniteOuterGroup":
        elements = []
        for item in data["elements"]:
            f = generator_from_json(graph, item)
            if "factors" in item:
                f = replace(f, factors=tuple(item["factors"]))
            elements.append(f)
        return cls(graph, tuple(elements), np.asarray(data["table"], dtype=np.int64),
                   int(data.get("identity", 0)), tuple(data.get("generators", ())),
                   bool(data.get("faithful", True)))


def check_table(table: np.ndarray, identity: int, size: int) -> None:
    if table.ndim != 2 or table.shape != (size, size) or size == 0:
        raise ValidityError("table", f"table shape {table.shape} does not match {size} elements")
    if table.min() < 0 or table.max() >= size:
        raise ValidityError("table", "table entry out of range")
    rng = np.arange(size)
    if not (np.array_equal(table[identity], rng) and np.array_equal(table[:, identity], rng)):
        raise ValidityError("table", f"{identity} is not a two-sided identity")
    for row in table:
        if len(set(row.tolist())) != size:
            raise ValidityError("table", "a row is not a permutation")
    # (ij)k = i(jk)
    if not np.array_equal(table[table, :], table[:, table]):
        raise ValidityError("table", "multiplication is not associative")


@dataclass(frozen=True)
class InvariantSystem:
    """誘導部分グラフの集まり（L^φ とその部分系 S, P）"""
    graph: SimplicialGraph
    members: Tuple[VertexSet, ...]
    flags: Dict[str, Optional[bool]] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        for s in self.members:
            if s.graph != self.graph:
                raise GraphMismatchError("member lives in another graph")
        unique = {s.mask: s for s in self.members}
        ordered = tuple(sorted(unique.values(), key=lambda s: (len(s), s.sort_key())))
        object.__setattr__(self, "members", ordered)

    @classmethod
    def from_masks(cls, graph: SimplicialGraph, masks: Iterable[int],
                   flags: Optional[Dict] = None) -> "InvariantSystem":
        return cls(graph, tuple(VertexSet(graph, m) for m in masks), dict(flags or {}))

    @classmethod
    def from_json(cls, data: Dict, graph: Optional[SimplicialGraph] = None) -> "InvariantSystem":
        if graph is None:
            graph = SimplicialGraph.from_json(data["graph"])
        members = tuple(graph.subset(labels) for labels in data.get("members", []))
        return cls(graph, members, dict(data.get("flags", {})))

    def to_json(self) -> Dict:
        return {
            "graph": self.graph.to_json(),
            "members": [list(s.labels) for s in self.members],
            "flags": dict(self.flags),
        }

    @property
    def masks(self) -> frozenset:
        return frozenset(s.mask for s in self.members)

    def __contains__(self, s: Union[VertexSet, int]) -> bool:
        mask = s.mask if isinstance(s, VertexSet) else s
        return mask in self.masks

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)


@dataclass
class ClosureReport:
    """verify_closure の結果。各検査は {check, status, witnesses}"""
    checks: List[Dict] = field(default_factory=list)

    def add(self, name: str, status: str, witnesses: Optional[List] = None) -> None:
        self.checks.append({"check": name, "status": status,
                            "witnesses": list(witnesses or [])[:MAX_WITNESSES]})

    def failures(self) -> List[Dict]:
        return [c for c in self.checks if c["status"] == FAIL]

    @property
    def passed(self) -> bool:
        return not self.failures()

    def status(self, name: str) -> str:
        for c in self.checks:
            if c["check"] == name:
                return c["status"]
        raise KeyError(name)

    def to_json(self) -> Dict:
        return {"passed": self.passed, "checks": list(self.checks)}


@dataclass(frozen=True)
class AssemblyPlan:
    """Γ′ ∈ L から Γ を組み立てるための部分グラフ一式"""
    gamma_prime: VertexSet
    theta: VertexSet
    theta_bar: VertexSet
    delta: VertexSet
    delta_prime: VertexSet
    s_system: InvariantSystem
    s_gamma_prime: InvariantSystem
    part: str
    s_prime: Optional[InvariantSystem] = None
    # all_but_one のとき E = lk(∂Γ′) ∩ Γ′ と、E が空かどうか
    edge_part: Optional[VertexSet] = None
    edge_case: Optional[str] = None
    maximal_disjoint: Optional[bool] = None
    is_join: bool = False
    depth: int = 0
    claims: Dict[str, bool] = field(default_factory=dict, compare=False, hash=False)
    candidates: Tuple[VertexSet, ...] = ()

    def split(self, sigma: VertexSet) -> Tuple[VertexSet, VertexSet]:
        """(Σ₁, Σ₂) = (Σ ∩ Γ′, Σ ∩ (Δ ∪ Θ))"""
        return sigma & self.gamma_prime, sigma & (self.delta | self.theta)

    def to_json(self) -> Dict:
        def names(s: Optional[VertexSet]):
            return None if s is None else list(s.labels)

        return {
            "part": self.part,
            "edge_case": self.edge_case,
            "gamma_prime": names(self.gamma_prime),
            "theta": names(self.theta),
            "theta_bar": names(self.theta_bar),
            "delta": names(self.delta),
            "delta_prime": names(self.delta_prime),
            "edge_part": names(self.edge_part),
            "s_system": [names(s) for s in self.s_system],
            "s_gamma_prime": [names(s) for s in self.s_gamma_prime],
            "s_prime": None if self.s_prime is None else [names(s) for s in self.s_prime],
            "maximal_disjoint": self.maximal_disjoint,
            "is_join": self.is_join,
            "depth": self.depth,
            "claims": dict(self.claims),
            "candidates": [names(s) for s in self.candidates],
        }


# --- 群の閉包 ---

def close_group(generators: Sequence[RaagMap], cap: Optional[int] = None,
                graph: Optional[SimplicialGraph] = None,
                bound: Optional[int] = None) -> FiniteOuterGroup:
    """生成元から内部自己同型を法として閉じた有限群を作る"""
    if cap is None:
        cap = get_setting('search', 'group_cap', int)
    if bound is None:
        bound = _configured_bound()
    if graph is None:
        if not generators:
            raise ValidityError("graph", "an empty generating set needs the ambient graph")
        graph = generators[0].graph
    for f in generators:
        if f.graph != graph:
            raise GraphMismatchError("generator acts on another graph")

    log_event(logger, "INFO", "外部群の閉包を開始", generators=len(generators), cap=cap)
    elements: List[RaagMap] = [identity_map(graph)]
    matrices: List[np.ndarray] = [abelian_matrix(elements[0])]

    def lookup(matrix: np.ndarray, make, closed: bool) -> Optional[int]:
        candidates = [k for k, m in enumerate(matrices) if np.array_equal(m, matrix)]
        if closed and len(candidates) == 1:
            return candidates[0]
        if not candidates:
            return None
        product = make()
        for k in candidates:
            if outer_equal(product, elements[k], bound):
                return k
        return None

    def add(f: RaagMap, matrix: np.ndarray) -> int:
        if len(elements) + 1 > cap:
            log_event(logger, "WARN", "外部群が上限を超えました", cap=cap)
            raise CapExceeded(cap)
        elements.append(f)
        matrices.append(matrix)
        return len(elements) - 1

    gen_index: List[int] = []
    for f in generators:
        m = abelian_matrix(f)
        k = lookup(m, lambda: f, closed=False)
        gen_index.append(add(f, m) if k is None else k)

    steps = sorted(set(gen_index))
    i = 0
    while i < len(elements):
        for g in steps:
            m = matrices[i] @ matrices[g]
            k = lookup(m, lambda: compose(elements[i], elements[g]), closed=False)
            if k is None:
                add(compose(elements[i], elements[g]), m)
        i += 1

    n = len(elements)
    table = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            k = lookup(matrices[i] @ matrices[j],
                       lambda: compose(elements[i], elements[j]), closed=True)
            if k is None:
                raise RaagkitError(f"closure lost the product of classes {i} and {j}")
            table[i, j] = k

    group = FiniteOuterGroup(graph, tuple(elements), table, 0, tuple(gen_index))
    log_event(logger, "INFO", "外部群の閉包が完了", order=n, flags=group.flags())
    return group


# --- 不変性の判定 ---

def _check_graph(graph: SimplicialGraph, s: VertexSet) -> None:
    if s.graph != graph:
        raise GraphMismatchError("vertex set lives in another graph")


def _unimodular_block(matrix: np.ndarray, delta: VertexSet) -> Optional[sympy.Matrix]:
    """H₁ 上で span(Δ) を保ち、Δ ブロックが Z 上可逆ならそのブロック"""
    inside = list(delta)
    outside = [v for v in range(matrix.shape[0]) if v not in delta]
    if outside and np.any(matrix[np.ix_(outside, inside)]):
        return None
    block = sympy.Matrix(matrix[np.ix_(inside, inside)].tolist())
    if abs(block.det()) != 1:
        return None
    return block


def _element_preserves(h: RaagMap, delta: VertexSet) -> bool:
    block = _unimodular_block(abelian_matrix(h), delta)
    if block is None:
        return False
    # h(w) の指数和が Δ の全ての文字で 1 になる w ∈ A_Δ
    x = block.inv() * sympy.ones(len(delta), 1)
    letters: List[Letter] = []
    for v, e in zip(delta, x):
        e = int(e)
        letters.extend([Letter(v, 1 if e > 0 else -1)] * abs(e))
    w = reduce(Word(h.graph, tuple(letters)))

    y, core = cyclically_reduce(h(w))
    core_support = support(core)
    if not core_support <= delta:
        return False
    if core_support != delta:
        raise DegenerateSupport(f"core {core} of h({w}) does not use all of {delta}")

    for v in delta:
        psi = y * h.images[v] * y.inverse()
        if not in_special_subgroup(psi, delta):
            return False
    return True


def is_invariant(H: FiniteOuterGroup, delta: VertexSet) -> bool:
    """H の全ての元が A_Δ をその共役に写すか"""
    _check_graph(H.graph, delta)
    if not delta or delta.mask == H.graph.full_mask:
        return True
    for index, h in enumerate(H.elements):
        if index == H.identity or h.is_identity():
            continue
        if not _element_preserves(h, delta):
            return False
    return True


@lru_cache(maxsize=32)
def _cached_ball(graph: SimplicialGraph, radius: int) -> Tuple[NormalForm, ...]:
    return tuple(ball(graph, radius))


def brute_force_invariant(H: FiniteOuterGroup, delta: VertexSet,
                          bound: Optional[int] = None) -> bool:
    """長さ bound 以下の共役元 y を総当たりし y·h(v)·y⁻¹ ∈ A_Δ (v ∈ Δ) を探す"""
    _check_graph(H.graph, delta)
    if bound is None:
        bound = get_setting('search', 'oracle_bound', int)
    if not delta or delta.mask == H.graph.full_mask:
        return True
    candidates = _cached_ball(H.graph, bound)
    for index, h in enumerate(H.elements):
        if index == H.identity or h.is_identity():
            continue
        images = [h.images[v] for v in delta]
        # 可換化の台が Δ を出る像は、どう共役しても A_Δ に入らない
        outside = ~delta.mask
        if any(count and outside >> u & 1
               for img in images for u, count in enumerate(abelianize(img))):
            return False
        if not any(all(in_special_subgroup(y * img * y.inverse(), delta) for img in images)
                   for y in candidates):
            return False
    return True


def _member(H: FiniteOuterGroup, delta: VertexSet, bound: Optional[int]) -> bool:
    try:
        return is_invariant(H, delta)
    except DegenerateSupport as e:
        log_event(logger, "WARN", "台が退化したため総当たりに切り替えます",
                  subgraph=str(delta), detail=str(e))
        return brute_force_invariant(H, delta, bound)


def _test_chunk(H: FiniteOuterGroup, masks: Sequence[int], bound: Optional[int]) -> List[int]:
    return [m for m in masks if _member(H, VertexSet(H.graph, m), bound)]


def _seed_members(graph: SimplicialGraph, flags: Dict[str, Optional[bool]]) -> Set[int]:
    """作用の種類だけから L に入ることが分かる部分グラフ"""
    seeds = {0, graph.full_mask}
    if flags.get("in_Aut0"):
        for comp in components(graph):
            if len(comp) > 1:
                seeds.add(comp.mask)
        for s in all_subsets(graph):
            seeds.add(extended_star(s).mask)
            if flags.get("in_UAut0") or not is_cone(s):
                seeds.add(link(s).mask)
    return seeds


def _fast_members(H: FiniteOuterGroup, bound: Optional[int]) -> Set[int]:
    graph = H.graph
    matrices = [abelian_matrix(h) for i, h in enumerate(H.elements)
                if i != H.identity and not h.is_identity()]
    survivors = [m for m in range(1 << graph.vertex_count)
                 if all(_unimodular_block(mat, VertexSet(graph, m)) is not None
                        for mat in matrices)]
    implied = _seed_members(graph, H.flags())
    confirmed: Set[int] = set()
    for mask in sorted(survivors, key=lambda m: (-bin(m).count("1"), m)):
        if mask in implied or _member(H, VertexSet(graph, mask), bound):
            implied.update(mask & other for other in confirmed)
            confirmed.add(mask)
    log_event(logger, "DEBUG", "高速経路の集計", survivors=len(survivors),
              members=len(confirmed))
    return confirmed


def compute_L(H: FiniteOuterGroup, jobs: Optional[int] = None, fast: bool = False,
              vertex_cap: Optional[int] = None,
              oracle_bound: Optional[int] = None) -> InvariantSystem:
    """全ての誘導部分グラフを判定して L^φ を求める"""
    graph = H.graph
    n = graph.vertex_count
    if vertex_cap is None:
        vertex_cap = get_setting('search', 'vertex_cap', int)
    if n > vertex_cap:
        raise TooManyVertices(n, vertex_cap)
    if jobs is None:
        jobs = get_setting('performance', 'jobs', int)

    log_event(logger, "INFO", "L^φ の計算を開始", vertices=n, order=H.order,
              jobs=jobs, fast=fast)
    if fast:
        masks = _fast_members(H, oracle_bound)
    else:
        total = 1 << n
        chunks = [list(range(s, min(s + CHUNK_SIZE, total))) for s in range(0, total, CHUNK_SIZE)]
        parts = Parallel(n_jobs=jobs)(
            delayed(_test_chunk)(H, chunk, oracle_bound) for chunk in chunks)
        masks = {m for part in parts for m in part}
    masks |= {0, graph.full_mask}

    flags = dict(H.flags())
    flags["complete"] = True
    system = InvariantSystem.from_masks(graph, masks, flags)
    log_event(logger, "INFO", "L^φ の計算が完了", members=len(system))
    return system


# --- 部分系 ---

def intersection(sets: Iterable[VertexSet], graph: SimplicialGraph) -> VertexSet:
    """⋂S（空の族なら Γ）"""
    result = graph.vertices()
    for s in sets:
        result = result & s
    return result


def union(sets: Iterable[VertexSet], graph: SimplicialGraph) -> VertexSet:
    result = graph.empty()
    for s in sets:
        result = result | s
    return result


def containing(L: InvariantSystem, theta: VertexSet) -> InvariantSystem:
    """S = {Σ ∈ L | Θ ⊆ Σ}"""
    return InvariantSystem(L.graph, tuple(s for s in L if theta <= s), dict(L.flags))


def contained_in(L: InvariantSystem, theta: VertexSet) -> InvariantSystem:
    """P_Θ = {Δ ∈ L | Δ ⊆ Θ}（A_Θ に誘導される作用の系）"""
    return InvariantSystem(L.graph, tuple(s for s in L if s <= theta), dict(L.flags))


def restrict(L: InvariantSystem, sigma: VertexSet) -> InvariantSystem:
    """S_Σ = {Δ ∩ Σ | Δ ∈ L}"""
    return InvariantSystem(L.graph, tuple(s & sigma for s in L), dict(L.flags))


def maximal_members(L: InvariantSystem, within: Optional[VertexSet] = None) -> List[VertexSet]:
    """Γ 以外の極大元（within を含むものに限定できる）"""
    full = L.graph.full_mask
    pool = [s for s in L if s.mask != full and (within is None or within <= s)]
    return [s for s in pool if not any(s < t for t in pool)]


def depth(L: InvariantSystem) -> int:
    """∅ ⊂ Σ₁ ⊂ … ⊂ Γ の真の包含の最長鎖"""
    longest: Dict[int, int] = {}
    for s in L.members:
        longest[s.mask] = max((longest[t.mask] + 1 for t in L.members if t < s), default=0)
    if L.graph.full_mask in longest:
        return longest[L.graph.full_mask]
    return max(longest.values(), default=0)


# --- 閉包則の検査 ---

def _names(*sets: VertexSet) -> List[List[str]]:
    return [list(s.labels) for s in sets]


def verify_closure(L: InvariantSystem, strict: bool = False) -> ClosureReport:
    """L^φ が満たすべき閉包則をすべて検査する"""
    graph = L.graph
    masks = L.masks
    report = ClosureReport()
    in_out0 = L.flags.get("in_Aut0") is True
    in_u0 = L.flags.get("in_UAut0") is True

    missing = [s for s in (graph.empty(), graph.vertices()) if s.mask not in masks]
    report.add("contains_empty_and_whole", FAIL if missing else PASS, _names(*missing))

    witnesses = []
    for a in L:
        for b in L:
            if (a & b).mask not in masks:
                witnesses.append(_names(a, b))
    report.add("intersection", FAIL if witnesses else PASS, witnesses)

    witnesses = []
    for a in L:
        for b in L:
            if link(a & b) <= star(a) and (a | b).mask not in masks:
                witnesses.append(_names(a, b))
    report.add("conditional_union", FAIL if witnesses else PASS, witnesses)

    witnesses = []
    for s in L:
        if star(s).mask not in masks:
            witnesses.append(_names(s))
    report.add("stars_of_members", FAIL if witnesses else PASS, witnesses)

    if in_out0:
        witnesses = [_names(c) for c in components(graph)
                     if len(c) > 1 and c.mask not in masks]
        report.add("components_with_edge", FAIL if witnesses else PASS, witnesses)

        witnesses = [_names(s) for s in all_subsets(graph)
                     if extended_star(s).mask not in masks]
        report.add("extended_stars", FAIL if witnesses else PASS, witnesses)

        witnesses = [_names(s) for s in all_subsets(graph)
                     if not is_cone(s) and link(s).mask not in masks]
        report.add("links_of_non_cones", FAIL if witnesses else PASS, witnesses)

        witnesses = []
        for sigma in maximal_members(L):
            rest = sigma.complement()
            for w in boundary(sigma):
                if not rest <= link(VertexSet(graph, 1 << w)):
                    witnesses.append(_names(sigma, VertexSet(graph, 1 << w)))
        report.add("boundary_of_maximal", FAIL if witnesses else PASS, witnesses)
    else:
        for name in ("components_with_edge", "extended_stars", "links_of_non_cones",
                     "boundary_of_maximal"):
            report.add(name, SKIPPED)

    if in_u0:
        witnesses = [_names(s) for s in all_subsets(graph) if link(s).mask not in masks]
        report.add("all_links", FAIL if witnesses else PASS, witnesses)
    else:
        report.add("all_links", SKIPPED)

    if report.failures():
        log_event(logger, "WARN", "閉包則の違反",
                  checks=[c["check"] for c in report.failures()])
        if strict:
            raise ViolationFound(report)
    return report


# --- 組み立て計画 ---

def choose_least(candidates: Sequence[VertexSet]) -> VertexSet:
    """辞書式最小の頂点集合"""
    return min(candidates, key=VertexSet.sort_key)


def _component_position(gamma_prime: VertexSet) -> Optional[str]:
    """Γ′ が成分の和なら components、1つを除く成分の和を真に含むなら all_but_one

    Γ が連結なら Γ′ は常に all_but_one（空の和を含む）。
    """
    comps = components(gamma_prime.graph)
    if len(comps) == 1:
        return "all_but_one"
    partial = [c for c in comps if (c & gamma_prime) and not c <= gamma_prime]
    outside = [c for c in comps if not (c & gamma_prime)]
    if not partial:
        return "components"
    if len(partial) == 1 and not outside:
        return "all_but_one"
    return None


def assembly_plan(L: InvariantSystem, xi: VertexSet, choose: str = "error") -> AssemblyPlan:
    """Ξ ⊆ Γ′ ∈ L となる極大な真部分グラフ Γ′ と、組み立てに使う部分グラフを求める

    choose="least" なら極大元が複数あるとき辞書式最小を採用する。
    """
    graph = L.graph
    _check_graph(graph, xi)
    if xi not in L:
        raise NotAMember(f"{xi} is not in the system")
    candidates = sorted(maximal_members(L, within=xi), key=VertexSet.sort_key)
    if not candidates:
        raise NoProperSupergraph(f"no proper member contains {xi}")
    if len(candidates) > 1 and choose != "least":
        raise AmbiguousMaximal(candidates)
    gamma_prime = choose_least(candidates)

    theta = gamma_prime.complement()
    edge = boundary(gamma_prime)
    theta_bar = theta | edge
    part = _component_position(gamma_prime)
    if part is None:
        log_event(logger, "WARN", "Γ′ が成分に関する分類に当てはまりません",
                  gamma_prime=str(gamma_prime))

    s_system = containing(L, theta_bar)
    s_gamma_prime = restrict(s_system, gamma_prime)
    delta = intersection(s_gamma_prime, graph)
    restricted_stars = [star(s & gamma_prime) & gamma_prime for s in s_system]
    delta_prime = intersection(restricted_stars, graph)

    claims: Dict[str, bool] = {"delta_union_theta": (delta | theta) in L}
    s_prime = None
    edge_part = None
    edge_case = None
    maximal_disjoint = None
    if part == "components":
        s_prime = InvariantSystem(graph, tuple(restricted_stars), dict(L.flags))
        claims["delta_prime_union_theta"] = (delta_prime | theta) in L
        maxima = maximal_members(L)
        maximal_disjoint = all(a == b or not (a & b) for a in maxima for b in maxima)
    else:
        claims["trivial_link"] = not link(gamma_prime)
        claims["boundary_is_link_of_theta"] = edge == link(theta)
        edge_part = link(edge) & gamma_prime
        edge_case = "empty" if not edge_part else "nonempty"
        if edge_case == "empty":
            claims["theta_in_L"] = theta in L
            claims["delta_is_boundary"] = delta == edge
        else:
            claims["boundary_in_L"] = edge in L
            claims["e_bar_in_L"] = (edge_part | edge) in L

    plan = AssemblyPlan(
        gamma_prime=gamma_prime, theta=theta, theta_bar=theta_bar, delta=delta,
        delta_prime=delta_prime, s_system=s_system, s_gamma_prime=s_gamma_prime,
        part=part or "unclassified", s_prime=s_prime, edge_part=edge_part, edge_case=edge_case,
        maximal_disjoint=maximal_disjoint, is_join=is_join(graph.vertices()),
        depth=depth(L), claims=claims, candidates=tuple(candidates),
    )
    log_event(logger, "INFO", "組み立て計画", part=plan.part, edge_case=edge_case,
              gamma_prime=str(gamma_prime), delta=str(delta), delta_prime=str(delta_prime))
    return plan
