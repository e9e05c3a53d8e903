# scripts/aut_raag.py
# raagkit - A_Γ の自己同型（生成元の像で表現）と Laurence–Servatius 生成元の分類
#
# 共役 c(x) は w ↦ x⁻¹·w·x。自己同型は構成時から逆写像の像を持ち歩く。

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from networkx.algorithms.isomorphism import GraphMatcher

from scripts.graph_core import (
    SimplicialGraph, VertexSet, components, is_cone, link, star,
)
from scripts.raag_errors import (
    GraphMismatchError, Inconclusive, NotAutomorphism, ValidityError,
)
from scripts.settings import log_event, setup_logging
from scripts.word_calculus import (
    Letter, NormalForm, Word, abelianize, ball, conjugate, identity,
    is_conjugate, reduce,
)

logger = setup_logging(__name__)

# --- 定数 ---
GENERATOR_TAGS = ("inversion", "partial_conjugation", "fold", "twist", "graph_symmetry")
TAGS = GENERATOR_TAGS + ("composite", "identity", "inner")

VertexRef = Union[int, str]


# --- データクラス ---

@dataclass(frozen=True)
class RaagMap:
    """生成元ごとの像と逆像で与える A_Γ の自己同型"""
    graph: SimplicialGraph
    images: Tuple[NormalForm, ...]
    inverse_images: Tuple[NormalForm, ...]
    tag: str = "composite"
    # 生成元への分解に現れる分類タグ（未分類の合成なら None）
    factors: Optional[Tuple[str, ...]] = field(default=None, compare=False)

    def image(self, v: VertexRef) -> NormalForm:
        return self.images[_vertex(self.graph, v)]

    def __call__(self, w: Word) -> NormalForm:
        return apply(self, w)

    def is_identity(self) -> bool:
        return all(img.letters == (Letter(v, 1),) for v, img in enumerate(self.images))

    def to_json(self) -> Dict:
        labels = self.graph.labels
        data = {
            "images": {labels[v]: str(img) for v, img in enumerate(self.images)},
            "inverse_images": {labels[v]: str(img) for v, img in enumerate(self.inverse_images)},
            "tag": self.tag,
        }
        if self.factors is not None:
            data["factors"] = list(self.factors)
        return data

    def __str__(self) -> str:
        labels = self.graph.labels
        body = ", ".join(f"{labels[v]}↦{img or 'ε'}" for v, img in enumerate(self.images))
        return f"{self.tag}[{body}]"


def _vertex(graph: SimplicialGraph, v: VertexRef) -> int:
    if isinstance(v, str):
        return graph.index(v)
    if not 0 <= v < graph.vertex_count:
        raise ValidityError("vertex", f"vertex index {v} out of range")
    return v


def _gen(graph: SimplicialGraph, v: int, sign: int = 1) -> NormalForm:
    return NormalForm(graph, (Letter(v, sign),))


def substitute(images: Sequence[NormalForm], w: Word) -> NormalForm:
    letters: List[Letter] = []
    for letter in w.letters:
        img = images[letter.vertex]
        if letter.sign > 0:
            letters.extend(img.letters)
        else:
            letters.extend(l.inverse() for l in reversed(img.letters))
    return reduce(Word(w.graph, tuple(letters)))


def verify_automorphism(f: RaagMap) -> RaagMap:
    """像と逆像が互いに逆で、定義関係式 [u, v] = 1 を保つことを確認"""
    g = f.graph
    n = g.vertex_count
    if len(f.images) != n or len(f.inverse_images) != n:
        raise NotAutomorphism("one image per generator is required")
    for v in range(n):
        gen = _gen(g, v)
        if substitute(f.images, f.inverse_images[v]) != gen:
            raise NotAutomorphism(f"images do not invert at {g.labels[v]}")
        if substitute(f.inverse_images, f.images[v]) != gen:
            raise NotAutomorphism(f"inverse images do not invert at {g.labels[v]}")
    for u, v in g.edges():
        for imgs in (f.images, f.inverse_images):
            rel = imgs[u].inverse() * imgs[v].inverse() * imgs[u] * imgs[v]
            if not rel.is_identity():
                raise NotAutomorphism(
                    f"relator [{g.labels[u]}, {g.labels[v]}] is not preserved")
    return f


def from_images(graph: SimplicialGraph, images: Mapping[str, str],
                inverse_images: Mapping[str, str], tag: str = "composite") -> RaagMap:
    def words(table: Mapping[str, str]) -> Tuple[NormalForm, ...]:
        missing = [x for x in graph.labels if x not in table]
        if missing:
            raise NotAutomorphism(f"no image for {missing}")
        return tuple(reduce(Word.parse(table[x], graph)) for x in graph.labels)

    if tag not in TAGS:
        raise ValidityError("tag", f"unknown taxonomy tag {tag!r}")
    factors = None if tag == "composite" else ((tag,) if tag in GENERATOR_TAGS else ())
    return verify_automorphism(
        RaagMap(graph, words(images), words(inverse_images), tag, factors))


def identity_map(graph: SimplicialGraph) -> RaagMap:
    gens = tuple(_gen(graph, v) for v in range(graph.vertex_count))
    return RaagMap(graph, gens, gens, "identity", ())


def conjugation(graph: SimplicialGraph, x: Word) -> RaagMap:
    """内部自己同型 c(x): w ↦ x⁻¹ w x"""
    x = reduce(x)
    images = tuple(conjugate(_gen(graph, v), x) for v in range(graph.vertex_count))
    inverse = tuple(conjugate(_gen(graph, v), x.inverse()) for v in range(graph.vertex_count))
    return RaagMap(graph, images, inverse, "inner", ("partial_conjugation",))


# --- Laurence–Servatius 生成元 ---

def make_inversion(graph: SimplicialGraph, v: VertexRef) -> RaagMap:
    v = _vertex(graph, v)
    images = tuple(_gen(graph, u, -1 if u == v else 1) for u in range(graph.vertex_count))
    return verify_automorphism(RaagMap(graph, images, images, "inversion", ("inversion",)))


def make_partial_conjugation(graph: SimplicialGraph, v: VertexRef,
                             part: Union[VertexSet, Iterable[str]]) -> RaagMap:
    """C ⊆ Γ∖st(v) の成分の和集合の各頂点 u を v⁻¹ u v に送る"""
    v = _vertex(graph, v)
    if not isinstance(part, VertexSet):
        part = graph.subset(part)
    rest = star(VertexSet(graph, 1 << v)).complement()
    if not rest:
        raise ValidityError("star_disconnects",
                            f"st({graph.labels[v]}) is the whole graph, nothing to conjugate")
    if not part:
        raise ValidityError("nonempty_part", "the conjugated part is empty")
    if not part <= rest:
        raise ValidityError("outside_star", f"{part} meets st({graph.labels[v]})")
    for comp in components(rest):
        if (comp & part) and not comp <= part:
            raise ValidityError("union_of_components",
                                f"{part} splits the component {comp} of Γ∖st({graph.labels[v]})")
    gv = _gen(graph, v)
    images = tuple(conjugate(_gen(graph, u), gv) if u in part else _gen(graph, u)
                   for u in range(graph.vertex_count))
    inverse = tuple(conjugate(_gen(graph, u), gv.inverse()) if u in part else _gen(graph, u)
                    for u in range(graph.vertex_count))
    return verify_automorphism(
        RaagMap(graph, images, inverse, "partial_conjugation", ("partial_conjugation",)))


def transvection_kind(graph: SimplicialGraph, w: int, v: int) -> Optional[str]:
    """w ↦ w·v が自己同型になるなら 'fold' / 'twist'、ならなければ None"""
    if w == v:
        return None
    lk_w = link(VertexSet(graph, 1 << w))
    st_v = star(VertexSet(graph, 1 << v))
    if not lk_w <= st_v:
        return None
    return "twist" if v in lk_w else "fold"


def make_transvection(graph: SimplicialGraph, w: VertexRef, v: VertexRef) -> RaagMap:
    """w ↦ w·v（lk(w) ⊆ st(v) が必要）"""
    w, v = _vertex(graph, w), _vertex(graph, v)
    if w == v:
        raise ValidityError("distinct_vertices", "a transvection needs two distinct vertices")
    kind = transvection_kind(graph, w, v)
    if kind is None:
        raise ValidityError(
            "link_in_star", f"lk({graph.labels[w]}) is not contained in st({graph.labels[v]})")
    gw, gv = _gen(graph, w), _gen(graph, v)
    images = tuple(gw * gv if u == w else _gen(graph, u) for u in range(graph.vertex_count))
    inverse = tuple(gw * gv.inverse() if u == w else _gen(graph, u)
                    for u in range(graph.vertex_count))
    return verify_automorphism(RaagMap(graph, images, inverse, kind, (kind,)))


def make_graph_symmetry(graph: SimplicialGraph,
                        perm: Union[Mapping[str, str], Sequence[int]]) -> RaagMap:
    if isinstance(perm, Mapping):
        perm = [graph.index(perm.get(x, x)) for x in graph.labels]
    perm = list(perm)
    n = graph.vertex_count
    if sorted(perm) != list(range(n)):
        raise ValidityError("bijection", f"{perm} is not a permutation of the vertices")
    for u in range(n):
        for v in range(u + 1, n):
            if graph.adjacent(u, v) != graph.adjacent(perm[u], perm[v]):
                raise ValidityError(
                    "preserves_adjacency",
                    f"{graph.labels[u]}-{graph.labels[v]} adjacency is not preserved")
    inv = [0] * n
    for u, pu in enumerate(perm):
        inv[pu] = u
    images = tuple(_gen(graph, perm[u]) for u in range(n))
    inverse = tuple(_gen(graph, inv[u]) for u in range(n))
    return verify_automorphism(
        RaagMap(graph, images, inverse, "graph_symmetry", ("graph_symmetry",)))


def enumerate_generators(graph: SimplicialGraph, symmetries: bool = True) -> List[RaagMap]:
    """グラフの全ての Laurence–Servatius 生成元（恒等置換は除く）"""
    found = [make_inversion(graph, v) for v in range(graph.vertex_count)]
    for v in range(graph.vertex_count):
        rest = star(VertexSet(graph, 1 << v)).complement()
        for comp in components(rest) if rest else []:
            found.append(make_partial_conjugation(graph, v, comp))
    for w in range(graph.vertex_count):
        for v in range(graph.vertex_count):
            if transvection_kind(graph, w, v) is not None:
                found.append(make_transvection(graph, w, v))
    if symmetries:
        nxg = graph.to_networkx()
        for iso in GraphMatcher(nxg, nxg).isomorphisms_iter():
            perm = [iso[u] for u in range(graph.vertex_count)]
            if perm != list(range(graph.vertex_count)):
                found.append(make_graph_symmetry(graph, perm))
    return found


def has_cone_links(graph: SimplicialGraph) -> bool:
    """ある頂点の link が cone か（twist が存在しうるのはこの場合のみ）"""
    return any(is_cone(link(VertexSet(graph, 1 << v))) for v in range(graph.vertex_count))


# --- 合成と作用 ---

def _same_graph(f: RaagMap, g: RaagMap) -> None:
    if f.graph is not g.graph and f.graph != g.graph:
        raise GraphMismatchError("maps act on different graphs")


def apply(f: RaagMap, w: Word) -> NormalForm:
    if w.graph is not f.graph and w.graph != f.graph:
        raise GraphMismatchError("word and map live over different graphs")
    return substitute(f.images, w)


def inverse(f: RaagMap) -> RaagMap:
    factors = None if f.factors is None else tuple(reversed(f.factors))
    return RaagMap(f.graph, f.inverse_images, f.images, f.tag, factors)


def compose(f: RaagMap, g: RaagMap) -> RaagMap:
    """(f∘g)(w) = f(g(w))"""
    _same_graph(f, g)
    if g.tag == "identity":
        return f
    if f.tag == "identity":
        return g
    images = tuple(substitute(f.images, img) for img in g.images)
    inverse_images = tuple(substitute(g.inverse_images, img) for img in f.inverse_images)
    factors = None
    if f.factors is not None and g.factors is not None:
        factors = f.factors + g.factors
    return RaagMap(f.graph, images, inverse_images, "composite", factors)


def abelian_matrix(f: RaagMap) -> np.ndarray:
    """H₁ 上の作用行列（第 v 列 = f(v) の指数和）"""
    n = f.graph.vertex_count
    mat = np.zeros((n, n), dtype=np.int64)
    for v, img in enumerate(f.images):
        mat[:, v] = abelianize(img)
    return mat


# --- 内部自己同型の判定 ---

def _split_prefix(g: NormalForm, allowed: VertexSet) -> Tuple[NormalForm, NormalForm]:
    """g = t·rest（t ∈ A_S、rest の先頭に S の文字は来ない）"""
    letters = list(g.letters)
    taken: List[Letter] = []
    changed = True
    while changed:
        changed = False
        for i, letter in enumerate(letters):
            if letter.vertex in allowed and all(
                    g.graph.adjacent(letters[j].vertex, letter.vertex) for j in range(i)):
                taken.append(letters.pop(i))
                changed = True
                break
    return reduce(Word(g.graph, tuple(taken))), reduce(Word(g.graph, tuple(letters)))


def _split_suffix(g: NormalForm, allowed: VertexSet) -> Tuple[NormalForm, NormalForm]:
    """g = rest·s（s ∈ A_S、rest の末尾に S の文字は来ない）"""
    rest, taken = _split_prefix(g.inverse(), allowed)
    return taken.inverse(), rest.inverse()


def _strip_prefix(g: NormalForm, allowed: VertexSet) -> NormalForm:
    """A_S·g の最短代表"""
    return _split_prefix(g, allowed)[1]


def default_bound(f: RaagMap) -> int:
    return max(1, sum(len(img) for img in f.images))


def _intersect_cosets(f: RaagMap) -> Tuple[bool, Optional[NormalForm]]:
    """解集合 A_S·r を頂点ごとに C(v)·g_v と交わして絞り込む。

    (確定したか, 候補 x) を返す。共役でない頂点や空の交わりが出たら (True, None)。
    A_S ∩ A_T·g は g ∈ A_T·A_S のときに限り空でなく、そのとき A_{S∩T}·s の形になる。
    """
    graph = f.graph
    allowed = graph.vertices()
    rep = identity(graph)
    for v in range(graph.vertex_count):
        target = reduce(rep * f.images[v] * rep.inverse())
        g = is_conjugate(_gen(graph, v), target)
        if g is None:
            return True, None
        centraliser = star(VertexSet(graph, 1 << v))
        _, rest = _split_prefix(g, centraliser)
        middle, tail = _split_suffix(rest, allowed)
        if not middle.is_identity():
            return True, None
        rep = reduce(tail * rep)
        allowed = allowed & centraliser
    return False, rep


def is_inner(f: RaagMap, bound: Optional[int] = None) -> Optional[NormalForm]:
    """f = c(x) となる x を返す。内部でなければ None、判定不能なら Inconclusive"""
    graph = f.graph
    n = graph.vertex_count
    if f.is_identity():
        return identity(graph)
    if not np.array_equal(abelian_matrix(f), np.eye(n, dtype=np.int64)):
        return None

    def realises(x: NormalForm) -> bool:
        return all(conjugate(_gen(graph, v), x) == f.images[v] for v in range(n))

    decided, candidate = _intersect_cosets(f)
    if decided:
        return None
    if realises(candidate):
        return candidate

    # 剰余類の交わりが検証に失敗したときだけ、st(v0) 上の有界探索に落とす
    v0 = min(range(n), key=lambda v: (len(star(VertexSet(graph, 1 << v))), v))
    g0 = is_conjugate(_gen(graph, v0), f.images[v0])
    if g0 is None:
        return None
    centraliser = star(VertexSet(graph, 1 << v0))
    rep = _strip_prefix(g0, centraliser)
    if bound is None:
        bound = default_bound(f)
    for c in ball(graph, bound, centraliser):
        x = c * rep
        if realises(x):
            return x
    log_event(logger, "DEBUG", "inner search exhausted", bound=bound, map=str(f))
    raise Inconclusive(bound)


def outer_equal(f: RaagMap, g: RaagMap, bound: Optional[int] = None) -> bool:
    _same_graph(f, g)
    if not np.array_equal(abelian_matrix(f), abelian_matrix(g)):
        return False
    h = compose(f, inverse(g))
    return is_inner(h, bound if bound is not None else default_bound(h)) is not None


def classify_untwisted(f: RaagMap) -> Dict[str, Optional[bool]]:
    """タグから Aut⁰ / UAut⁰ 所属を判定（未分類の合成は None = Unknown）"""
    if f.factors is None:
        return {"in_Aut0": None, "in_UAut0": None}
    no_symmetry = "graph_symmetry" not in f.factors
    return {"in_Aut0": no_symmetry,
            "in_UAut0": no_symmetry and "twist" not in f.factors}


def generator_from_json(graph: SimplicialGraph, data: Mapping) -> RaagMap:
    """{"generator": kind, ...} 形式、または images/inverse_images 形式"""
    if "images" in data:
        if "inverse_images" not in data:
            raise NotAutomorphism("inverse_images are required for explicit maps")
        return from_images(graph, data["images"], data["inverse_images"],
                           data.get("tag", "composite"))
    kind = data.get("generator")
    if kind == "inversion":
        return make_inversion(graph, data["vertex"])
    if kind == "partial_conjugation":
        return make_partial_conjugation(graph, data["vertex"], data["part"])
    if kind in ("transvection", "fold", "twist"):
        f = make_transvection(graph, data["target"], data["vertex"])
        if kind != "transvection" and f.tag != kind:
            raise ValidityError("kind", f"transvection is a {f.tag}, not a {kind}")
        return f
    if kind == "graph_symmetry":
        return make_graph_symmetry(graph, data["permutation"])
    if kind == "inner":
        return conjugation(graph, Word.parse(data["word"], graph))
    raise ValidityError("generator", f"unknown generator kind {kind!r}")


def load_automorphisms(graph: SimplicialGraph, data) -> List[RaagMap]:
    """自己同型 JSON（単体または {"automorphisms": [...]} / リスト）を読み込む"""
    if isinstance(data, Mapping) and "automorphisms" in data:
        data = data["automorphisms"]
    if isinstance(data, Mapping):
        data = [data]
    return [generator_from_json(graph, item) for item in data]
