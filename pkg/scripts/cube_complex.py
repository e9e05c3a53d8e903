# scripts/cube_complex.py
# raagkit - 計量立方複体、Salvetti 複体、マーキング、セル作用と誘導外部作用
#
# k-セルは 2k 個の面（軸0の下, 軸0の上, 軸1の下, ...）と軸ごとの辺長を持つ。
# 座標複体は細分した円周の積の部分複体で、セルをキー（因子ごとの (種類, 位置)）で引ける。
# マーキングは辺ラベル（A_Δ の語）で持ち、道の語はラベルの積で読む。

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product as iproduct
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import sympy
from joblib import Parallel, delayed
from sympy.matrices.normalforms import smith_normal_form

from scripts.aut_raag import RaagMap, outer_equal, substitute, verify_automorphism
from scripts.graph_core import SimplicialGraph, cliques, spans_join
from scripts.invariant_system import FiniteOuterGroup, check_table
from scripts.raag_errors import (
    ActionError, ComplexError, GraphMismatchError, NotAJoin, ValidityError,
)
from scripts.settings import get_setting, log_event, setup_logging
from scripts.word_calculus import Letter, NormalForm, Word, abelianize, identity, parse, reduce

logger = setup_logging(__name__)

# --- 定数 ---
VERTEX, EDGE = 0, 1
LOW, HIGH = 0, 1

CellKey = Tuple[Tuple[int, int], ...]
# (辺番号, 向き ±1) の列
EdgePath = List[Tuple[int, int]]


# --- データクラス ---

@dataclass(frozen=True)
class Cell:
    dim: int
    facets: Tuple[int, ...] = ()
    lengths: Tuple[Fraction, ...] = ()
    key: Optional[CellKey] = None

    def to_json(self) -> Dict:
        data = {"dim": self.dim, "facets": list(self.facets),
                "lengths": [str(x) for x in self.lengths]}
        if self.key is not None:
            data["key"] = [list(entry) for entry in self.key]
        return data

    @classmethod
    def from_json(cls, data: Mapping) -> "Cell":
        key = data.get("key")
        return cls(int(data["dim"]),
                   tuple(int(f) for f in data.get("facets", [])),
                   tuple(Fraction(x) for x in data.get("lengths", [])),
                   None if key is None else tuple((int(a), int(b)) for a, b in key))


@dataclass(frozen=True)
class Factor:
    """m 辺に細分した長さ length の円周"""
    name: str
    m: int
    length: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "length", Fraction(self.length))
        if self.m < 2:
            raise ComplexError(f"circle {self.name} needs at least 2 edges, got {self.m}")
        if self.length <= 0:
            raise ComplexError(f"circle {self.name} has non-positive length {self.length}")

    @property
    def edge_length(self) -> Fraction:
        return self.length / self.m

    def to_json(self) -> Dict:
        return {"name": self.name, "m": self.m, "length": str(self.length)}


@dataclass(frozen=True)
class CircleMotion:
    """Z/m 上の等長変換 p ↦ sign·p + shift（辺 p は [p, p+1]）"""
    sign: int = 1
    shift: int = 0

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ActionError(f"motion sign must be ±1, got {self.sign}")

    def vertex(self, p: int, m: int) -> int:
        return (self.sign * p + self.shift) % m

    def edge(self, p: int, m: int) -> int:
        if self.sign > 0:
            return (p + self.shift) % m
        return (self.shift - p - 1) % m

    def compose(self, other: "CircleMotion") -> "CircleMotion":
        """self ∘ other"""
        return CircleMotion(self.sign * other.sign, self.sign * other.shift + self.shift)

    def normalised(self, m: int) -> "CircleMotion":
        return CircleMotion(self.sign, self.shift % m)

    def scaled(self, k: int) -> "CircleMotion":
        return CircleMotion(self.sign, self.shift * k)

    def to_json(self) -> List[int]:
        return [self.sign, self.shift]


def _key_dim(key: CellKey) -> int:
    return sum(1 for kind, _ in key if kind == EDGE)


def _face_key(factors: Sequence[Factor], key: CellKey, f: int, side: int) -> CellKey:
    pos = key[f][1]
    p = pos if side == LOW else (pos + 1) % factors[f].m
    return key[:f] + ((VERTEX, p),) + key[f + 1:]


def _validate_cells(cells: Sequence[Cell]) -> None:
    if not cells:
        raise ComplexError("a complex needs at least one cell")
    for i, c in enumerate(cells):
        if c.dim < 0 or len(c.facets) != 2 * c.dim or len(c.lengths) != c.dim:
            raise ComplexError(f"cell {i} has inconsistent facet or length data")
        if any(x <= 0 for x in c.lengths):
            raise ComplexError(f"cell {i} has a non-positive edge length")
        for a in range(c.dim):
            for side in (LOW, HIGH):
                f = c.facets[2 * a + side]
                if not 0 <= f < len(cells) or cells[f].dim != c.dim - 1:
                    raise ComplexError(f"facet {f} of cell {i} is not a {c.dim - 1}-cell")
                if cells[f].lengths != c.lengths[:a] + c.lengths[a + 1:]:
                    raise ComplexError(f"facet {f} of cell {i} has the wrong lengths")
        # 軸 a を先に外すと軸 b の番号は b-1 になる
        for a in range(c.dim):
            for b in range(a + 1, c.dim):
                for s, t in iproduct((LOW, HIGH), repeat=2):
                    one = cells[c.facets[2 * a + s]].facets[2 * (b - 1) + t]
                    two = cells[c.facets[2 * b + t]].facets[2 * a + s]
                    if one != two:
                        raise ComplexError(f"faces of cell {i} do not commute on axes {a}, {b}")


@dataclass(frozen=True)
class CubeComplex:
    """次元ごとに並べたセル列（factors があれば座標複体）"""
    cells: Tuple[Cell, ...]
    factors: Optional[Tuple[Factor, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        if self.factors is not None:
            object.__setattr__(self, "factors", tuple(self.factors))
            for i, c in enumerate(self.cells):
                if c.key is None or len(c.key) != len(self.factors):
                    raise ComplexError(f"cell {i} has no coordinate key")
        _validate_cells(self.cells)

    # --- 構成 ---

    @classmethod
    def from_coordinates(cls, factors: Sequence[Factor], keys) -> "CubeComplex":
        """キーの集合を面で閉じ、(次元, キー) の順に並べた座標複体"""
        factors = tuple(factors)
        closed = set()
        stack = [tuple((int(a), int(b)) for a, b in key) for key in keys]
        while stack:
            key = stack.pop()
            if key in closed:
                continue
            if len(key) != len(factors):
                raise ComplexError(f"key {key} does not match {len(factors)} factors")
            for f, (kind, pos) in enumerate(key):
                if kind not in (VERTEX, EDGE) or not 0 <= pos < factors[f].m:
                    raise ComplexError(f"key entry {(kind, pos)} is outside circle {factors[f].name}")
            closed.add(key)
            for f, (kind, _) in enumerate(key):
                if kind == EDGE:
                    stack.append(_face_key(factors, key, f, LOW))
                    stack.append(_face_key(factors, key, f, HIGH))
        ordered = sorted(closed, key=lambda k: (_key_dim(k), k))
        index = {k: i for i, k in enumerate(ordered)}
        cells = []
        for key in ordered:
            axes = [f for f, (kind, _) in enumerate(key) if kind == EDGE]
            facets = []
            for f in axes:
                facets.append(index[_face_key(factors, key, f, LOW)])
                facets.append(index[_face_key(factors, key, f, HIGH)])
            cells.append(Cell(len(axes), tuple(facets),
                              tuple(factors[f].edge_length for f in axes), key))
        return cls(tuple(cells), factors)

    @classmethod
    def point(cls) -> "CubeComplex":
        return cls.from_coordinates((), [()])

    @classmethod
    def circle(cls, m: int, name: str = "s", length=1) -> "CubeComplex":
        factor = Factor(name, m, Fraction(length))
        return cls.from_coordinates((factor,), [((EDGE, p),) for p in range(m)])

    # --- 基本アクセス ---

    @cached_property
    def by_key(self) -> Dict[CellKey, int]:
        return {c.key: i for i, c in enumerate(self.cells) if c.key is not None}

    def cell_id(self, key: CellKey) -> int:
        try:
            return self.by_key[tuple(key)]
        except KeyError:
            raise ComplexError(f"no cell with key {key}") from None

    @property
    def dimension(self) -> int:
        return max(c.dim for c in self.cells)

    def ids(self, dim: int) -> List[int]:
        return [i for i, c in enumerate(self.cells) if c.dim == dim]

    def facet(self, c: int, axis: int, side: int) -> int:
        return self.cells[c].facets[2 * axis + side]

    def subface(self, c: int, fixed: Mapping[int, int]) -> int:
        """fixed の軸を指定の側に固定した面（大きい軸から外す）"""
        for axis in sorted(fixed, reverse=True):
            c = self.facet(c, axis, fixed[axis])
        return c

    def corner(self, c: int, sides: Sequence[int]) -> int:
        return self.subface(c, dict(enumerate(sides)))

    def corner_edge(self, c: int, sides: Sequence[int], axis: int) -> int:
        """角 sides から軸 axis 方向に出る辺"""
        return self.subface(c, {b: s for b, s in enumerate(sides) if b != axis})

    def endpoints(self, e: int) -> Tuple[int, int]:
        cell = self.cells[e]
        if cell.dim != 1:
            raise ComplexError(f"cell {e} is not an edge")
        return cell.facets[0], cell.facets[1]

    def axis_factor(self, e: int) -> int:
        """座標複体の辺が沿っている因子"""
        key = self.cells[e].key
        return next(f for f, (kind, _) in enumerate(key) if kind == EDGE)

    @cached_property
    def skeleton(self) -> nx.Graph:
        """1-骨格（平行辺は番号最小の辺で代表、ループ辺は除く）"""
        g = nx.Graph()
        g.add_nodes_from(self.ids(0))
        for e in self.ids(1):
            a, b = self.endpoints(e)
            if a != b and not g.has_edge(a, b):
                g.add_edge(a, b, edge=e)
        return g

    def is_connected(self) -> bool:
        return nx.is_connected(self.skeleton)

    def to_json(self) -> Dict:
        return {"cells": [c.to_json() for c in self.cells],
                "factors": None if self.factors is None else [f.to_json() for f in self.factors]}

    @classmethod
    def from_json(cls, data: Mapping) -> "CubeComplex":
        factors = data.get("factors")
        if factors is not None:
            factors = tuple(Factor(f["name"], int(f["m"]), Fraction(f["length"])) for f in factors)
        return cls(tuple(Cell.from_json(c) for c in data["cells"]), factors)


def torus_keys(factors: Sequence[Factor], axes, base: Optional[Sequence[int]] = None) -> List[CellKey]:
    """axes の因子を全周し、それ以外を base に固定したトーラスの最高次セル"""
    base = base or [0] * len(factors)
    axes = set(axes)
    ranges = [[(EDGE, p) for p in range(factors[f].m)] if f in axes else [(VERTEX, base[f])]
              for f in range(len(factors))]
    return [tuple(key) for key in iproduct(*ranges)]


def walk(X: CubeComplex, start: int, path: Sequence[Tuple[int, int]]) -> int:
    """道をたどって終点を返す（つながっていなければ ComplexError）"""
    v = start
    for e, s in path:
        a, b = X.endpoints(e)
        tail, head = (a, b) if s > 0 else (b, a)
        if tail != v:
            raise ComplexError(f"path breaks at edge {e}")
        v = head
    return v


def reverse_path(path: Sequence[Tuple[int, int]]) -> EdgePath:
    return [(e, -s) for e, s in reversed(path)]


def _oriented(X: CubeComplex, u: int, v: int) -> Tuple[int, int]:
    e = X.skeleton[u][v]["edge"]
    return (e, 1 if X.endpoints(e) == (u, v) else -1)


def _restricted_skeleton(X: CubeComplex, edges) -> nx.Graph:
    g = nx.Graph()
    for e in sorted(edges):
        a, b = X.endpoints(e)
        if a != b and not g.has_edge(a, b):
            g.add_edge(a, b, edge=e)
    return g


def shortest_path(X: CubeComplex, src: int, dst: int, edges=None) -> EdgePath:
    """1-骨格上の BFS 最短路（隣接頂点は番号順に調べる。edges で使える辺を制限）"""
    if src == dst:
        return []
    g = X.skeleton if edges is None else _restricted_skeleton(X, edges)
    if src not in g:
        raise ComplexError(f"vertex {src} is not on the allowed edges")
    pred = dict(nx.bfs_predecessors(g, src, sort_neighbors=sorted))
    if dst not in pred:
        raise ComplexError(f"vertex {dst} is not reachable from {src}")
    hops = []
    v = dst
    while v != src:
        u = pred[v]
        hops.append(_oriented(X, u, v))
        v = u
    return hops[::-1]


# --- マーキング ---

@dataclass(frozen=True)
class MarkedComplex:
    """基点・全域木・辺ラベルで π₁ を A_Δ と同一視した複体"""
    complex: CubeComplex
    graph: SimplicialGraph
    basepoint: int
    edge_words: Mapping[int, NormalForm] = field(default_factory=dict, compare=False)
    # 生成元ごとの基点ループ（無ければ generator_loops で探索）
    loops: Optional[Tuple[Tuple[Tuple[int, int], ...], ...]] = field(default=None, compare=False)

    def __post_init__(self):
        X = self.complex
        if X.cells[self.basepoint].dim != 0:
            raise ComplexError(f"basepoint {self.basepoint} is not a vertex")
        for e, w in self.edge_words.items():
            if X.cells[e].dim != 1:
                raise ComplexError(f"label on cell {e}, which is not an edge")
            if w.graph != self.graph:
                raise GraphMismatchError(f"label of edge {e} lives over another graph")
        if not X.is_connected():
            raise ComplexError("a marked complex must be connected")
        if self.loops is not None:
            loops = tuple(tuple((int(e), int(s)) for e, s in loop) for loop in self.loops)
            object.__setattr__(self, "loops", loops)
            if len(loops) != self.graph.vertex_count:
                raise ComplexError("one loop per generator is required")
            for loop in loops:
                if walk(X, self.basepoint, loop) != self.basepoint:
                    raise ComplexError("generator loop is not closed at the basepoint")

    def label(self, e: int) -> NormalForm:
        return self.edge_words.get(e, identity(self.graph))

    @cached_property
    def _tree(self) -> Dict[int, Tuple[int, int, int]]:
        parents = {}
        for u, v in nx.bfs_edges(self.complex.skeleton, self.basepoint, sort_neighbors=sorted):
            e, s = _oriented(self.complex, u, v)
            parents[v] = (u, e, s)
        return parents

    def tree_edges(self) -> List[int]:
        return sorted(e for _, e, _ in self._tree.values())

    def non_tree_edges(self) -> List[int]:
        tree = set(self.tree_edges())
        return [e for e in self.complex.ids(1) if e not in tree]

    def tree_path(self, v: int) -> EdgePath:
        """基点から v への木の道"""
        path = []
        while v != self.basepoint:
            u, e, s = self._tree[v]
            path.append((e, s))
            v = u
        return path[::-1]

    def path_word(self, path: Sequence[Tuple[int, int]]) -> NormalForm:
        letters: List[Letter] = []
        for e, s in path:
            w = self.label(e)
            letters.extend(w.letters if s > 0 else w.inverse().letters)
        return reduce(Word(self.graph, tuple(letters)))

    def lift(self, start: int, path: Sequence[Tuple[int, int]]) -> NormalForm:
        """木で基点につないだ閉路の語 P(start)·L(path)·P(end)⁻¹"""
        end = walk(self.complex, start, path)
        return (self.path_word(self.tree_path(start)) * self.path_word(path)
                * self.path_word(self.tree_path(end)).inverse())

    def marking(self) -> Dict[int, NormalForm]:
        """木に含まれない辺ごとの π₁ の元"""
        return {e: self.lift(self.complex.endpoints(e)[0], [(e, 1)]) for e in self.non_tree_edges()}

    def to_json(self) -> Dict:
        return {
            "complex": self.complex.to_json(),
            "graph": self.graph.to_json(),
            "basepoint": self.basepoint,
            "edge_words": {str(e): str(w) for e, w in sorted(self.edge_words.items())
                           if not w.is_identity()},
            "loops": None if self.loops is None else [[list(x) for x in loop] for loop in self.loops],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "MarkedComplex":
        graph = SimplicialGraph.from_json(data["graph"])
        words = {int(e): parse(w, graph) for e, w in data.get("edge_words", {}).items()}
        loops = data.get("loops")
        return cls(CubeComplex.from_json(data["complex"]), graph, int(data["basepoint"]),
                   words, None if loops is None else tuple(tuple(tuple(x) for x in loop)
                                                           for loop in loops))


def _gen(graph: SimplicialGraph, v: int) -> NormalForm:
    return NormalForm(graph, (Letter(v, 1),))


def point_complex() -> MarkedComplex:
    return MarkedComplex(CubeComplex.point(), SimplicialGraph.discrete([]), 0, {}, ())


def salvetti(graph: SimplicialGraph, subdivision: Optional[int] = None) -> MarkedComplex:
    """クリークごとのトーラスを基点 0 で貼り合わせた Salvetti 複体（各円周は m 辺）"""
    m = subdivision or get_setting('complex', 'subdivision', int)
    factors = tuple(Factor(label, m) for label in graph.labels)
    keys: List[CellKey] = []
    for clique in cliques(graph):
        keys.extend(torus_keys(factors, clique))
    X = CubeComplex.from_coordinates(factors, keys)
    n = graph.vertex_count
    base = X.cell_id(tuple((VERTEX, 0) for _ in range(n)))

    # 各円周の最後の辺だけが生成元を読む
    words = {}
    for e in X.ids(1):
        f = X.axis_factor(e)
        if X.cells[e].key[f][1] == m - 1:
            words[e] = _gen(graph, f)
    loops = []
    for v in range(n):
        loop = []
        for p in range(m):
            key = tuple((EDGE, p) if f == v else (VERTEX, 0) for f in range(n))
            loop.append((X.cell_id(key), 1))
        loops.append(tuple(loop))
    log_event(logger, "DEBUG", "Salvetti 複体を構成しました",
              vertices=n, cells=len(X.cells), subdivision=m)
    return MarkedComplex(X, graph, base, words, tuple(loops))


def generator_loops(M: MarkedComplex, depth: Optional[int] = None):
    """各生成元を読む基点ループ（保存済みが無ければ非木辺ループの積を BFS）"""
    if M.loops is not None:
        return M.loops
    depth = depth or get_setting('search', 'loop_search_depth', int)
    X = M.complex
    basic = []
    for e in M.non_tree_edges():
        a, b = X.endpoints(e)
        loop = M.tree_path(a) + [(e, 1)] + reverse_path(M.tree_path(b))
        basic.append((M.path_word(loop), loop))
        basic.append((M.path_word(loop).inverse(), reverse_path(loop)))

    start = identity(M.graph)
    seen = {start.letters: []}
    layer = [start]
    for _ in range(depth):
        nxt = []
        for word in layer:
            for w, loop in basic:
                product = word * w
                if product.letters not in seen:
                    seen[product.letters] = seen[word.letters] + loop
                    nxt.append(product)
        layer = nxt
    loops = []
    for v in range(M.graph.vertex_count):
        found = seen.get((Letter(v, 1),))
        if found is None:
            raise ComplexError(
                f"no loop reading {M.graph.labels[v]} within {depth} basic loops")
        loops.append(tuple(found))
    return tuple(loops)


def square_boundary(X: CubeComplex, c: int) -> EdgePath:
    """下·右·上⁻¹·左⁻¹"""
    bottom, top = X.facet(c, 1, LOW), X.facet(c, 1, HIGH)
    left, right = X.facet(c, 0, LOW), X.facet(c, 0, HIGH)
    return [(bottom, 1), (right, 1), (top, -1), (left, -1)]


def verify_marking(M: MarkedComplex) -> MarkedComplex:
    """2-セルの境界が ε、生成元ループが生成元を読む、可換化で全射"""
    X = M.complex
    for c in X.ids(2):
        word = M.path_word(square_boundary(X, c))
        if not word.is_identity():
            raise ComplexError(f"boundary of square {c} reads {word}, not ε")
    for v, loop in enumerate(generator_loops(M)):
        if M.path_word(loop) != _gen(M.graph, v):
            raise ComplexError(f"loop {v} does not read {M.graph.labels[v]}")

    n = M.graph.vertex_count
    columns = [abelianize(w) for w in M.marking().values()]
    if n and not columns:
        raise ComplexError("marking is not surjective on H₁")
    if n:
        snf = smith_normal_form(sympy.Matrix(np.column_stack(columns).tolist()), domain=sympy.ZZ)
        diagonal = [snf[i, i] for i in range(min(snf.shape))]
        if len(diagonal) < n or any(abs(d) != 1 for d in diagonal[:n]):
            raise ComplexError(f"marking is not surjective on H₁ (invariant factors {diagonal})")
    return M


# --- NPC 判定 ---

@dataclass(frozen=True)
class NPCReport:
    ok: bool
    witness: Optional[Dict] = None

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> Dict:
        return {"ok": self.ok, "witness": self.witness}


def _corner_simplices(X: CubeComplex) -> Dict[int, List[Tuple[Tuple[int, int], ...]]]:
    """頂点ごとのリンクの単体（セルの角ごとに1つ、ループ辺は2つのリンク頂点を与える）"""
    per_vertex: Dict[int, List] = {v: [] for v in X.ids(0)}
    for c, cell in enumerate(X.cells):
        if cell.dim == 0:
            continue
        for sides in iproduct((LOW, HIGH), repeat=cell.dim):
            v = X.corner(c, sides)
            per_vertex[v].append(tuple((X.corner_edge(c, sides, a), sides[a])
                                       for a in range(cell.dim)))
    return per_vertex


def _check_link(v: int, simplices) -> Optional[Dict]:
    seen = set()
    for simplex in simplices:
        points = frozenset(simplex)
        if len(points) < len(simplex):
            return {"vertex": v, "simplex": [list(x) for x in sorted(simplex)],
                    "reason": "repeated_vertex"}
        if points in seen:
            return {"vertex": v, "simplex": [list(x) for x in sorted(simplex)],
                    "reason": "duplicate_simplex"}
        seen.add(points)

    g = nx.Graph()
    g.add_nodes_from(sorted(s[0] for s in simplices if len(s) == 1))
    g.add_edges_from(sorted(tuple(sorted(s)) for s in simplices if len(s) == 2))
    for clique in nx.enumerate_all_cliques(g):
        if len(clique) >= 3 and frozenset(clique) not in seen:
            return {"vertex": v, "simplex": [list(x) for x in sorted(clique)],
                    "reason": "empty_simplex"}
    return None


def npc_check(X: CubeComplex, jobs: Optional[int] = None) -> NPCReport:
    """全頂点のリンクが単体的かつ旗複体か"""
    jobs = jobs or get_setting('performance', 'jobs', int)
    items = sorted(_corner_simplices(X).items())
    if jobs > 1:
        results = Parallel(n_jobs=jobs)(delayed(_check_link)(v, s) for v, s in items)
    else:
        results = [_check_link(v, s) for v, s in items]
    for witness in results:
        if witness is not None:
            log_event(logger, "DEBUG", "リンク条件の違反", **witness)
            return NPCReport(False, witness)
    return NPCReport(True)


# --- 積 ---

def product_complex(X: CubeComplex, Y: CubeComplex) -> Tuple[CubeComplex, Dict[Tuple[int, int], int]]:
    """セルの組からなる積複体と、組 → セル番号の対応"""
    pairs = list(iproduct(range(len(X.cells)), range(len(Y.cells))))
    if X.factors is not None and Y.factors is not None:
        Z = CubeComplex.from_coordinates(X.factors + Y.factors,
                                         [X.cells[i].key + Y.cells[j].key for i, j in pairs])
        return Z, {(i, j): Z.cell_id(X.cells[i].key + Y.cells[j].key) for i, j in pairs}

    pairs.sort(key=lambda p: (X.cells[p[0]].dim + Y.cells[p[1]].dim, p))
    index = {p: n for n, p in enumerate(pairs)}
    cells = []
    for i, j in pairs:
        a, b = X.cells[i], Y.cells[j]
        facets = [index[(f, j)] for f in a.facets] + [index[(i, f)] for f in b.facets]
        cells.append(Cell(a.dim + b.dim, tuple(facets), a.lengths + b.lengths))
    return CubeComplex(tuple(cells)), index


def _join_graph(left: SimplicialGraph, right: SimplicialGraph) -> SimplicialGraph:
    edges = [(left.labels[u], left.labels[v]) for u, v in left.edges()]
    edges += [(right.labels[u], right.labels[v]) for u, v in right.edges()]
    edges += [(a, b) for a in left.labels for b in right.labels]
    return SimplicialGraph.from_edges(left.labels + right.labels, edges)


def product(X: MarkedComplex, Y: MarkedComplex,
            target: Optional[SimplicialGraph] = None) -> MarkedComplex:
    """Δ₁ ∗ Δ₂ 上の積マーキング（ラベルは因子ごとに運ぶ）"""
    if set(X.graph.labels) & set(Y.graph.labels):
        raise NotAJoin(f"{X.graph} and {Y.graph} share vertices")
    if target is None:
        graph = _join_graph(X.graph, Y.graph)
    else:
        d1, d2 = target.subset(X.graph.labels), target.subset(Y.graph.labels)
        if not spans_join(d1, d2):
            raise NotAJoin(f"{d1} and {d2} do not span a join in {target}")
        graph = target.induced(d1 | d2)
    for part in (X.graph, Y.graph):
        if part.vertex_count:
            graph.embed(part)

    Z, index = product_complex(X.complex, Y.complex)
    words = {}
    for (i, j), c in index.items():
        if Z.cells[c].dim != 1:
            continue
        if X.complex.cells[i].dim == 1:
            w = X.label(i)
        else:
            w = Y.label(j)
        if not w.is_identity():
            words[c] = reduce(w.transport(graph))

    loops_x, loops_y = generator_loops(X), generator_loops(Y)
    loops = []
    for name in graph.labels:
        if name in X.graph.labels:
            loop = loops_x[X.graph.index(name)]
            loops.append(tuple((index[(e, Y.basepoint)], s) for e, s in loop))
        else:
            loop = loops_y[Y.graph.index(name)]
            loops.append(tuple((index[(X.basepoint, e)], s) for e, s in loop))
    return MarkedComplex(Z, graph, index[(X.basepoint, Y.basepoint)], words, tuple(loops))


# --- 群作用 ---

@dataclass(frozen=True)
class ComplexAction:
    """有限群のセル置換による作用（table[i][j] は e_i∘e_j）"""
    complex: CubeComplex
    table: np.ndarray = field(compare=False, repr=False)
    permutations: Tuple[Tuple[int, ...], ...] = ()
    # 座標複体では因子ごとの円周運動も持つ
    motions: Optional[Tuple[Tuple[CircleMotion, ...], ...]] = field(default=None, compare=False)
    identity: int = 0

    def __post_init__(self):
        table = np.asarray(self.table, dtype=np.int64)
        object.__setattr__(self, "table", table)
        perms = tuple(tuple(int(x) for x in p) for p in self.permutations)
        object.__setattr__(self, "permutations", perms)
        try:
            check_table(table, self.identity, len(perms))
        except ValidityError as e:
            raise ActionError(str(e)) from e
        X = self.complex
        n = len(X.cells)
        for h, perm in enumerate(perms):
            if sorted(perm) != list(range(n)):
                raise ActionError(f"element {h} does not permute the cells")
            for c, img in enumerate(perm):
                a, b = X.cells[c], X.cells[img]
                if a.dim != b.dim or sorted(a.lengths) != sorted(b.lengths):
                    raise ActionError(f"element {h} maps cell {c} to a non-isometric cell")
                if sorted(perm[f] for f in a.facets) != sorted(b.facets):
                    raise ActionError(f"element {h} does not respect the facets of cell {c}")
        P = np.asarray(perms, dtype=np.int64).reshape(len(perms), n)
        if not np.array_equal(P[self.identity], np.arange(n)):
            raise ActionError("the identity element moves cells")
        # P[h_i h_j] = P[h_i] ∘ P[h_j]
        composed = P[np.arange(len(perms))[:, None, None], P[None, :, :]]
        if not np.array_equal(P[table], composed):
            raise ActionError("permutations do not compose as the group table says")

    @property
    def order(self) -> int:
        return len(self.permutations)

    def act(self, h: int, c: int) -> int:
        return self.permutations[h][c]

    def multiply(self, i: int, j: int) -> int:
        return int(self.table[i, j])

    def inverse_element(self, h: int) -> int:
        return int(np.flatnonzero(self.table[h] == self.identity)[0])

    def element_order(self, h: int) -> int:
        k, x = 1, h
        while x != self.identity:
            x = self.multiply(x, h)
            k += 1
        return k

    def invariant_cells(self) -> List[int]:
        return [c for c in range(len(self.complex.cells))
                if all(perm[c] == c for perm in self.permutations)]

    def to_json(self) -> Dict:
        motions = None
        if self.motions is not None:
            motions = [[m.to_json() for m in per] for per in self.motions]
        return {"table": self.table.tolist(), "identity": self.identity,
                "permutations": [list(p) for p in self.permutations], "motions": motions}

    @classmethod
    def from_json(cls, data: Mapping, complex: CubeComplex) -> "ComplexAction":
        motions = data.get("motions")
        if motions is not None:
            motions = tuple(tuple(CircleMotion(int(s), int(t)) for s, t in per) for per in motions)
        return cls(complex, np.asarray(data["table"], dtype=np.int64),
                   tuple(tuple(p) for p in data["permutations"]), motions,
                   int(data.get("identity", 0)))


def trivial_action(X: CubeComplex) -> ComplexAction:
    motions = None if X.factors is None else ((CircleMotion(),) * len(X.factors),)
    return ComplexAction(X, np.zeros((1, 1), dtype=np.int64),
                         (tuple(range(len(X.cells))),), motions)


def _move_key(factors: Sequence[Factor], motions: Sequence[CircleMotion], key: CellKey) -> CellKey:
    moved = []
    for factor, motion, (kind, pos) in zip(factors, motions, key):
        if kind == VERTEX:
            moved.append((VERTEX, motion.vertex(pos, factor.m)))
        else:
            moved.append((EDGE, motion.edge(pos, factor.m)))
    return tuple(moved)


def coordinate_action(X: CubeComplex, table, motions) -> ComplexAction:
    """因子ごとの円周運動から座標複体への作用を作る"""
    if X.factors is None:
        raise ComplexError("motions act only on coordinate complexes")
    perms = []
    normalised = []
    for h, per in enumerate(motions):
        per = tuple(per)
        if len(per) != len(X.factors):
            raise ActionError(f"element {h} needs one motion per circle factor")
        per = tuple(m.normalised(f.m) for m, f in zip(per, X.factors))
        normalised.append(per)
        perm = []
        for cell in X.cells:
            key = _move_key(X.factors, per, cell.key)
            if key not in X.by_key:
                raise ActionError(f"element {h} moves cell {cell.key} out of the complex")
            perm.append(X.by_key[key])
        perms.append(tuple(perm))
    return ComplexAction(X, np.asarray(table, dtype=np.int64), tuple(perms), tuple(normalised))


# --- 細分 ---

def _factor_index(X: CubeComplex, factor: Union[int, str]) -> int:
    if X.factors is None:
        raise ComplexError("only coordinate complexes can be subdivided")
    if isinstance(factor, str):
        names = [f.name for f in X.factors]
        if factor not in names:
            raise ComplexError(f"no circle factor named {factor!r}")
        return names.index(factor)
    return factor


def subdivide_complex(X: CubeComplex, factor: Union[int, str], k: int) -> CubeComplex:
    """因子 factor の各辺を k 等分した座標複体"""
    f = _factor_index(X, factor)
    if k < 1:
        raise ComplexError(f"subdivision factor must be positive, got {k}")
    old = X.factors[f]
    factors = X.factors[:f] + (Factor(old.name, old.m * k, old.length),) + X.factors[f + 1:]
    keys = []
    for cell in X.cells:
        kind, pos = cell.key[f]
        if kind == VERTEX:
            options = [(VERTEX, pos * k)]
        else:
            options = [(EDGE, pos * k + j) for j in range(k)]
        for entry in options:
            keys.append(cell.key[:f] + (entry,) + cell.key[f + 1:])
    return CubeComplex.from_coordinates(factors, keys)


def subdivide(M: MarkedComplex, factor: Union[int, str], k: int) -> MarkedComplex:
    """マーキングごと細分する。ラベルは各旧辺の最後の小辺と、下側の旧辺に平行な辺に載せる"""
    X = M.complex
    f = _factor_index(X, factor)
    Y = subdivide_complex(X, f, k)

    def old_key(key: CellKey, entry) -> CellKey:
        return key[:f] + (entry,) + key[f + 1:]

    words = {}
    for e in Y.ids(1):
        key = Y.cells[e].key
        kind, pos = key[f]
        p, j = divmod(pos, k)
        if kind == EDGE:
            if j != k - 1:
                continue
            w = M.label(X.cell_id(old_key(key, (EDGE, p))))
        else:
            w = M.label(X.cell_id(old_key(key, (VERTEX, p))))
        if not w.is_identity():
            words[e] = w

    def image(path) -> Tuple[Tuple[int, int], ...]:
        out: EdgePath = []
        for e, s in path:
            key = X.cells[e].key
            kind, pos = key[f]
            if kind == EDGE:
                pieces = [(Y.cell_id(old_key(key, (EDGE, pos * k + j))), 1) for j in range(k)]
                out.extend(pieces if s > 0 else reverse_path(pieces))
            else:
                out.append((Y.cell_id(old_key(key, (VERTEX, pos * k))), s))
        return tuple(out)

    base_key = X.cells[M.basepoint].key
    basepoint = Y.cell_id(old_key(base_key, (VERTEX, base_key[f][1] * k)))
    loops = tuple(image(loop) for loop in generator_loops(M))
    return MarkedComplex(Y, M.graph, basepoint, words, loops)


def subdivide_action(A: ComplexAction, Y: CubeComplex, factor: Union[int, str], k: int) -> ComplexAction:
    """細分した複体 Y へ作用を移す（回転量を k 倍）"""
    if A.motions is None:
        raise ActionError("only motion-based actions can be subdivided")
    f = _factor_index(A.complex, factor)
    motions = [tuple(m.scaled(k) if i == f else m for i, m in enumerate(per)) for per in A.motions]
    return coordinate_action(Y, A.table, motions)


# --- 誘導外部作用 ---

def map_path(A: ComplexAction, h: int, path: Sequence[Tuple[int, int]]) -> EdgePath:
    X = A.complex
    perm = A.permutations[h]
    out = []
    for e, s in path:
        a, b = X.endpoints(e)
        img = perm[e]
        c, d = X.endpoints(img)
        if c == d:
            raise ActionError(f"edge {img} is a loop, its orientation is ambiguous")
        if (perm[a], perm[b]) == (c, d):
            out.append((img, s))
        elif (perm[a], perm[b]) == (d, c):
            out.append((img, -s))
        else:
            raise ActionError(f"element {h} does not map edge {e} onto edge {img}")
    return out


@dataclass(frozen=True)
class Representative:
    """h の幾何的代表 h_b と、基点を引き戻す道 γ(h)"""
    element: int
    automorphism: RaagMap
    basepoint: int
    path: Tuple[Tuple[int, int], ...]

    def to_json(self) -> Dict:
        return {"element": self.element, "basepoint": self.basepoint,
                "path": [list(x) for x in self.path],
                "automorphism": self.automorphism.to_json()}


def geometric_representative(M: MarkedComplex, A: ComplexAction, h: int,
                             basepoint: Optional[int] = None, edges=None) -> Representative:
    """h(λ_v) を γ(h) で基点 b に引き戻して読む自己同型（γ は edges の中の最短路）"""
    if A.complex != M.complex:
        raise ActionError("action and marked complex use different complexes")
    X = M.complex
    graph = M.graph
    b = M.basepoint if basepoint is None else basepoint
    if X.cells[b].dim != 0:
        raise ComplexError(f"basepoint {b} is not a vertex")

    delta = M.tree_path(b)
    delta_word = M.path_word(delta)
    rebased = [reverse_path(delta) + list(loop) + delta for loop in generator_loops(M)]

    def sigma(path) -> NormalForm:
        return delta_word * M.path_word(path) * delta_word.inverse()

    def images_for(g: int):
        gamma = shortest_path(X, b, A.act(g, b), edges)
        images = tuple(sigma(gamma + map_path(A, g, loop) + reverse_path(gamma))
                       for loop in rebased)
        return gamma, images

    gamma, images = images_for(h)
    gamma_inv, inv_images = images_for(A.inverse_element(h))
    # h_b∘g_b = c(k⁻¹)（g = h⁻¹）なので h_b⁻¹(v) = g_b(k⁻¹·v·k)
    k = sigma(gamma + map_path(A, h, gamma_inv))
    inverse_images = tuple(substitute(inv_images, k.inverse() * _gen(graph, v) * k)
                           for v in range(graph.vertex_count))
    f = verify_automorphism(RaagMap(graph, images, inverse_images, "composite", None))
    return Representative(h, f, b, tuple(gamma))


def induced_outer_action(M: MarkedComplex, A: ComplexAction, h: int,
                         basepoint: Optional[int] = None) -> RaagMap:
    return geometric_representative(M, A, h, basepoint).automorphism


def realises(M: MarkedComplex, A: ComplexAction, phi: FiniteOuterGroup,
             bound: Optional[int] = None) -> bool:
    """全ての h で induced_outer_action(h) と φ(h) が外部同値か"""
    if phi.graph != M.graph:
        raise ActionError("φ acts on another graph than the marking")
    if phi.order != A.order or phi.identity != A.identity or not np.array_equal(phi.table, A.table):
        raise ActionError("the complex action and φ use different group tables")
    for h in range(A.order):
        rep = induced_outer_action(M, A, h)
        if not outer_equal(rep, phi.elements[h], bound):
            log_event(logger, "INFO", "誘導外部作用が φ と一致しません",
                      element=h, induced=str(rep), expected=str(phi.elements[h]))
            return False
    return True


# --- 円周作用の不変量 ---

def circle_motion(A: ComplexAction, h: int, factor: int = 0) -> CircleMotion:
    """h が因子 factor に与える運動（保存されていなければ単一円周から復元）"""
    if A.motions is not None:
        return A.motions[h][factor]
    X = A.complex
    if X.factors is None or len(X.factors) != 1:
        raise ComplexError("not a circle action")
    m = X.factors[0].m
    p0 = X.cells[A.act(h, X.cell_id(((VERTEX, 0),)))].key[0][1]
    e0 = X.cells[A.act(h, X.cell_id(((EDGE, 0),)))].key[0][1]
    if e0 == p0:
        return CircleMotion(1, p0)
    return CircleMotion(-1, p0).normalised(m)


def rotation_invariant(A: ComplexAction, h: int, factor: Optional[int] = None) -> Dict:
    """回転なら K(h) = ord(h)·μ/m mod ord(h)、反転なら固定点"""
    X = A.complex
    if X.factors is None or (factor is None and len(X.factors) != 1):
        raise ComplexError("rotation invariants need a circle factor")
    f = 0 if factor is None else factor
    m = X.factors[f].m
    motion = circle_motion(A, h, f).normalised(m)
    if motion.sign > 0:
        order = A.element_order(h)
        k = Fraction(order * motion.shift, m)
        if k.denominator != 1:
            raise ActionError(f"rotation by {motion.shift} of {m} has no order dividing {order}")
        return {"kind": "rotation", "shift": motion.shift, "order": order,
                "residue": int(k) % order}
    t = motion.shift
    return {
        "kind": "flip",
        "shift": t,
        "fixed_vertices": [p for p in range(m) if (2 * p - t) % m == 0],
        "fixed_edges": [p for p in range(m) if (2 * p - t + 1) % m == 0],
    }
