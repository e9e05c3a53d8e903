# scripts/graph_core.py
# raagkit - 単体グラフ Γ と誘導部分グラフの計算（link / star / join 分解 / 次元）
#
# 誘導部分グラフは頂点集合で一意に決まるので、VertexSet はビットマスクで持つ。

from dataclasses import dataclass
from itertools import combinations
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from scripts.raag_errors import GraphFormatError, GraphMismatchError, SubsetError


# --- データクラス ---

@dataclass(frozen=True)
class SimplicialGraph:
    """定義グラフ Γ（頂点ラベル + 近傍ビットマスク）"""
    labels: Tuple[str, ...]
    neighbours: Tuple[int, ...]

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise GraphFormatError(f"duplicate vertex labels: {self.labels}")
        if len(self.neighbours) != len(self.labels):
            raise GraphFormatError("adjacency does not match the vertex count")
        for v, nbrs in enumerate(self.neighbours):
            if nbrs >> v & 1:
                raise GraphFormatError(f"loop at vertex {self.labels[v]}")
            if nbrs >> len(self.labels):
                raise GraphFormatError(f"neighbour of {self.labels[v]} out of range")
            for u in _bits(nbrs):
                if not self.neighbours[u] >> v & 1:
                    raise GraphFormatError(
                        f"adjacency not symmetric: {self.labels[v]}-{self.labels[u]}")

    # --- 構成 ---

    @classmethod
    def from_edges(cls, labels: Sequence[str], edges: Iterable[Sequence[str]]) -> "SimplicialGraph":
        labels = tuple(str(x) for x in labels)
        index = {name: i for i, name in enumerate(labels)}
        nbrs = [0] * len(labels)
        seen = set()
        for edge in edges:
            if len(edge) != 2:
                raise GraphFormatError(f"edge must have two ends: {edge}")
            a, b = (str(x) for x in edge)
            if a not in index or b not in index:
                raise GraphFormatError(f"edge {a}-{b} uses an unknown vertex")
            if a == b:
                raise GraphFormatError(f"loop at vertex {a}")
            key = frozenset((a, b))
            if key in seen:
                raise GraphFormatError(f"duplicate edge {a}-{b}")
            seen.add(key)
            nbrs[index[a]] |= 1 << index[b]
            nbrs[index[b]] |= 1 << index[a]
        return cls(labels, tuple(nbrs))

    @classmethod
    def from_json(cls, data: Dict) -> "SimplicialGraph":
        """{"vertices": [...], "edges": [[u, v], ...]} 形式から生成"""
        if not isinstance(data, dict) or "vertices" not in data:
            raise GraphFormatError("graph JSON needs a 'vertices' list")
        return cls.from_edges(data["vertices"], data.get("edges", []))

    def to_json(self) -> Dict:
        return {"vertices": list(self.labels),
                "edges": [[self.labels[u], self.labels[v]] for u, v in self.edges()]}

    @classmethod
    def path(cls, labels: Sequence[str]) -> "SimplicialGraph":
        return cls.from_edges(labels, zip(labels, labels[1:]))

    @classmethod
    def cycle(cls, labels: Sequence[str]) -> "SimplicialGraph":
        return cls.from_edges(labels, list(zip(labels, labels[1:])) + [(labels[-1], labels[0])])

    @classmethod
    def complete(cls, labels: Sequence[str]) -> "SimplicialGraph":
        return cls.from_edges(labels, combinations(labels, 2))

    @classmethod
    def discrete(cls, labels: Sequence[str]) -> "SimplicialGraph":
        return cls.from_edges(labels, [])

    # --- 基本アクセス ---

    @property
    def vertex_count(self) -> int:
        return len(self.labels)

    @property
    def full_mask(self) -> int:
        return (1 << len(self.labels)) - 1

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise GraphFormatError(f"unknown vertex {label!r}") from None

    def adjacent(self, u: int, v: int) -> bool:
        return bool(self.neighbours[u] >> v & 1)

    def edges(self) -> List[Tuple[int, int]]:
        return [(u, v) for u in range(self.vertex_count)
                for v in _bits(self.neighbours[u]) if u < v]

    def vertices(self) -> "VertexSet":
        return VertexSet(self, self.full_mask)

    def empty(self) -> "VertexSet":
        return VertexSet(self, 0)

    def subset(self, labels: Iterable[str]) -> "VertexSet":
        mask = 0
        for name in labels:
            mask |= 1 << self.index(name)
        return VertexSet(self, mask)

    def vertex(self, label: str) -> "VertexSet":
        return VertexSet(self, 1 << self.index(label))

    def adjacency_matrix(self) -> np.ndarray:
        n = self.vertex_count
        adj = np.zeros((n, n), dtype=np.int32)
        for u, v in self.edges():
            adj[u, v] = adj[v, u] = 1
        return adj

    def to_networkx(self, members: Optional["VertexSet"] = None) -> nx.Graph:
        """誘導部分グラフを networkx.Graph に変換（ノードは頂点番号）"""
        mask = self.full_mask if members is None else members.mask
        g = nx.Graph()
        g.add_nodes_from(_bits(mask))
        g.add_edges_from((u, v) for u, v in self.edges() if mask >> u & 1 and mask >> v & 1)
        return g

    def induced(self, members: "VertexSet") -> "SimplicialGraph":
        """誘導部分グラフを独立した SimplicialGraph として取り出す"""
        kept = list(members)
        labels = [self.labels[v] for v in kept]
        edges = [(self.labels[u], self.labels[v]) for u, v in self.edges()
                 if members.mask >> u & 1 and members.mask >> v & 1]
        return SimplicialGraph.from_edges(labels, edges)

    def embed(self, other: "SimplicialGraph") -> Tuple[int, ...]:
        """other がラベル経由で self の誘導部分グラフであるとき、頂点番号の対応を返す"""
        mapping = tuple(self.index(name) for name in other.labels)
        for u, v in combinations(range(other.vertex_count), 2):
            if other.adjacent(u, v) != self.adjacent(mapping[u], mapping[v]):
                raise GraphMismatchError(
                    f"{other.labels[u]}-{other.labels[v]} adjacency differs from the ambient graph")
        return mapping

    def __str__(self) -> str:
        edges = ", ".join(f"{self.labels[u]}-{self.labels[v]}" for u, v in self.edges())
        return f"Γ({', '.join(self.labels)}; {edges})"


@dataclass(frozen=True)
class VertexSet:
    """Γ の頂点集合（誘導部分グラフ Δ, Σ, Θ, ... を表す）"""
    graph: SimplicialGraph
    mask: int

    def __post_init__(self):
        if self.mask < 0 or self.mask & ~self.graph.full_mask:
            raise GraphFormatError(f"vertex set {self.mask:b} outside the ambient graph")

    def _check(self, other: "VertexSet") -> None:
        if self.graph is not other.graph and self.graph != other.graph:
            raise GraphMismatchError("vertex sets live in different graphs")

    def _make(self, mask: int) -> "VertexSet":
        return VertexSet(self.graph, mask)

    def __iter__(self) -> Iterator[int]:
        return iter(_bits(self.mask))

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __contains__(self, v: int) -> bool:
        return bool(self.mask >> v & 1)

    def __or__(self, other: "VertexSet") -> "VertexSet":
        self._check(other)
        return self._make(self.mask | other.mask)

    def __and__(self, other: "VertexSet") -> "VertexSet":
        self._check(other)
        return self._make(self.mask & other.mask)

    def __sub__(self, other: "VertexSet") -> "VertexSet":
        self._check(other)
        return self._make(self.mask & ~other.mask)

    def __le__(self, other: "VertexSet") -> bool:
        self._check(other)
        return self.mask & ~other.mask == 0

    def __lt__(self, other: "VertexSet") -> bool:
        return self <= other and self.mask != other.mask

    def __ge__(self, other: "VertexSet") -> bool:
        return other <= self

    def __gt__(self, other: "VertexSet") -> bool:
        return other < self

    def __bool__(self) -> bool:
        return self.mask != 0

    def complement(self) -> "VertexSet":
        return self._make(self.graph.full_mask & ~self.mask)

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(self.graph.labels[v] for v in self)

    def sort_key(self) -> Tuple[int, ...]:
        """辞書式順序（頂点番号の昇順列）"""
        return tuple(self)

    def __str__(self) -> str:
        return "{" + ",".join(self.labels) + "}"

    __repr__ = __str__


@dataclass(frozen=True)
class JoinDecomposition:
    factors: Tuple[VertexSet, ...]
    z_part: VertexSet


def _bits(mask: int) -> List[int]:
    out = []
    v = 0
    while mask:
        if mask & 1:
            out.append(v)
        mask >>= 1
        v += 1
    return out


def _require_subset(s: VertexSet, t: VertexSet) -> None:
    if not s <= t:
        raise SubsetError(f"{s} is not contained in {t}")


# --- link / star 計算 ---

def link(s: VertexSet) -> VertexSet:
    """lk(S) = ⋂_{v∈S} lk(v)。lk(∅) は Γ 全体"""
    mask = s.graph.full_mask
    for v in s:
        mask &= s.graph.neighbours[v]
    return VertexSet(s.graph, mask)


def star(s: VertexSet) -> VertexSet:
    return link(s) | s


def extended_star(s: VertexSet) -> VertexSet:
    """ŝt(S) = st(lk(S))"""
    return star(link(s))


def restricted_link(s: VertexSet, t: VertexSet) -> VertexSet:
    _require_subset(s, t)
    return link(s) & t


def restricted_star(s: VertexSet, t: VertexSet) -> VertexSet:
    _require_subset(s, t)
    return star(s) & t


def boundary(s: VertexSet) -> VertexSet:
    """∂S: link が S に収まらない S の頂点"""
    mask = 0
    for v in s:
        if s.graph.neighbours[v] & ~s.mask:
            mask |= 1 << v
    return VertexSet(s.graph, mask)


def components(g, members: Optional[VertexSet] = None) -> List[VertexSet]:
    """連結成分（g は SimplicialGraph または VertexSet）"""
    if isinstance(g, VertexSet):
        members, g = g, g.graph
    nxg = g.to_networkx(members)
    found = []
    for comp in nx.connected_components(nxg):
        mask = 0
        for v in comp:
            mask |= 1 << v
        found.append(VertexSet(g, mask))
    return sorted(found, key=VertexSet.sort_key)


def join_decomposition(s: VertexSet) -> JoinDecomposition:
    """補グラフの連結成分が join 因子。単点因子の和が Z(S)"""
    g = s.graph
    complement = nx.complement(g.to_networkx(s))
    factors = []
    z_mask = 0
    for comp in nx.connected_components(complement):
        mask = 0
        for v in comp:
            mask |= 1 << v
        factors.append(VertexSet(g, mask))
        if len(comp) == 1:
            z_mask |= mask
    factors.sort(key=VertexSet.sort_key)
    return JoinDecomposition(tuple(factors), VertexSet(g, z_mask))


def centre(s: VertexSet) -> VertexSet:
    """Z(S)"""
    return join_decomposition(s).z_part


def is_join(s: VertexSet) -> bool:
    return len(join_decomposition(s).factors) > 1


def spans_join(s: VertexSet, t: VertexSet) -> bool:
    """S と T が互いに素で、S×T の全ての組が隣接する"""
    if (s & t):
        return False
    return t <= link(s) if s else True


def is_cone(s: VertexSet) -> bool:
    """S ⊆ st(v) となる v ∈ S が存在する"""
    return any(s <= star(VertexSet(s.graph, 1 << v)) for v in s)


def subgroup_identifications(s: VertexSet) -> Dict[str, VertexSet]:
    """N(A_S), Z(A_S), C(A_S) を生成する頂点集合"""
    z = centre(s)
    return {
        "normaliser": star(s),
        "centre": z,
        "centraliser": z | link(s),
    }


# --- 次元（最大クリーク） ---

def dimension(g: SimplicialGraph) -> int:
    """最大クリークの頂点数（分枝限定法、厳密解）"""
    n = g.vertex_count
    if n == 0:
        return 0

    adj = g.adjacency_matrix()
    # 次数の降順に並べると枝刈りが効く
    order = [int(v) for v in np.argsort(-adj.sum(axis=0), kind="stable")]
    best = 0

    def branch(candidates: int, size: int) -> None:
        nonlocal best
        if not candidates:
            best = max(best, size)
            return
        if size + bin(candidates).count("1") <= best:
            return
        for v in order:
            if not candidates >> v & 1:
                continue
            if size + bin(candidates).count("1") <= best:
                return
            branch(candidates & g.neighbours[v], size + 1)
            candidates &= ~(1 << v)

    branch(g.full_mask, 0)
    return best


def cliques(g: SimplicialGraph) -> List[VertexSet]:
    """空集合を含む全クリーク（Salvetti 複体のトーラスに対応）"""
    found = [g.empty()]
    for clique in nx.enumerate_all_cliques(g.to_networkx()):
        mask = 0
        for v in clique:
            mask |= 1 << v
        found.append(VertexSet(g, mask))
    return sorted(found, key=lambda c: (len(c), c.sort_key()))


def all_subsets(g: SimplicialGraph) -> Iterator[VertexSet]:
    for mask in range(1 << g.vertex_count):
        yield VertexSet(g, mask)
