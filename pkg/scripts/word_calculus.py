# scripts/word_calculus.py
# raagkit - A_Γ の語: 正規形・巡回簡約・共役判定
#
# 規約: 共役写像は g⁻¹ w g。cyclically_reduce は w = y⁻¹·core·y となる (y, core) を返し、
# is_conjugate は g⁻¹·w1·g = w2 となる g を返す。

from collections import deque
from dataclasses import dataclass
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from scripts.graph_core import SimplicialGraph, VertexSet
from scripts.raag_errors import GraphMismatchError, WordFormatError
from scripts.settings import log_event, setup_logging

logger = setup_logging(__name__)

# --- 定数 ---
# 巡回類の BFS を行う核の長さの目安（これを超えると警告のみ）
CORE_LENGTH_LIMIT = 16


class Letter(NamedTuple):
    vertex: int
    sign: int

    def inverse(self) -> "Letter":
        return Letter(self.vertex, -self.sign)

    def key(self) -> Tuple[int, int]:
        # (頂点番号, + < −)
        return (self.vertex, 0 if self.sign > 0 else 1)


@dataclass(frozen=True)
class Word:
    """Γ ∪ Γ⁻¹ 上の任意の語（簡約されているとは限らない）"""
    graph: SimplicialGraph
    letters: Tuple[Letter, ...] = ()

    def __post_init__(self):
        n = self.graph.vertex_count
        for letter in self.letters:
            if not 0 <= letter.vertex < n or letter.sign not in (1, -1):
                raise WordFormatError(f"invalid letter {letter}")

    # --- 構成 ---

    @classmethod
    def parse(cls, text: str, graph: SimplicialGraph) -> "Word":
        """空白区切りのトークン `a`, `a^-1`（空文字列は単位元）"""
        letters = []
        for token in text.replace("⁻¹", "^-1").split():
            name, sign = token, 1
            if token.endswith("^-1"):
                name, sign = token[:-3], -1
            elif token.endswith("^1"):
                name = token[:-2]
            if name not in graph.labels:
                raise WordFormatError(f"unknown generator {name!r} in {text!r}")
            letters.append(Letter(graph.labels.index(name), sign))
        return cls(graph, tuple(letters))

    @classmethod
    def identity(cls, graph: SimplicialGraph) -> "Word":
        return cls(graph, ())

    @classmethod
    def generator(cls, graph: SimplicialGraph, v: int, sign: int = 1) -> "Word":
        return cls(graph, (Letter(v, sign),))

    def _check(self, other: "Word") -> None:
        if self.graph is not other.graph and self.graph != other.graph:
            raise GraphMismatchError("words over different graphs")

    def __mul__(self, other: "Word") -> "Word":
        self._check(other)
        return Word(self.graph, self.letters + other.letters)

    def inverse(self) -> "Word":
        return Word(self.graph, tuple(l.inverse() for l in reversed(self.letters)))

    def __pow__(self, k: int) -> "Word":
        base = self if k >= 0 else self.inverse()
        return Word(self.graph, base.letters * abs(k))

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        parts = []
        for letter in self.letters:
            name = self.graph.labels[letter.vertex]
            parts.append(name if letter.sign > 0 else f"{name}^-1")
        return " ".join(parts)

    def reduce(self) -> "NormalForm":
        return reduce(self)

    def transport(self, graph: SimplicialGraph) -> "Word":
        """ラベルを介して別のグラフ上の語に移す"""
        letters = []
        for letter in self.letters:
            letters.append(Letter(graph.index(self.graph.labels[letter.vertex]), letter.sign))
        return Word(graph, tuple(letters))


@dataclass(frozen=True)
class NormalForm(Word):
    """簡約済みで、swap 同値類の中で辞書式最小の代表"""

    def is_identity(self) -> bool:
        return not self.letters

    def __mul__(self, other: Word) -> "NormalForm":
        return reduce(Word.__mul__(self, other))

    def inverse(self) -> "NormalForm":
        return reduce(Word.inverse(self))

    def __pow__(self, k: int) -> "NormalForm":
        return reduce(Word.__pow__(self, k))


# --- 正規形 ---

def _commute(graph: SimplicialGraph, u: int, v: int) -> bool:
    return graph.adjacent(u, v)


def _free_reduce(graph: SimplicialGraph, letters: Iterable[Letter]) -> List[Letter]:
    """追加する文字ごとに、可換な文字を飛び越えて逆元と打ち消す"""
    out: List[Letter] = []
    for letter in letters:
        cancelled = False
        for j in range(len(out) - 1, -1, -1):
            other = out[j]
            if other.vertex == letter.vertex:
                if other.sign == -letter.sign:
                    del out[j]
                    cancelled = True
                break
            if not _commute(graph, other.vertex, letter.vertex):
                break
        if not cancelled:
            out.append(letter)
    return out


def _canonical_order(graph: SimplicialGraph, letters: Sequence[Letter]) -> Tuple[Letter, ...]:
    """先頭に持ってこられる文字のうち最小のものを貪欲に取り出す"""
    rest = list(letters)
    out = []
    while rest:
        best = None
        for i, letter in enumerate(rest):
            if all(_commute(graph, rest[j].vertex, letter.vertex) for j in range(i)):
                if best is None or letter.key() < rest[best].key():
                    best = i
        out.append(rest.pop(best))
    return tuple(out)


def reduce(w: Word) -> NormalForm:
    """簡約 + 辞書式最小の trace 代表。同じ群元なら同じ NormalForm"""
    if isinstance(w, NormalForm):
        return w
    reduced = _free_reduce(w.graph, w.letters)
    return NormalForm(w.graph, _canonical_order(w.graph, reduced))


def parse(text: str, graph: SimplicialGraph) -> NormalForm:
    return reduce(Word.parse(text, graph))


def identity(graph: SimplicialGraph) -> NormalForm:
    return NormalForm(graph, ())


def commutator(u: Word, v: Word) -> NormalForm:
    """[u, v] = u⁻¹ v⁻¹ u v"""
    return reduce(u.inverse() * v.inverse() * u * v)


def conjugate(w: Word, g: Word) -> NormalForm:
    """g⁻¹ w g"""
    return reduce(g.inverse() * w * g)


# --- 巡回簡約 ---

def _front_movable(graph: SimplicialGraph, letters: Sequence[Letter], i: int) -> bool:
    return all(_commute(graph, letters[j].vertex, letters[i].vertex) for j in range(i))


def _back_movable(graph: SimplicialGraph, letters: Sequence[Letter], i: int) -> bool:
    return all(_commute(graph, letters[j].vertex, letters[i].vertex)
               for j in range(i + 1, len(letters)))


def cyclically_reduce(w: Word) -> Tuple[NormalForm, NormalForm]:
    """w = y⁻¹·core·y となる (y, core)。core は簡約も巡回簡約もできない"""
    graph = w.graph
    core = list(reduce(w).letters)
    y = identity(graph)
    changed = True
    while changed:
        changed = False
        for i, letter in enumerate(core):
            if not _front_movable(graph, core, i):
                continue
            for j in range(len(core) - 1, i, -1):
                if core[j] == letter.inverse() and _back_movable(graph, core, j):
                    # core = l·m·l⁻¹ なので y ← l⁻¹·y
                    del core[j]
                    del core[i]
                    y = reduce(Word.generator(graph, letter.vertex, -letter.sign) * y)
                    changed = True
                    break
            if changed:
                break
    return y, reduce(Word(graph, tuple(core)))


def is_cyclically_reduced(w: Word) -> bool:
    y, core = cyclically_reduce(w)
    return y.is_identity() and core.letters == reduce(w).letters


def _rotation_moves(core: NormalForm) -> Iterable[Tuple[Letter, NormalForm]]:
    """先頭に移せる文字 l ごとに l⁻¹·core·l を返す"""
    graph = core.graph
    letters = core.letters
    for i, letter in enumerate(letters):
        if _front_movable(graph, letters, i):
            rest = letters[:i] + letters[i + 1:] + (letter,)
            yield letter, reduce(Word(graph, rest))


def is_conjugate(w1: Word, w2: Word) -> Optional[NormalForm]:
    """g⁻¹·w1·g = w2 となる g（共役でなければ None）"""
    w1._check(w2)
    graph = w1.graph
    y1, c1 = cyclically_reduce(w1)
    y2, c2 = cyclically_reduce(w2)

    if len(c1) != len(c2):
        return None
    if not np.array_equal(abelianize(c1), abelianize(c2)):
        return None
    if len(c1) > CORE_LENGTH_LIMIT:
        log_event(logger, "WARN", "核が長いので共役判定の探索が大きくなります",
                  core_length=len(c1), limit=CORE_LENGTH_LIMIT)

    # 核の swap + 回転軌道を BFS（k⁻¹·c1·k = 現在の核）
    seen: Dict[Tuple[Letter, ...], NormalForm] = {c1.letters: identity(graph)}
    queue = deque([c1])
    found: Optional[NormalForm] = None
    while queue:
        current = queue.popleft()
        k = seen[current.letters]
        if current.letters == c2.letters:
            found = k
            break
        for letter, rotated in _rotation_moves(current):
            if rotated.letters not in seen:
                seen[rotated.letters] = reduce(k * Word.generator(graph, letter.vertex, letter.sign))
                queue.append(rotated)
    if found is None:
        return None
    # w1 = y1⁻¹ c1 y1, w2 = y2⁻¹ c2 y2, k⁻¹ c1 k = c2 より g = y1⁻¹·k·y2
    return reduce(y1.inverse() * found * y2)


# --- 台・特殊部分群・可換化 ---

def support(w: Word) -> VertexSet:
    mask = 0
    for letter in reduce(w).letters:
        mask |= 1 << letter.vertex
    return VertexSet(w.graph, mask)


def in_special_subgroup(w: Word, delta: VertexSet) -> bool:
    return support(w) <= delta


def abelianize(w: Word) -> np.ndarray:
    """指数和ベクトル（H₁(A_Γ) = Z^n での像）"""
    vec = np.zeros(w.graph.vertex_count, dtype=np.int64)
    for letter in w.letters:
        vec[letter.vertex] += letter.sign
    return vec


def conjugates_into(g: Word, delta: VertexSet, sigma: VertexSet) -> bool:
    """g⁻¹·A_Δ·g ≤ A_Σ を生成元で判定"""
    return all(in_special_subgroup(conjugate(Word.generator(g.graph, v), g), sigma)
               for v in delta)


def ball(graph: SimplicialGraph, radius: int,
         alphabet: Optional[VertexSet] = None) -> List[NormalForm]:
    """長さ radius 以下の群元（BFS、重複なし）"""
    verts = list(alphabet) if alphabet is not None else list(range(graph.vertex_count))
    letters = [Letter(v, s) for v in verts for s in (1, -1)]
    start = identity(graph)
    seen = {start.letters}
    layer = [start]
    found = [start]
    for _ in range(radius):
        nxt = []
        for g in layer:
            for letter in letters:
                h = reduce(Word(graph, g.letters + (letter,)))
                if h.letters not in seen:
                    seen.add(h.letters)
                    nxt.append(h)
        found.extend(nxt)
        layer = nxt
    return found
