# scripts/realisation.py
# raagkit - 同変な貼り合わせ、fault の計測と補正、円周の整列、積とウェッジによる実現
#
# 貼り合わせは左の複体の番号をそのまま使い、右の複体の同一視されないセルを後ろに足す。
# fault x(h) は h_p = c(x(h))·h_q を満たす語で、c(x)(w) = x⁻¹·w·x。

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from scripts.aut_raag import RaagMap
from scripts.cube_complex import (
    EDGE, VERTEX, Cell, CircleMotion, ComplexAction, CubeComplex, EdgePath, MarkedComplex,
    circle_motion, coordinate_action, generator_loops, geometric_representative, map_path,
    npc_check, product, product_complex, realises, reverse_path, rotation_invariant, salvetti,
    shortest_path, subdivide, subdivide_action, subdivide_complex,
)
from scripts.graph_core import SimplicialGraph, VertexSet, centre, link
from scripts.invariant_system import FiniteOuterGroup
from scripts.raag_errors import (
    ActionError, ComplexError, FaultOutsideCentralizer, FaultOutsideCentre,
    IncompatibleActions, NoFixedPoint, NonIntegralOffset, NonIsometricGluing, NPCFailure,
    RealisationCheckFailed, ValidityError,
)
from scripts.settings import get_setting, log_event, setup_logging
from scripts.word_calculus import (
    Letter, NormalForm, Word, abelianize, identity, reduce, support,
)

logger = setup_logging(__name__)

Piece = Tuple[MarkedComplex, ComplexAction]


# --- データクラス ---

@dataclass(frozen=True)
class GluingSpec:
    """左（Σ 上）と右（Θ 上）の複体を、部分複体のセル同型 identification で貼る"""
    target: SimplicialGraph
    left: MarkedComplex
    right: MarkedComplex
    # 左のセル → 右のセル
    identification: Mapping[int, int] = field(compare=False)
    offsets: Mapping[str, int] = field(default_factory=dict, compare=False)
    kind: str = "custom"

    @property
    def left_sub(self) -> List[int]:
        return sorted(self.identification)

    @property
    def right_sub(self) -> List[int]:
        return sorted(self.identification.values())

    @property
    def union(self) -> VertexSet:
        return self.target.subset(set(self.left.graph.labels) | set(self.right.graph.labels))

    @property
    def common(self) -> VertexSet:
        return self.target.subset(set(self.left.graph.labels) & set(self.right.graph.labels))

    def to_json(self) -> Dict:
        return {
            "kind": self.kind,
            "left": list(self.left.graph.labels),
            "right": list(self.right.graph.labels),
            "common": list(self.common.labels),
            "offsets": dict(sorted(self.offsets.items())),
            "identification": [[c, r] for c, r in sorted(self.identification.items())],
        }

    @classmethod
    def along_common(cls, target: SimplicialGraph, left: MarkedComplex, right: MarkedComplex,
                     offsets: Optional[Mapping[str, int]] = None) -> "GluingSpec":
        """共通の円周因子のトーラスを基点どうしで貼る（offsets で円周ごとに回してから貼る）"""
        X, Y = left.complex, right.complex
        if X.factors is None or Y.factors is None:
            raise NonIsometricGluing("a standard gluing needs coordinate complexes")
        names_x = [f.name for f in X.factors]
        names_y = [f.name for f in Y.factors]
        common = [name for name in names_x if name in names_y]
        if set(common) != set(left.graph.labels) & set(right.graph.labels):
            raise NonIsometricGluing("circle factors do not match the common generators")
        offsets = {name: int(o) for name, o in (offsets or {}).items()}
        unknown = sorted(set(offsets) - set(common))
        if unknown:
            raise NonIsometricGluing(f"offsets for circles that are not shared: {unknown}")
        for name in common:
            fx, fy = X.factors[names_x.index(name)], Y.factors[names_y.index(name)]
            if (fx.m, fx.length) != (fy.m, fy.length):
                raise NonIsometricGluing(f"circle {name} has different lengths on the two sides")

        anchor_x = X.cells[left.basepoint].key
        anchor_y = Y.cells[right.basepoint].key
        identification = {}
        for c, cell in enumerate(X.cells):
            if any(cell.key[f] != anchor_x[f] for f, name in enumerate(names_x) if name not in common):
                continue
            key = list(anchor_y)
            for f, name in enumerate(names_x):
                if name in common:
                    kind, pos = cell.key[f]
                    fy = names_y.index(name)
                    key[fy] = (kind, (pos + offsets.get(name, 0)) % Y.factors[fy].m)
            key = tuple(key)
            if key not in Y.by_key:
                raise NonIsometricGluing(f"cell {cell.key} has no partner on the right")
            identification[c] = Y.by_key[key]

        hit = set(identification.values())
        for r, cell in enumerate(Y.cells):
            on_sub = all(cell.key[f] == anchor_y[f] for f, name in enumerate(names_y)
                         if name not in common)
            if on_sub and r not in hit:
                raise NonIsometricGluing(f"right cell {cell.key} has no partner on the left")
        return cls(target, left, right, identification, offsets, "common")

    @classmethod
    def at_vertices(cls, target: SimplicialGraph, left: MarkedComplex, right: MarkedComplex,
                    left_vertex: int, right_vertex: int) -> "GluingSpec":
        """1点での貼り合わせ（ウェッジ）"""
        return cls(target, left, right, {left_vertex: right_vertex}, {}, "wedge")


@dataclass(frozen=True)
class Gluing:
    """貼り合わせの結果。right_map は右のセル → 貼り合わせ後のセル"""
    spec: GluingSpec
    marked: MarkedComplex
    right_map: Tuple[int, ...]

    @property
    def p(self) -> int:
        return self.spec.left.basepoint

    @property
    def q(self) -> int:
        return self.right_map[self.spec.right.basepoint]

    def left_cells(self) -> List[int]:
        return list(range(len(self.spec.left.complex.cells)))

    def right_cells(self) -> List[int]:
        return sorted(set(self.right_map))

    def to_json(self) -> Dict:
        return {"spec": self.spec.to_json(), "marked": self.marked.to_json(),
                "right_map": list(self.right_map)}


@dataclass(frozen=True)
class FaultRecord:
    """h ごとの fault x(h)（単位元は含めない）"""
    graph: SimplicialGraph
    common: VertexSet
    words: Dict[int, NormalForm] = field(compare=False)
    # Z(Γ) の文字を取り除いた代表（Z(A_Γ) の剰余類で決まる）
    reduced: Dict[int, NormalForm] = field(compare=False)
    # 左側の道で計った h_p
    representatives: Dict[int, RaagMap] = field(compare=False)
    centrally_faulty: bool = False

    @property
    def within_centre(self) -> bool:
        z = centre(self.common)
        return all(support(x) <= z for x in self.words.values())

    def is_trivial(self) -> bool:
        return all(x.is_identity() for x in self.words.values())

    def to_json(self) -> Dict:
        return {
            "common": list(self.common.labels),
            "faults": {str(h): str(x) for h, x in sorted(self.words.items())},
            "reduced": {str(h): str(x) for h, x in sorted(self.reduced.items())},
            "within_centre": self.within_centre,
            "centrally_faulty": self.centrally_faulty,
        }


@dataclass(frozen=True)
class CircleAlignment:
    """左の位置 p を isometry(p) に送る同変な同一視（m は共通細分後の辺数）"""
    isometry: CircleMotion
    m: int
    left: ComplexAction
    right: ComplexAction

    def to_json(self) -> Dict:
        return {"isometry": self.isometry.to_json(), "m": self.m}


# --- 貼り合わせ ---

def _check_isometry(X: CubeComplex, Y: CubeComplex, ident: Mapping[int, int]) -> None:
    if len(set(ident.values())) != len(ident):
        raise NonIsometricGluing("identification is not injective")
    for c, r in ident.items():
        a, b = X.cells[c], Y.cells[r]
        if a.dim != b.dim or sorted(a.lengths) != sorted(b.lengths):
            raise NonIsometricGluing(f"cells {c} and {r} are not isometric")
        for f in a.facets:
            if f not in ident:
                raise NonIsometricGluing(f"identified cell {c} has a free facet {f}")
        if sorted(ident[f] for f in a.facets) != sorted(b.facets):
            raise NonIsometricGluing(f"identification breaks the facets of cell {c}")
        if a.dim == 1 and (ident[a.facets[0]], ident[a.facets[1]]) != Y.endpoints(r):
            raise NonIsometricGluing(f"identification reverses edge {c}")


def _spell(word: NormalForm, loops: Mapping[str, Sequence[Tuple[int, int]]]) -> EdgePath:
    """生成元ループを文字ごとにつないで word を読むループを作る"""
    path: EdgePath = []
    for letter in word.letters:
        loop = list(loops[word.graph.labels[letter.vertex]])
        path.extend(loop if letter.sign > 0 else reverse_path(loop))
    return path


def glue_marked(spec: GluingSpec) -> Gluing:
    """押し出し複体を作り、同一視部分でラベルをゲージ変換して両側のマーキングをつなぐ"""
    left, right = spec.left, spec.right
    X, Y = left.complex, right.complex
    ident = dict(spec.identification)
    if not ident:
        raise NonIsometricGluing("nothing to glue along")
    _check_isometry(X, Y, ident)
    graph = spec.target.induced(spec.union)
    back = {r: c for c, r in ident.items()}

    right_map = []
    n = len(X.cells)
    for r in range(len(Y.cells)):
        if r in back:
            right_map.append(back[r])
        else:
            right_map.append(n)
            n += 1
    cells = [Cell(c.dim, c.facets, c.lengths) for c in X.cells]
    for r, cell in enumerate(Y.cells):
        if r not in back:
            cells.append(Cell(cell.dim, tuple(right_map[f] for f in cell.facets), cell.lengths))
    try:
        Z = CubeComplex(tuple(cells))
    except ComplexError as e:
        raise NonIsometricGluing(str(e)) from e

    def left_word(path) -> NormalForm:
        return reduce(left.path_word(path).transport(graph))

    def right_word(path) -> NormalForm:
        return reduce(right.path_word(path).transport(graph))

    # ゲージ g: ℓ_L(e) = g(s)·ℓ_R(e)·g(t)⁻¹ を同一視部分の辺で満たす（g(y0) = ε）
    x0 = left.basepoint if left.basepoint in ident else min(
        c for c in ident if X.cells[c].dim == 0)
    y0 = ident[x0]
    sub_edges = sorted(r for r in back if Y.cells[r].dim == 1)
    gauge = {y0: identity(graph)}
    queue = deque([y0])
    while queue:
        u = queue.popleft()
        for e in sub_edges:
            s, t = Y.endpoints(e)
            lw, rw = left_word([(back[e], 1)]), right_word([(e, 1)])
            if s == u and t not in gauge:
                gauge[t] = lw.inverse() * gauge[s] * rw
                queue.append(t)
            elif t == u and s not in gauge:
                gauge[s] = lw * gauge[t] * rw.inverse()
                queue.append(s)
    sub_vertices = [r for r in back if Y.cells[r].dim == 0]
    if len(gauge) != len(sub_vertices):
        raise NonIsometricGluing("the identified subcomplex is not connected")
    for e in sub_edges:
        s, t = Y.endpoints(e)
        if left_word([(back[e], 1)]) != gauge[s] * right_word([(e, 1)]) * gauge[t].inverse():
            raise NonIsometricGluing(f"markings disagree on the identified edge {e}")

    def g(v: int) -> NormalForm:
        return gauge.get(v, identity(graph))

    words: Dict[int, NormalForm] = {}
    for c in X.ids(1):
        w = left_word([(c, 1)])
        if not w.is_identity():
            words[c] = w
    for r in Y.ids(1):
        if r in back:
            continue
        s, t = Y.endpoints(r)
        w = g(s) * right_word([(r, 1)]) * g(t).inverse()
        if not w.is_identity():
            words[right_map[r]] = w

    # 右の生成元ループを左の基点まで運ぶ
    left_loops = dict(zip(left.graph.labels, generator_loops(left)))
    right_loops = dict(zip(right.graph.labels, generator_loops(right)))
    pi = left.tree_path(x0)
    rho = reverse_path(right.tree_path(y0))
    s_word, r_word = left_word(pi), right_word(rho)
    rebased = {name: rho + list(loop) + reverse_path(rho) for name, loop in right_loops.items()}
    omega_r = _spell(r_word, rebased)
    omega_s = _spell(s_word, left_loops)

    loops = []
    for name in graph.labels:
        if name in left_loops:
            loops.append(tuple(left_loops[name]))
            continue
        inner = reverse_path(omega_r) + rebased[name] + omega_r
        inner = [(right_map[e], sign) for e, sign in inner]
        loops.append(tuple(reverse_path(omega_s) + pi + inner + reverse_path(pi) + omega_s))

    marked = MarkedComplex(Z, graph, left.basepoint, words, tuple(loops))
    report = npc_check(Z)
    if not report.ok:
        raise NPCFailure(report.witness)
    log_event(logger, "INFO", "複体を貼り合わせました", kind=spec.kind,
              common=list(spec.common.labels), offsets=dict(spec.offsets), cells=len(Z.cells))
    return Gluing(spec, marked, tuple(right_map))


def glue_actions(gluing: Gluing, left_action: ComplexAction,
                 right_action: ComplexAction) -> ComplexAction:
    """両側の作用を貼り合わせ後の複体に移す（同一視部分で一致しなければ ActionError）"""
    spec = gluing.spec
    if left_action.complex != spec.left.complex or right_action.complex != spec.right.complex:
        raise ActionError("actions do not act on the glued pieces")
    if (left_action.identity != right_action.identity
            or not np.array_equal(left_action.table, right_action.table)):
        raise ActionError("the two sides carry different group tables")
    Z = gluing.marked.complex
    perms = []
    for h in range(left_action.order):
        perm: List[Optional[int]] = [None] * len(Z.cells)
        for c in range(len(spec.left.complex.cells)):
            perm[c] = left_action.act(h, c)
        for r in range(len(spec.right.complex.cells)):
            img = gluing.right_map[right_action.act(h, r)]
            target = gluing.right_map[r]
            if perm[target] is not None and perm[target] != img:
                raise ActionError(f"element {h} acts differently on the identified cell {target}")
            perm[target] = img
        perms.append(tuple(perm))
    return ComplexAction(Z, left_action.table, tuple(perms), None, left_action.identity)


# --- fault ---

def _edges_in(Z: CubeComplex, cells: Sequence[int]) -> List[int]:
    return [c for c in cells if Z.cells[c].dim == 1]


def _drop_letters(w: NormalForm, drop: VertexSet) -> NormalForm:
    return reduce(Word(w.graph, tuple(l for l in w.letters if l.vertex not in drop)))


def compute_fault(gluing: Gluing, action: ComplexAction,
                  phi: Optional[FiniteOuterGroup] = None) -> FaultRecord:
    """x(h) = σ_p(δ·γ_q·h(δ̄)·γ̄_p)。δ は同一視部分の中の p → q の道"""
    M = gluing.marked
    Z = M.complex
    graph = M.graph
    if action.complex != Z:
        raise ActionError("action does not act on the glued complex")
    if phi is not None and not np.array_equal(phi.table, action.table):
        raise ActionError("the action and φ use different group tables")
    left_cells, right_cells = set(gluing.left_cells()), set(gluing.right_cells())
    for h in range(action.order):
        perm = action.permutations[h]
        if {perm[c] for c in left_cells} != left_cells or {perm[c] for c in right_cells} != right_cells:
            raise ActionError(f"element {h} does not preserve the two sides")

    left_edges = _edges_in(Z, sorted(left_cells))
    right_edges = _edges_in(Z, sorted(right_cells))
    sub_edges = _edges_in(Z, gluing.spec.left_sub)
    p, q = gluing.p, gluing.q
    delta = shortest_path(Z, p, q, sub_edges)

    common = graph.subset(gluing.spec.common.labels)
    allowed = centre(common) | link(common)
    z_gamma = centre(graph.vertices())

    words, reduced, reps = {}, {}, {}
    for h in range(action.order):
        if h == action.identity:
            continue
        gamma_p = shortest_path(Z, p, action.act(h, p), left_edges)
        gamma_q = shortest_path(Z, q, action.act(h, q), right_edges)
        loop = delta + gamma_q + map_path(action, h, reverse_path(delta)) + reverse_path(gamma_p)
        x = M.lift(p, loop)
        if not support(x) <= allowed:
            raise FaultOutsideCentralizer(h, str(x))
        words[h] = x
        reduced[h] = _drop_letters(x, z_gamma)
        reps[h] = geometric_representative(M, action, h, p, left_edges).automorphism
        log_event(logger, "DEBUG", "fault を計算しました", element=h, fault=str(x))
    record = FaultRecord(graph, common, words, reduced, reps, centrally_faulty=not link(common))
    log_event(logger, "INFO", "fault の計測が完了しました", **record.to_json())
    return record


def correct_gluing(gluing: Gluing, left_action: ComplexAction, right_action: ComplexAction,
                   phi: Optional[FiniteOuterGroup], fault: FaultRecord) -> Tuple[Gluing, ComplexAction]:
    """Z(E) の円周方向に x′(h) の半周ぶんずらして貼り直す"""
    if fault.is_trivial():
        return gluing, glue_actions(gluing, left_action, right_action)
    spec = gluing.spec
    if spec.kind != "common":
        raise FaultOutsideCentre("only standard gluings along common circles can be corrected")
    z = centre(fault.common)
    for h, x in sorted(fault.words.items()):
        if not support(x) <= z:
            raise FaultOutsideCentre(f"fault {x} of element {h} leaves Z(A_E) = {z}")

    graph = fault.graph
    left, right = spec.left, spec.right
    left_action_, right_action_ = left_action, right_action
    offsets = dict(spec.offsets)
    max_sub = get_setting('complex', 'max_subdivision', int)
    names = [f.name for f in left.complex.factors]
    for s in z:
        name = graph.labels[s]
        inverse = NormalForm(graph, (Letter(s, -1),))
        # s を自分の逆元に送る最小の h の座標を使う（無ければ 0）
        flipping = [h for h in sorted(fault.representatives)
                    if fault.representatives[h].images[s] == inverse]
        if not flipping:
            continue
        k = int(abelianize(fault.words[flipping[0]])[s])
        m = left.complex.factors[names.index(name)].m
        while (k * m) % 2:
            if m * 2 > max_sub:
                raise NonIntegralOffset(
                    f"offset {k}·{m}/2 along {name} is not integral up to subdivision {max_sub}")
            left = subdivide(left, name, 2)
            left_action_ = subdivide_action(left_action_, left.complex, name, 2)
            right = subdivide(right, name, 2)
            right_action_ = subdivide_action(right_action_, right.complex, name, 2)
            offsets[name] = offsets.get(name, 0) * 2
            m *= 2
        offsets[name] = (offsets.get(name, 0) - k * m // 2) % m

    new_spec = GluingSpec.along_common(spec.target, left, right, offsets)
    glued = glue_marked(new_spec)
    action = glue_actions(glued, left_action_, right_action_)
    if phi is not None and not realises(glued.marked, action, phi):
        raise RealisationCheckFailed(f"corrected gluing with offsets {offsets} does not realise φ")
    log_event(logger, "INFO", "貼り合わせを補正しました", offsets=offsets)
    return glued, action


# --- 円周作用 ---

def _motion_table(motions: Sequence[CircleMotion], m: int) -> np.ndarray:
    index = {}
    for i, motion in enumerate(motions):
        if motion in index:
            raise ActionError("two elements act identically, pass the group table explicitly")
        index[motion] = i
    if motions[0] != CircleMotion(1, 0):
        raise ActionError("element 0 must act as the identity")
    n = len(motions)
    table = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            product_ = motions[i].compose(motions[j]).normalised(m)
            if product_ not in index:
                raise ActionError("the motions are not closed under composition")
            table[i, j] = index[product_]
    return table


def build_circle_action(m: int, motions, table=None, name: str = "s") -> ComplexAction:
    """m 辺の円周に、要素ごとの回転・反転を与える作用"""
    motions = [mo if isinstance(mo, CircleMotion) else CircleMotion(*mo) for mo in motions]
    motions = [mo.normalised(m) for mo in motions]
    if not motions:
        raise ActionError("at least the identity element is required")
    if table is None:
        table = _motion_table(motions, m)
    return coordinate_action(CubeComplex.circle(m, name), table, [(mo,) for mo in motions])


def _with_motions(A: ComplexAction) -> ComplexAction:
    X = A.complex
    if X.factors is None or len(X.factors) != 1:
        raise ComplexError("not a circle action")
    if A.motions is not None:
        return A
    return coordinate_action(X, A.table, [(circle_motion(A, h),) for h in range(A.order)])


def align_circles(left: ComplexAction, right: ComplexAction,
                  flags: Optional[Mapping[str, bool]] = None) -> CircleAlignment:
    """共通細分した2つの円周作用の間の同変な等長写像（回転を先、ずらし量の昇順で最小）"""
    left, right = _with_motions(left), _with_motions(right)
    for name, value in sorted((flags or {}).items()):
        if not value:
            log_event(logger, "WARN", "整列の前提が保証されていません", hypothesis=name)
    if left.identity != right.identity or not np.array_equal(left.table, right.table):
        raise IncompatibleActions("the circles carry different group tables")
    fl, fr = left.complex.factors[0], right.complex.factors[0]
    if fl.length != fr.length:
        raise IncompatibleActions("the circles have different lengths")

    m = int(np.lcm(fl.m, fr.m))
    if m != fl.m:
        left = subdivide_action(left, subdivide_complex(left.complex, 0, m // fl.m), 0, m // fl.m)
    if m != fr.m:
        right = subdivide_action(right, subdivide_complex(right.complex, 0, m // fr.m), 0, m // fr.m)

    candidates = [CircleMotion(1, t) for t in range(m)] + [CircleMotion(-1, t) for t in range(m)]
    pairs = list(zip((per[0] for per in left.motions), (per[0] for per in right.motions)))
    for psi in candidates:
        if all(psi.compose(a).normalised(m) == b.compose(psi).normalised(m) for a, b in pairs):
            return CircleAlignment(psi, m, left, right)
    residues = [{"left": _residue(left, h), "right": _residue(right, h)} for h in range(left.order)]
    raise IncompatibleActions(f"no equivariant isometry between the circles: {residues}")


def _residue(A: ComplexAction, h: int) -> Dict:
    return rotation_invariant(A, h)


# --- 固定点・ウェッジ・積 ---

def fixed_point(M: MarkedComplex, A: ComplexAction) -> Tuple[MarkedComplex, ComplexAction, int]:
    """H 全体で不変なセルを探し、その重心が頂点になるまで細分して返す"""
    invariant = A.invariant_cells()
    if not invariant:
        raise NoFixedPoint("no cell is invariant under the whole group")
    X = M.complex
    vertices = [c for c in invariant if X.cells[c].dim == 0]
    if vertices:
        return M, A, vertices[0]
    c = min(invariant, key=lambda i: (X.cells[i].dim, i))
    if X.factors is None or A.motions is None:
        raise NoFixedPoint(f"cell {c} is invariant but cannot be subdivided to a vertex")
    key = X.cells[c].key
    axes = [f for f, (kind, _) in enumerate(key) if kind == EDGE]
    for f in axes:
        M = subdivide(M, f, 2)
        A = subdivide_action(A, M.complex, f, 2)
    centre_key = tuple((VERTEX, 2 * pos + 1) if kind == EDGE else (VERTEX, pos)
                       for kind, pos in key)
    v = M.complex.cell_id(centre_key)
    if any(A.act(h, v) != v for h in range(A.order)):
        raise NoFixedPoint(f"barycentre of cell {c} is not fixed")
    return M, A, v


def point_action(table) -> ComplexAction:
    """1点への自明な作用"""
    table = np.asarray(table, dtype=np.int64)
    order = len(table)
    return ComplexAction(CubeComplex.point(), table, ((0,),) * order, ((),) * order)


def _circle_piece(label: str, signs: Sequence[int], table, m: int) -> Piece:
    marked = salvetti(SimplicialGraph.discrete([label]), m)
    action = coordinate_action(marked.complex, table, [(CircleMotion(int(s), 0),) for s in signs])
    return marked, action


def wedge_realisation(pieces: Sequence[Piece],
                      free_part: Optional[Mapping[str, Sequence[int]]] = None,
                      target: Optional[SimplicialGraph] = None,
                      phi: Optional[FiniteOuterGroup] = None) -> Piece:
    """各片の H 固定点を1点に集めたウェッジ。free_part はラベルごとの反転符号（要素順）"""
    pieces = list(pieces)
    if not pieces:
        raise ValidityError("pieces", "at least one piece is required")
    table = pieces[0][1].table
    for _, A in pieces:
        if not np.array_equal(A.table, table):
            raise ActionError("pieces carry different group tables")
    m = get_setting('complex', 'subdivision', int)
    for label, signs in (free_part or {}).items():
        if len(signs) != len(table):
            raise ActionError(f"free generator {label} needs one sign per element")
        pieces.append(_circle_piece(label, signs, table, m))

    labels = [name for M, _ in pieces for name in M.graph.labels]
    if len(set(labels)) != len(labels):
        raise ValidityError("disjoint", "pieces share generators")
    if target is None:
        edges = [(M.graph.labels[u], M.graph.labels[v]) for M, _ in pieces for u, v in M.graph.edges()]
        target = SimplicialGraph.from_edges(labels, edges)
    for i, (Mi, _) in enumerate(pieces):
        mine = target.subset(Mi.graph.labels)
        rest = target.subset(labels) - mine
        for v in mine:
            if target.neighbours[v] & rest.mask:
                raise ValidityError("union_of_components",
                                    f"piece {Mi.graph} is joined to another piece in {target}")

    # 片が1つでも H 固定点は要る
    M, A, v = fixed_point(*pieces[0])
    if len(pieces) > 1:
        for M2, A2 in pieces[1:]:
            M2, A2, w = fixed_point(M2, A2)
            glued = glue_marked(GluingSpec.at_vertices(target, M, M2, v, w))
            A = glue_actions(glued, A, A2)
            M = glued.marked
    if phi is not None and not realises(M, A, phi):
        raise RealisationCheckFailed("the wedge does not realise φ")
    log_event(logger, "INFO", "ウェッジで実現しました", pieces=len(pieces), cells=len(M.complex.cells))
    return M, A


def product_realisation(left: Piece, right: Piece, phi: Optional[FiniteOuterGroup] = None,
                        target: Optional[SimplicialGraph] = None) -> Piece:
    """積複体と対角作用"""
    (M1, A1), (M2, A2) = left, right
    if A1.identity != A2.identity or not np.array_equal(A1.table, A2.table):
        raise ActionError("the two pieces carry different groups")
    M = product(M1, M2, target)
    if A1.motions is not None and A2.motions is not None and M.complex.factors is not None:
        A = coordinate_action(M.complex, A1.table, [a + b for a, b in zip(A1.motions, A2.motions)])
    else:
        _, index = product_complex(M1.complex, M2.complex)
        perms = []
        for h in range(A1.order):
            perm = [0] * len(M.complex.cells)
            for (i, j), c in index.items():
                perm[c] = index[(A1.act(h, i), A2.act(h, j))]
            perms.append(tuple(perm))
        A = ComplexAction(M.complex, A1.table, tuple(perms), None, A1.identity)
    if phi is not None and not realises(M, A, phi):
        raise RealisationCheckFailed("the product does not realise φ")
    return M, A
