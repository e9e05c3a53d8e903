# scripts/pipelines.py
# raagkit - 同梱のグラフに対する組み立てパイプライン（ウェッジ・fault 補正・積）
#
# どのパイプラインも H = Z/2 が全生成元を反転する φ を実現し、
# realises / npc_check / 次元の一致を検証した報告を返す。

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence

import numpy as np

sys.path.append(str(Path(__file__).parent.parent))

from scripts.aut_raag import compose, identity_map, make_inversion
from scripts.cube_complex import (
    CircleMotion, ComplexAction, MarkedComplex, coordinate_action, npc_check, realises, salvetti,
)
from scripts.graph_core import SimplicialGraph, components, dimension, join_decomposition
from scripts.invariant_system import FiniteOuterGroup
from scripts.raag_errors import NotAJoin, RealisationCheckFailed, ValidityError
from scripts.realisation import (
    FaultRecord, Gluing, GluingSpec, compute_fault, correct_gluing, glue_actions, glue_marked,
    product_realisation, wedge_realisation,
)
from scripts.settings import get_setting, log_event, setup_logging

logger = setup_logging(__name__)

# --- 定数 ---
Z2_TABLE = np.array([[0, 1], [1, 0]], dtype=np.int64)
FLIP = CircleMotion(-1, 0)
STAY = CircleMotion(1, 0)


@dataclass
class PipelineResult:
    name: str
    marked: MarkedComplex
    action: ComplexAction
    phi: FiniteOuterGroup
    report: Dict = field(default_factory=dict)

    def bundle(self) -> Dict:
        """verify サブコマンドにそのまま渡せる束"""
        return {
            "pipeline": self.name,
            "marked": self.marked.to_json(),
            "action": self.action.to_json(),
            "group": self.phi.to_json(),
        }


def load_bundle(data: Dict):
    """bundle() の出力から (マーク付き複体, 作用, φ) を復元"""
    marked = MarkedComplex.from_json(data["marked"])
    action = ComplexAction.from_json(data["action"], marked.complex)
    phi = FiniteOuterGroup.from_json(data["group"], marked.graph)
    return marked, action, phi


def invert_all(graph: SimplicialGraph) -> FiniteOuterGroup:
    """全生成元を反転する Z/2 ≤ Out(A_Γ)"""
    f = identity_map(graph)
    for v in range(graph.vertex_count):
        f = compose(make_inversion(graph, v), f)
    return FiniteOuterGroup(graph, (identity_map(graph), f), Z2_TABLE, 0, (1,))


def flip_all(marked: MarkedComplex) -> ComplexAction:
    """各円周因子を基点で反転する Z/2 作用"""
    n = len(marked.complex.factors)
    return coordinate_action(marked.complex, Z2_TABLE, [(STAY,) * n, (FLIP,) * n])


def verification_report(marked: MarkedComplex, action: ComplexAction,
                        phi: FiniteOuterGroup) -> Dict:
    npc = npc_check(marked.complex)
    return {
        "realises": realises(marked, action, phi),
        "npc": npc.to_json(),
        "dimension": marked.complex.dimension,
        "graph_dimension": dimension(marked.graph),
        "cells": len(marked.complex.cells),
        "group_order": action.order,
    }


def _finish(name: str, marked: MarkedComplex, action: ComplexAction,
            phi: FiniteOuterGroup, **extra) -> PipelineResult:
    report = verification_report(marked, action, phi)
    report.update(extra)
    report["pipeline"] = name
    ok = report["realises"] and report["npc"]["ok"] and report["dimension"] == report["graph_dimension"]
    report["ok"] = ok
    log_event(logger, "INFO" if ok else "WARN", "パイプラインが終了しました",
              pipeline=name, ok=ok, cells=report["cells"])
    return PipelineResult(name, marked, action, phi, report)


# --- パイプライン ---

def two_edge_wedge(graph: Optional[SimplicialGraph] = None,
                   subdivision: Optional[int] = None) -> PipelineResult:
    """成分ごとの Salvetti 複体を H 固定点で1点に集める（既定は2本の交わらない辺）"""
    if graph is None:
        graph = SimplicialGraph.from_edges("abcd", [("a", "b"), ("c", "d")])
    log_event(logger, "INFO", "ウェッジ・パイプラインを開始します", graph=str(graph))
    phi = invert_all(graph)
    pieces = []
    for comp in components(graph):
        marked = salvetti(graph.induced(comp), subdivision)
        pieces.append((marked, flip_all(marked)))
    marked, action = wedge_realisation(pieces, target=graph, phi=phi)
    return _finish("wedge", marked, action, phi, pieces=len(pieces))


@dataclass
class StandardGluing:
    """共通円周に沿った貼り合わせと、その両側の作用・fault"""
    phi: FiniteOuterGroup
    gluing: Gluing
    action: ComplexAction
    left_action: ComplexAction
    right_action: ComplexAction
    fault: FaultRecord


def standard_gluing(graph: SimplicialGraph, left: Sequence[str], right: Sequence[str],
                    offset: int = 0, subdivision: Optional[int] = None) -> StandardGluing:
    left_set, right_set = graph.subset(left), graph.subset(right)
    if (left_set | right_set) != graph.vertices():
        raise ValidityError("cover", f"{left_set} and {right_set} do not cover {graph}")
    phi = invert_all(graph)
    left_marked = salvetti(graph.induced(left_set), subdivision)
    right_marked = salvetti(graph.induced(right_set), subdivision)
    left_action, right_action = flip_all(left_marked), flip_all(right_marked)

    offsets = {name: offset for name in (left_set & right_set).labels}
    spec = GluingSpec.along_common(graph, left_marked, right_marked, offsets)
    glued = glue_marked(spec)
    action = glue_actions(glued, left_action, right_action)
    fault = compute_fault(glued, action, phi)
    return StandardGluing(phi, glued, action, left_action, right_action, fault)


def path_gluing(graph: Optional[SimplicialGraph] = None,
                left: Sequence[str] = ("a", "b"), right: Sequence[str] = ("b", "c"),
                offset: int = 1, subdivision: Optional[int] = None) -> PipelineResult:
    """補正せずに貼り、fault だけを報告する"""
    if graph is None:
        graph = SimplicialGraph.path(["a", "b", "c"])
    glued = standard_gluing(graph, left, right, offset, subdivision)
    return _finish("glue", glued.gluing.marked, glued.action, glued.phi,
                   fault=glued.fault.to_json(), offsets=dict(glued.gluing.spec.offsets))


def path_fault_correction(graph: Optional[SimplicialGraph] = None,
                          left: Sequence[str] = ("a", "b"), right: Sequence[str] = ("b", "c"),
                          offset: int = 1, subdivision: Optional[int] = None) -> PipelineResult:
    """共通円周を offset だけ回して貼り、fault を測って補正する（既定は a–b–c）"""
    if graph is None:
        graph = SimplicialGraph.path(["a", "b", "c"])
    log_event(logger, "INFO", "fault 補正パイプラインを開始します",
              graph=str(graph), left=list(left), right=list(right), offset=offset)
    glued = standard_gluing(graph, left, right, offset, subdivision)
    phi, fault, spec = glued.phi, glued.fault, glued.gluing.spec
    corrected, corrected_action = correct_gluing(glued.gluing, glued.left_action,
                                                 glued.right_action, phi, fault)
    after = compute_fault(corrected, corrected_action, phi)
    if not after.is_trivial():
        raise RealisationCheckFailed(f"fault survives the correction: {after.to_json()}")
    return _finish("fault_correction", corrected.marked, corrected_action, phi,
                   fault_before=fault.to_json(), fault_after=after.to_json(),
                   offsets_before=dict(spec.offsets), offsets_after=dict(corrected.spec.offsets))


def edge_product(graph: Optional[SimplicialGraph] = None,
                 subdivision: Optional[int] = None) -> PipelineResult:
    """join Γ = Δ₁ ∗ Δ₂ の因子ごとの Salvetti 複体の積（既定は辺 a–b）"""
    if graph is None:
        graph = SimplicialGraph.path(["a", "b"])
    factors = join_decomposition(graph.vertices()).factors
    if len(factors) < 2:
        raise NotAJoin(f"{graph} is not a join")
    log_event(logger, "INFO", "積パイプラインを開始します", graph=str(graph))
    phi = invert_all(graph)
    first = factors[0]
    rest = graph.vertices() - first
    left = salvetti(graph.induced(first), subdivision)
    right = salvetti(graph.induced(rest), subdivision)
    marked, action = product_realisation((left, flip_all(left)), (right, flip_all(right)),
                                         phi, graph)
    return _finish("product", marked, action, phi)


PIPELINES: Dict[str, Callable[..., PipelineResult]] = {
    "wedge": two_edge_wedge,
    "glue": path_gluing,
    "fault_correction": path_fault_correction,
    "product": edge_product,
}


def run_pipeline(name: str, graph: Optional[SimplicialGraph] = None, **params) -> PipelineResult:
    if name not in PIPELINES:
        raise ValidityError("pipeline", f"unknown pipeline {name!r}; choose from {sorted(PIPELINES)}")
    params.setdefault("subdivision", get_setting('complex', 'subdivision', int))
    return PIPELINES[name](graph, **params)
