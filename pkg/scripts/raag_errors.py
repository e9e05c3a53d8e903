# scripts/raag_errors.py
# raagkit - 例外クラス一覧
# 各モジュールはここで定義した例外のみを送出する

from typing import Any, List, Optional


class RaagkitError(Exception):
    """raagkit 共通の基底例外"""


# --- graph_core ---

class GraphFormatError(RaagkitError, ValueError):
    """グラフ定義（JSON / ラベル / 隣接関係）が不正"""


class GraphMismatchError(RaagkitError, ValueError):
    """異なるグラフ上の頂点集合・語を混ぜて演算した"""


class SubsetError(RaagkitError, ValueError):
    """S ⊆ T が要求される演算で包含が成り立たない"""


# --- word_calculus ---

class WordFormatError(RaagkitError, ValueError):
    """語のテキスト表現を解釈できない"""


# --- aut_raag ---

class ValidityError(RaagkitError, ValueError):
    """自己同型の生成元の構成条件を満たさない"""

    def __init__(self, condition: str, message: str = ""):
        self.condition = condition
        super().__init__(message or condition)


class NotAutomorphism(RaagkitError, ValueError):
    """像と逆像が互いに逆写像になっていない、または関係式を保たない"""


class Inconclusive(RaagkitError):
    """探索半径内で判定できなかった（半径を上げて再試行する）"""

    def __init__(self, bound: int, message: str = ""):
        self.bound = bound
        super().__init__(message or f"search bound {bound} exhausted")


# --- invariant_system ---

class CapExceeded(RaagkitError):
    """群の閉包が上限位数を超えた"""

    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"outer group closure exceeded cap {cap}")


class DegenerateSupport(RaagkitError):
    """巡回簡約後の核の台が Δ より真に小さい（総当たりにフォールバック）"""


class ViolationFound(RaagkitError):
    """閉包則の検査で違反が見つかった"""

    def __init__(self, report: Any):
        self.report = report
        failed = [c["check"] for c in getattr(report, "failures", lambda: [])()]
        super().__init__(f"closure violations: {', '.join(failed) or 'unknown'}")


class TooManyVertices(RaagkitError):
    """全部分グラフの列挙に対して頂点数が多すぎる"""

    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(f"graph has {count} vertices, the configured cap is {cap}")


class NotAMember(RaagkitError, ValueError):
    """部分グラフが系 L に属していない"""


class NoProperSupergraph(RaagkitError):
    """Ξ を含む真部分グラフが L に存在しない"""


class AmbiguousMaximal(RaagkitError):
    """極大な真部分グラフが一意に定まらない"""

    def __init__(self, candidates: List[Any]):
        self.candidates = list(candidates)
        names = "; ".join(str(c) for c in self.candidates)
        super().__init__(f"several maximal proper members: {names}")


# --- cube_complex ---

class ComplexError(RaagkitError, ValueError):
    """セル複体のデータが整合していない"""


class NotAJoin(RaagkitError, ValueError):
    """積を取る2つのグラフが join を成さない"""


class ActionError(RaagkitError, ValueError):
    """群作用が複体・群の乗積表と整合しない"""


class NonIsometricGluing(RaagkitError, ValueError):
    """貼り合わせ写像がセル同型・等長になっていない"""


class NPCFailure(RaagkitError):
    """NPC（旗条件）検査に失敗した"""

    def __init__(self, witness: Optional[Any] = None, message: str = ""):
        self.witness = witness
        super().__init__(message or f"link condition fails: {witness}")


# --- realisation ---

class FaultOutsideCentralizer(RaagkitError):
    """x(h) が C(A_E) に入っていない（貼り合わせか作用が誤っている）"""

    def __init__(self, element: int, word: Any):
        self.element = element
        self.word = word
        super().__init__(f"fault of element {element} is {word}, outside C(A_E)")


class FaultOutsideCentre(RaagkitError, ValueError):
    """補正の前提 x(h) ∈ Z(A_E) が成り立たない"""


class NonIntegralOffset(RaagkitError):
    """最大細分でもずらし量が整数にならない"""


class RealisationCheckFailed(RaagkitError):
    """構成した複体が φ を実現していない"""


class IncompatibleActions(RaagkitError):
    """2つの円周作用を同変に同一視できない"""


class NoFixedPoint(RaagkitError):
    """群全体で不変なセルが存在しない"""


# --- cli ---

class ManifestError(RaagkitError, ValueError):
    """マニフェストがスキーマに合わない、または参照ファイルが無い"""
