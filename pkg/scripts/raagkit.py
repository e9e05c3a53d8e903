"""
raagkit - コマンドライン・フロントエンド
- グラフ・自己同型・マニフェストの JSON を読み込み、計算とパイプラインを実行する
- 報告は JSON（キー順固定）で標準出力と --out に書き出す
- 終了コード: 0 成功 / 1 使い方の誤り / 2 検証の失敗
"""
import argparse
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

import jsonschema

sys.path.append(str(Path(__file__).parent.parent))

from scripts.aut_raag import apply, classify_untwisted, is_inner, load_automorphisms, outer_equal
from scripts.cube_complex import (
    CubeComplex, MarkedComplex, geometric_representative, npc_check, product, salvetti,
    verify_marking,
)
from scripts.graph_core import (
    SimplicialGraph, boundary, cliques, components, dimension, extended_star, is_cone, is_join,
    join_decomposition, link, spans_join, star,
)
from scripts.invariant_system import (
    assembly_plan, close_group, compute_L, depth, verify_closure,
)
from scripts.path_utils import dump_json, get_schema_dir, load_json, resolve_input, save_json
from scripts.pipelines import load_bundle, run_pipeline, verification_report
from scripts.raag_errors import (
    Inconclusive, ManifestError, NPCFailure, RaagkitError, RealisationCheckFailed, ViolationFound,
)
from scripts.settings import get_setting, log_event, setup_logging
from scripts.word_calculus import Word, cyclically_reduce, is_conjugate, reduce

logger = setup_logging(__name__)

# --- 定数 ---
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED = 2
REPORT_SCHEMA = "report.schema.json"
MANIFEST_SCHEMA = "manifest.schema.json"
BASEPOINT_SAMPLES = 3


class _Parser(argparse.ArgumentParser):
    """使い方の誤りを終了コード 1 の ManifestError にする"""

    def error(self, message):
        raise ManifestError(message)


# --- 入力 ---

def _load_input(path_str: Optional[str], what: str, base: Optional[Path] = None):
    if not path_str:
        raise ManifestError(f"--{what} is required for this command")
    path = resolve_input(path_str, base)
    data = load_json(path)
    if data is None:
        raise ManifestError(f"cannot read {what} file {path}")
    return data


def _graph(args) -> SimplicialGraph:
    return SimplicialGraph.from_json(_load_input(args.graph, "graph"))


def _subset(graph: SimplicialGraph, text: Optional[str]):
    if text is None:
        raise ManifestError("--set is required for this command")
    labels = [x.strip() for x in text.split(",") if x.strip()]
    return graph.subset(labels)


def _bound(args) -> Optional[int]:
    return args.bound or None


def _automorphisms(args, graph: SimplicialGraph):
    return load_automorphisms(graph, _load_input(args.auts, "auts"))


def _group(args, graph: SimplicialGraph):
    return close_group(_automorphisms(args, graph), args.cap, graph, _bound(args))


def _word(args, graph: SimplicialGraph, i: int) -> Word:
    if len(args.words) <= i:
        raise ManifestError(f"this command needs {i + 1} word argument(s)")
    return Word.parse(args.words[i], graph)


def _names(s) -> List[str]:
    return list(s.labels)


def _report(command: str, ok: bool, result) -> Dict:
    return {"command": command, "ok": bool(ok), "result": result}


# --- サブコマンド ---

def cmd_graph(args) -> Dict:
    graph = _graph(args)
    action = args.action
    if action == "dimension":
        return _report("graph dimension", True, {
            "dimension": dimension(graph),
            "cliques": len(cliques(graph)),
            "components": [_names(c) for c in components(graph)],
        })
    s = _subset(graph, args.set)
    if action == "link":
        result = {"set": _names(s), "link": _names(link(s))}
    elif action == "star":
        result = {"set": _names(s), "star": _names(star(s))}
    elif action == "extended-star":
        result = {"set": _names(s), "extended_star": _names(extended_star(s))}
    elif action == "boundary":
        result = {"set": _names(s), "boundary": _names(boundary(s))}
    else:
        decomposition = join_decomposition(s)
        result = {"set": _names(s), "is_join": is_join(s), "is_cone": is_cone(s),
                  "factors": [_names(f) for f in decomposition.factors],
                  "centre": _names(decomposition.z_part)}
        if args.other is not None:
            result["spans_join_with"] = spans_join(s, _subset(graph, args.other))
    return _report(f"graph {action}", True, result)


def cmd_word(args) -> Dict:
    graph = _graph(args)
    w = _word(args, graph, 0)
    if args.action == "reduce":
        return _report("word reduce", True, {"input": args.words[0], "normal_form": str(reduce(w))})
    if args.action == "cyclic":
        conjugator, core = cyclically_reduce(w)
        return _report("word cyclic", True, {"input": args.words[0],
                                             "conjugator": str(conjugator), "core": str(core)})
    g = is_conjugate(w, _word(args, graph, 1))
    return _report("word conjugate", True, {
        "words": args.words[:2],
        "conjugate": g is not None,
        "conjugator": None if g is None else str(g),
    })


def cmd_aut(args) -> Dict:
    graph = _graph(args)
    maps = _automorphisms(args, graph)
    if args.index is not None:
        maps = [maps[args.index]]
    entries = []
    for f in maps:
        entry = {"tag": f.tag, "map": f.to_json()}
        if args.action == "classify":
            entry.update(classify_untwisted(f))
        elif args.action == "is-inner":
            try:
                x = is_inner(f, _bound(args))
                entry.update({"inner": x is not None, "conjugator": None if x is None else str(x)})
            except Inconclusive as e:
                entry.update({"inner": None, "conjugator": None, "bound": e.bound})
        else:
            w = _word(args, graph, 0)
            entry.update({"input": args.words[0], "image": str(apply(f, w))})
        entries.append(entry)
    return _report(f"aut {args.action}", True, {"automorphisms": entries})


def cmd_group(args) -> Dict:
    graph = _graph(args)
    group = _group(args, graph)
    return _report("group close", True, group.to_json())


def cmd_invariants(args) -> Dict:
    graph = _graph(args)
    group = _group(args, graph)
    system = compute_L(group, jobs=args.jobs, fast=args.fast, vertex_cap=args.vertex_cap)
    if args.action == "compute-L":
        result = system.to_json()
        result["depth"] = depth(system)
        return _report("invariants compute-L", True, result)
    if args.action == "verify-closure":
        closure = verify_closure(system)
        return _report("invariants verify-closure", closure.passed, closure.to_json())
    xi = graph.empty() if args.set is None else _subset(graph, args.set)
    plan = assembly_plan(system, xi, choose=args.choose)
    return _report("invariants assembly-plan", True, plan.to_json())


def cmd_complex(args) -> Dict:
    if args.action == "npc-check" and args.input:
        data = _load_input(args.input, "input")
        data = data.get("marked", data)
        X = CubeComplex.from_json(data.get("complex", data))
        report = npc_check(X, args.jobs)
        return _report("complex npc-check", report.ok,
                       {"npc": report.to_json(), "cells": len(X.cells), "dimension": X.dimension})

    graph = _graph(args)
    if args.action == "product":
        factors = join_decomposition(graph.vertices()).factors
        if len(factors) < 2:
            raise ManifestError(f"{graph} is not a join")
        M = product(salvetti(graph.induced(factors[0]), args.subdiv),
                    salvetti(graph.induced(graph.vertices() - factors[0]), args.subdiv), graph)
    else:
        M = salvetti(graph, args.subdiv)
    verify_marking(M)
    report = npc_check(M.complex, args.jobs)
    ok = report.ok and M.complex.dimension == dimension(graph)
    return _report(f"complex {args.action}", ok, {
        "npc": report.to_json(),
        "dimension": M.complex.dimension,
        "graph_dimension": dimension(graph),
        "cells": len(M.complex.cells),
        "marked": M.to_json(),
    })


def cmd_realize(args) -> Dict:
    graph = SimplicialGraph.from_json(_load_input(args.graph, "graph")) if args.graph else None
    params = {"subdivision": args.subdiv}
    if args.action in ("glue", "correct"):
        if args.left:
            params["left"] = [x for x in args.left.split(",") if x]
        if args.right:
            params["right"] = [x for x in args.right.split(",") if x]
        params["offset"] = args.offset
    name = {"correct": "fault_correction"}.get(args.action, args.action)
    result = run_pipeline(name, graph, **params)
    body = dict(result.report)
    body["bundle"] = result.bundle()
    return _report(f"realize {args.action}", result.report["ok"], body)


def basepoint_independence(M: MarkedComplex, A, phi, samples: int = BASEPOINT_SAMPLES) -> Dict:
    """複数の基点で h_b を取り、互いに外部同値かを確かめる"""
    vertices = M.complex.ids(0)[:samples]
    agree = True
    for h in range(A.order):
        reps = [geometric_representative(M, A, h, b).automorphism for b in vertices]
        agree &= all(outer_equal(reps[0], other) for other in reps[1:])
    return {"basepoints": list(vertices), "independent": bool(agree)}


def cmd_verify(args) -> Dict:
    data = _load_input(args.bundle, "bundle")
    M, A, phi = load_bundle(data)
    result = verification_report(M, A, phi)
    result["basepoint"] = basepoint_independence(M, A, phi)
    ok = (result["realises"] and result["npc"]["ok"]
          and result["dimension"] == result["graph_dimension"]
          and result["basepoint"]["independent"])
    return _report("verify", ok, result)


def cmd_run(args) -> Dict:
    """マニフェストを検証し、記載のサブコマンドに振り分ける"""
    manifest_path = Path(args.manifest)
    manifest = load_json(manifest_path)
    if manifest is None:
        raise ManifestError(f"cannot read manifest {manifest_path}")
    schema = load_json(get_schema_dir() / MANIFEST_SCHEMA)
    if schema is not None:
        try:
            jsonschema.validate(manifest, schema)
        except jsonschema.ValidationError as e:
            raise ManifestError(f"manifest {manifest_path}: {e.message}")

    base = manifest_path.parent
    argv = list(manifest["command"]) + [str(w) for w in manifest.get("words", [])]
    for key in ("graph", "auts", "input", "bundle"):
        if key in manifest:
            path = str(resolve_input(manifest[key], base))
            argv += [path] if key == "bundle" else [f"--{key}", path]
    for key, value in sorted(manifest.get("params", {}).items()):
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        else:
            argv += [flag, str(value)]
    log_event(logger, "INFO", "マニフェストを実行します", manifest=str(manifest_path), argv=argv)
    return parse_args(argv + (["--out", args.out] if args.out else []))


# --- 引数 ---

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", help="グラフ JSON ファイル")
    p.add_argument("--auts", help="自己同型 JSON ファイル")
    p.add_argument("--out", help="報告の出力ディレクトリ")
    p.add_argument("--jobs", type=int, default=None, help="並列数")
    p.add_argument("--bound", type=int, default=get_setting('search', 'conjugator_bound', int),
                   help="共役元探索の半径（0 は既定値）")
    p.add_argument("--cap", type=int, default=get_setting('search', 'group_cap', int),
                   help="外部群の位数上限")
    p.add_argument("--vertex-cap", type=int, default=get_setting('search', 'vertex_cap', int),
                   help="L^φ を求める頂点数の上限")
    p.add_argument("--subdiv", type=int, default=get_setting('complex', 'subdivision', int),
                   help="円周の辺数")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(description="raagkit - RAAG の外部自己同型と NPC 立方複体の計算")
    sub = parser.add_subparsers(dest="verb", required=True)

    verbs = {
        "graph": (("link", "star", "extended-star", "join", "dimension", "boundary"), cmd_graph),
        "word": (("reduce", "cyclic", "conjugate"), cmd_word),
        "aut": (("classify", "is-inner", "apply"), cmd_aut),
        "group": (("close",), cmd_group),
        "invariants": (("compute-L", "verify-closure", "assembly-plan"), cmd_invariants),
        "complex": (("salvetti", "npc-check", "product"), cmd_complex),
        "realize": (("wedge", "glue", "correct", "product"), cmd_realize),
    }
    for verb, (actions, handler) in verbs.items():
        p = sub.add_parser(verb)
        p.add_argument("action", choices=actions)
        p.add_argument("words", nargs="*", help="語（空白区切りのトークン列）")
        _common(p)
        p.add_argument("--set", help="頂点ラベルのカンマ区切り")
        p.add_argument("--other", help="2つ目の頂点集合（graph join）")
        p.add_argument("--index", type=int, help="使う自己同型の番号")
        p.add_argument("--fast", action="store_true", help="L^φ の高速経路")
        p.add_argument("--choose", choices=("error", "least"), default="error",
                       help="極大元が複数あるときの扱い")
        p.add_argument("--input", help="npc-check する複体 JSON")
        p.add_argument("--left", help="左側の頂点ラベル")
        p.add_argument("--right", help="右側の頂点ラベル")
        p.add_argument("--offset", type=int, default=1, help="共通円周の回転量")
        p.set_defaults(handler=handler)

    p = sub.add_parser("verify")
    p.add_argument("bundle", help="realize が出力した束 JSON")
    _common(p)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("run")
    p.add_argument("manifest", help="マニフェスト JSON")
    p.add_argument("--out", help="報告の出力ディレクトリ")
    p.set_defaults(handler=cmd_run)
    return parser


def _validate_report(report: Dict) -> None:
    schema = load_json(get_schema_dir() / REPORT_SCHEMA)
    if schema is None:
        log_event(logger, "WARN", "報告スキーマが見つかりません", schema=REPORT_SCHEMA)
        return
    jsonschema.validate(report, schema)


def parse_args(argv: List[str]) -> Dict:
    """argv を解釈してサブコマンドを実行し、報告を返す"""
    args = build_parser().parse_args(argv)
    handler: Callable[[argparse.Namespace], Dict] = args.handler
    report = handler(args)
    if args.verb == "run":
        return report
    _validate_report(report)
    if args.out:
        name = report["command"].replace(" ", "_").replace("-", "_")
        save_json(Path(args.out) / f"{name}.json", report)
    return report


def main(argv: Optional[List[str]] = None) -> int:
    """エントリーポイント。終了コードを返す"""
    argv = sys.argv[1:] if argv is None else argv
    try:
        report = parse_args(argv)
    except ManifestError as e:
        log_event(logger, "ERROR", "使い方の誤り", error=str(e))
        return EXIT_USAGE
    except (ViolationFound, RealisationCheckFailed, NPCFailure) as e:
        log_event(logger, "ERROR", "検証に失敗しました", error=str(e), kind=type(e).__name__)
        return EXIT_FAILED
    except (RaagkitError, jsonschema.ValidationError) as e:
        log_event(logger, "ERROR", "計算を中断しました", error=str(e), kind=type(e).__name__)
        return EXIT_USAGE

    sys.stdout.write(dump_json(report))
    return EXIT_OK if report["ok"] else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
