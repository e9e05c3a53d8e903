#!/usr/bin/env python3
"""
ヘルスチェックスクリプト
- 依存パッケージ・ディレクトリ・スキーマ・設定ファイルを確認する
- 小さな Salvetti 複体を作って NPC 判定まで通す
"""

import configparser
import sys
from pathlib import Path

sys.path.append(str(Path(__file__).parent.parent))

from scripts.path_utils import get_fixtures_dir, get_logs_dir, get_project_root, get_schema_dir, load_json
from scripts.settings import CONFIG_FILE, DEFAULTS, setup_logging

logger = setup_logging(__name__)

REQUIRED_PACKAGES = ['numpy', 'networkx', 'sympy', 'jsonschema', 'joblib']
REQUIRED_SCHEMAS = ['report.schema.json', 'manifest.schema.json']


def check_dependencies():
    """依存関係のチェック"""
    logger.info("🔍 依存関係をチェック中...")
    missing = []
    for package in REQUIRED_PACKAGES:
        try:
            __import__(package)
            logger.info(f"✅ {package} が利用可能")
        except ImportError:
            missing.append(package)
            logger.warning(f"❌ {package} が見つかりません")
    return len(missing) == 0


def check_data_directories():
    """データディレクトリのチェック"""
    logger.info("📁 データディレクトリをチェック中...")
    root = get_project_root()
    all_ok = True
    for directory in (root / 'data', get_fixtures_dir(), get_schema_dir(), get_logs_dir()):
        if directory.is_dir():
            logger.info(f"✅ {directory} が存在")
        else:
            logger.warning(f"❌ {directory} が存在しません")
            all_ok = False
    return all_ok


def check_schemas():
    """報告・マニフェストのスキーマが読めるか"""
    logger.info("📐 スキーマをチェック中...")
    all_ok = True
    for name in REQUIRED_SCHEMAS:
        schema = load_json(get_schema_dir() / name)
        if not isinstance(schema, dict):
            logger.warning(f"❌ {name} が読み込めません")
            all_ok = False
    return all_ok


def check_config_file(config_file: Path = CONFIG_FILE):
    """設定ファイルのチェック（無ければデフォルトで動くので成功扱い）"""
    logger.info("⚙️ 設定ファイルをチェック中...")
    if not config_file.exists():
        logger.info("設定ファイルが無いのでデフォルト値を使います")
        return True
    config = configparser.ConfigParser()
    try:
        config.read(config_file, encoding='utf-8')
    except configparser.Error as e:
        logger.error(f"設定ファイルの読み込みに失敗: {e}")
        return False
    unknown = [s for s in config.sections() if s not in DEFAULTS]
    if unknown:
        logger.warning(f"未知のセクション: {unknown}")
        return False
    logger.info("✅ 設定ファイルが正常")
    return True


def check_salvetti_smoke():
    """辺 a–b の Salvetti 複体が NPC でマーキングも正しいか"""
    logger.info("🧊 Salvetti 複体のスモークテスト...")
    from scripts.cube_complex import npc_check, salvetti, verify_marking
    from scripts.graph_core import SimplicialGraph

    marked = salvetti(SimplicialGraph.path(["a", "b"]))
    verify_marking(marked)
    ok = npc_check(marked.complex).ok and marked.complex.dimension == 2
    logger.info(f"{'✅' if ok else '❌'} セル数 {len(marked.complex.cells)}")
    return ok


CHECKS = [
    ("依存関係", check_dependencies),
    ("データディレクトリ", check_data_directories),
    ("スキーマ", check_schemas),
    ("設定ファイル", check_config_file),
    ("Salvetti スモーク", check_salvetti_smoke),
]


def main():
    """メインヘルスチェック"""
    logger.info("🚀 ヘルスチェックを開始します")

    results = []
    for name, check_func in CHECKS:
        try:
            results.append((name, check_func()))
        except Exception as e:
            logger.error(f"{name} チェック中にエラー: {e}")
            results.append((name, False))

    logger.info("📋 ヘルスチェック結果:")
    all_passed = True
    for name, passed in results:
        logger.info(f"{'✅ PASS' if passed else '❌ FAIL'} - {name}")
        all_passed = all_passed and passed

    if all_passed:
        logger.info("🎉 すべてのチェックが成功しました")
        return 0
    logger.error("⚠️ 一部のチェックが失敗しました。設定を確認してください。")
    return 1


if __name__ == "__main__":
    sys.exit(main())
