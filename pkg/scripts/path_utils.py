# scripts/path_utils.py
# raagkit - パス統一ユーティリティ
# ローカル・CI 両対応のディレクトリ管理と JSON 入出力

from pathlib import Path
import os
import json
import sys
from typing import Any, Optional

# --- 基本パス設定 ---

def get_project_root() -> Path:
    """プロジェクトルートを取得"""
    # 環境変数で指定されている場合
    if os.environ.get("RAAGKIT_ROOT"):
        return Path(os.environ["RAAGKIT_ROOT"])

    # GitHub Actions の場合
    if os.environ.get("GITHUB_WORKSPACE"):
        return Path(os.environ["GITHUB_WORKSPACE"])

    current_file = Path(__file__).resolve()
    if current_file.parent.name == "scripts":
        return current_file.parent.parent

    return Path.cwd()


def get_data_dir() -> Path:
    """データディレクトリを取得"""
    data_dir = get_project_root() / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    return data_dir


def get_fixtures_dir() -> Path:
    """入力用フィクスチャ（グラフ・自己同型・マニフェスト）"""
    return get_data_dir() / "fixtures"


def get_schema_dir() -> Path:
    """JSON スキーマ置き場"""
    return get_data_dir() / "schemas"


def get_logs_dir() -> Path:
    logs_dir = get_project_root() / "logs"
    logs_dir.mkdir(parents=True, exist_ok=True)
    return logs_dir


def resolve_input(path_str: str, base: Optional[Path] = None) -> Path:
    """相対パスはマニフェストの場所（なければフィクスチャ）を基準に解決"""
    path = Path(path_str)
    if path.is_absolute() or path.exists():
        return path
    for root in (base, get_fixtures_dir()):
        if root is not None and (root / path).exists():
            return root / path
    return path


# --- ファイル操作ユーティリティ ---

def load_json(filepath: Path) -> Optional[Any]:
    """JSONファイルを読み込み"""
    if not filepath.exists():
        return None
    try:
        with open(filepath, 'r', encoding='utf-8') as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        print(f"[WARN] JSON読み込みエラー ({filepath}): {e}", file=sys.stderr)
        return None


def dump_json(data: Any, indent: int = 2) -> str:
    """決定的な JSON 文字列（キー順固定・末尾改行）"""
    return json.dumps(data, ensure_ascii=False, indent=indent, sort_keys=True) + "\n"


def save_json(filepath: Path, data: Any, indent: int = 2) -> bool:
    """JSONファイルを保存"""
    filepath.parent.mkdir(parents=True, exist_ok=True)
    try:
        with open(filepath, 'w', encoding='utf-8') as f:
            f.write(dump_json(data, indent))
        return True
    except OSError as e:
        print(f"[ERROR] JSON保存エラー ({filepath}): {e}", file=sys.stderr)
        return False

