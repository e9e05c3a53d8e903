# scripts/settings.py
# raagkit - 設定ファイルとロギングの共通設定

import configparser
import json
import logging
import os
from pathlib import Path
from typing import Any, Callable, Optional

# --- 定数 ---
BASE_DIR = Path(__file__).resolve().parent.parent
CONFIG_FILE = BASE_DIR / "config"

# デフォルト設定（config ファイルが無くても動作する）
DEFAULTS = {
    'search': {
        'conjugator_bound': '0',
        'group_cap': '64',
        'vertex_cap': '12',
        'oracle_bound': '4',
        'loop_search_depth': '4',
    },
    'complex': {
        'subdivision': '2',
        'max_subdivision': '16',
    },
    'performance': {
        'jobs': '1',
    },
    'logging': {
        'level': 'INFO',
        'log_file': 'raagkit.log',
    },
}

_CONFIG: Optional[configparser.ConfigParser] = None
_LOGGING_READY = False


def load_config(path: Optional[Path] = None) -> configparser.ConfigParser:
    """設定ファイルを読み込む（デフォルト → config ファイルの順に上書き）"""
    config = configparser.ConfigParser()
    config.read_dict(DEFAULTS)

    if path is None:
        env_path = os.environ.get("RAAGKIT_CONFIG")
        path = Path(env_path) if env_path else CONFIG_FILE

    if path.exists():
        try:
            config.read(path, encoding='utf-8')
        except (configparser.Error, OSError) as e:
            logging.getLogger(__name__).warning(f"設定ファイルの読み込みに失敗しました: {e}")
    return config


def get_config() -> configparser.ConfigParser:
    global _CONFIG
    if _CONFIG is None:
        _CONFIG = load_config()
    return _CONFIG


def get_setting(section: str, key: str, cast: Callable[[str], Any] = str) -> Any:
    """型変換つきで設定値を取り出す"""
    return cast(get_config()[section][key])


def setup_logging(name: str) -> logging.Logger:
    """ロギングシステムの設定（ファイル + 標準エラー）"""
    global _LOGGING_READY
    if not _LOGGING_READY:
        log_dir = BASE_DIR / "logs"
        log_dir.mkdir(exist_ok=True)
        level_name = get_setting('logging', 'level').upper()
        logging.basicConfig(
            level=getattr(logging, level_name, logging.INFO),
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            handlers=[
                logging.FileHandler(log_dir / get_setting('logging', 'log_file'), encoding='utf-8'),
                logging.StreamHandler()
            ]
        )
        _LOGGING_READY = True
    return logging.getLogger(name)


def log_event(logger: logging.Logger, level: str, message: str, **context: Any) -> None:
    """構造化ログを出力"""
    log_msg = message
    if context:
        log_msg += f" | context={json.dumps(context, ensure_ascii=False, default=str, sort_keys=True)}"

    if level == "INFO":
        logger.info(log_msg)
    elif level == "WARN":
        logger.warning(log_msg)
    elif level == "ERROR":
        logger.error(log_msg)
    else:
        logger.debug(log_msg)
