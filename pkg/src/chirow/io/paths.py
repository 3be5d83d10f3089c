# chirow/io/paths.py
import logging
import os
from pathlib import Path
from typing import Optional

from platformdirs import user_cache_dir

logger = logging.getLogger(__name__)

APP_NAME = "chirow"
ENV_USER_DATA = "CHIROW_USER_DATA"

# 存储用户自定义的路径
_USER_DATA_DIR_OVERRIDE: Optional[Path] = None


def get_builtin_data_dir() -> Path:
    """
    获取 chirow 包内置的 'data' 目录路径 (只读)，其中存放内置参数预设。

    Returns:
        Path: 指向 chirow/data 目录的 Path 对象。
    """
    return Path(__file__).parent.parent / "data"


def set_user_data_dir(path: str | Path) -> Path:
    """
    在运行时手动指定一个可写的数据目录（用户预设存放于其下的 presets 子目录）。

    Args:
        path (str | Path): 用户指定的可写目录路径。
    """
    global _USER_DATA_DIR_OVERRIDE
    _USER_DATA_DIR_OVERRIDE = Path(path)
    _USER_DATA_DIR_OVERRIDE.mkdir(parents=True, exist_ok=True)
    logger.info("用户数据目录已设置为: %s", _USER_DATA_DIR_OVERRIDE)
    return _USER_DATA_DIR_OVERRIDE


def reset_user_data_dir():
    """撤销 set_user_data_dir 的设置。"""
    global _USER_DATA_DIR_OVERRIDE
    _USER_DATA_DIR_OVERRIDE = None


def get_user_data_dir() -> Path:
    """
    获取可写的用户数据目录。

    优先级:
    1.  `set_user_data_dir()` 手动设置的路径。
    2.  `CHIROW_USER_DATA` 环境变量。
    3.  操作系统的标准用户缓存目录 (通过 platformdirs)；无法创建时退回 ~/.chirow-cache。

    Returns:
        Path: 指向可写数据目录的 Path 对象。
    """
    if _USER_DATA_DIR_OVERRIDE:
        return _USER_DATA_DIR_OVERRIDE

    env_path = os.environ.get(ENV_USER_DATA)
    p = Path(env_path) if env_path else Path(user_cache_dir(APP_NAME))
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        fallback = Path.home() / ".chirow-cache"
        logger.warning("警告: 无法创建数据目录 %s (%s)，改用 %s", p, exc, fallback)
        fallback.mkdir(parents=True, exist_ok=True)
        p = fallback
    return p


def get_user_preset_dir() -> Path:
    """用户预设目录，位于用户数据目录下的 presets 子目录。"""
    p = get_user_data_dir() / "presets"
    p.mkdir(parents=True, exist_ok=True)
    return p
