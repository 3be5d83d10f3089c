# chirow/io/export.py
"""
结果文件的写出。数据文件不含时间戳，同一配置重复运行得到逐字节相同的输出；
运行信息单独写入 .meta.json。
"""
import json
import logging
import math
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def _plain(value):
    # 转换为 JSON 可序列化的纯 Python 对象，NaN/inf 写为 null
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, complex):
        return {"re": _plain(value.real), "im": _plain(value.imag)}
    return value


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    """以 17 位有效数字写出 CSV。"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_json(payload: dict, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_plain(payload), indent=2, sort_keys=True, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def write_meta(path: Path, mode: str, digest: str, files: list[Path]) -> Path:
    """写出运行元数据：版本、时间戳、配置哈希与产物列表。"""
    from .. import __version__

    meta = {
        "version": __version__,
        "mode": mode,
        "config_hash": digest,
        "created": datetime.now(timezone.utc).isoformat(),
        "files": [Path(f).name for f in files],
    }
    return write_json(meta, path)
