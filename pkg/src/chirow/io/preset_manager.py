# chirow/io/preset_manager.py
import copy
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional

from . import paths

logger = logging.getLogger(__name__)

_META_KEYS = ("name", "description")


class PresetManager:
    """
    参数预设管理器，自动发现并加载实验配置预设。

    预设从两个位置加载：
    1.  包内置的 'data' 目录 (只读)。
    2.  用户可写的 'presets' 目录 (位于 `paths.get_user_data_dir() / 'presets'`)。

    两处存在同名文件时，用户目录中的文件优先。
    """

    def __init__(self):
        self.builtin_data_dir = paths.get_builtin_data_dir()
        self.user_preset_dir = paths.get_user_preset_dir()
        self._presets: Dict[str, Dict] = {}
        self._load_presets()

    def _load_files_from_path(self, data_path: Path, source: str):
        """从指定目录加载所有 .json 预设。"""
        for json_file in sorted(data_path.glob("*.json")):
            try:
                data = json.loads(json_file.read_text(encoding="utf-8"))
                if not isinstance(data, dict) or "mode" not in data:
                    raise KeyError("mode")
            except (json.JSONDecodeError, KeyError, OSError) as e:
                logger.warning("警告: 无法加载预设文件 %s: %s", json_file, e)
                continue
            key = json_file.stem
            # 同名键覆盖，实现用户文件优先
            self._presets[key] = {
                "name": data.get("name", key),
                "description": data.get("description", ""),
                "mode": data["mode"],
                "path": json_file.resolve(),
                "source": source,
            }

    def _load_presets(self):
        logger.debug("正在从包内目录加载预设: %s", self.builtin_data_dir)
        self._load_files_from_path(self.builtin_data_dir, "builtin")
        logger.debug("正在从用户目录加载预设: %s", self.user_preset_dir)
        self._load_files_from_path(self.user_preset_dir, "user")
        if not self._presets:
            logger.warning("警告: 在 %s 和 %s 中均未找到预设文件。", self.builtin_data_dir, self.user_preset_dir)

    def list_available_presets(self) -> List[str]:
        return sorted(self._presets)

    def get_preset_info(self, key: str) -> Optional[Dict]:
        info = self._presets.get(key)
        return dict(info) if info else None

    def get_preset_path(self, key: str) -> Optional[Path]:
        info = self._presets.get(key)
        return info["path"] if info else None

    def load_config(self, key: str) -> Dict:
        """
        读取预设并返回实验配置 dict（去掉 name/description 元信息）。

        :param key: 预设键名（文件名去掉扩展名）。
        """
        path = self.get_preset_path(key)
        if path is None:
            available = ", ".join(self.list_available_presets())
            raise KeyError(f"未找到预设 {key!r}，可用预设: {available}")
        document = json.loads(path.read_text(encoding="utf-8"))
        return {k: copy.deepcopy(v) for k, v in document.items() if k not in _META_KEYS}

    def print_available_presets(self):
        print("可用的参数预设:")
        print(f"(从 {self.builtin_data_dir} 和 {self.user_preset_dir} 加载)")
        print("-" * 80)
        if not self._presets:
            print("未找到任何预设。")
            return
        for key in self.list_available_presets():
            info = self._presets[key]
            source_tag = "[用户]" if info["source"] == "user" else "[内置]"
            print(f"{key:<26}{info['mode']:<14}{source_tag}  {info['description']}")
