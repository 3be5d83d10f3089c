# chirow/io/config.py
"""
实验配置 (JSON) 的解析与校验。

validate 一次性返回全部问题；load_config 在有问题时抛出 ConfigValidationError。
"units": "hz" 时所有频率按普通频率 (Hz) 给出，读入时乘以 2π 转换为角频率。
"""
import copy
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import ConfigValidationError, InvalidParameterError, ValidationIssue
from ..model.lattice import Supermode
from ..model.params import PhysicalParams, TightBindingParams, derive_tight_binding, fsr_from_geometry

logger = logging.getLogger(__name__)

MODES = ("bands", "spectrum", "greens", "transmission", "circulator", "sweep")
TRANSFER_MODES = ("transmission", "circulator")
UNITS = ("normalized", "hz")
FORMATS = ("csv", "json")

FREQUENCY_KEYS = ("omega0", "fsr", "omega_q", "gamma_qe", "Gamma", "gamma_in", "g", "J1", "J2")
KAPPA_KEYS = ("kappa1", "kappa2", "kappa_in", "kappa_out")
TIGHT_BINDING_KEYS = ("g", "J1", "J2")
OTHER_KEYS = ("n_eff", "radius", "n_cells", "epsilon", "scatterer_cell", "omega0_hz")
PARAM_KEYS = FREQUENCY_KEYS + KAPPA_KEYS + OTHER_KEYS
NON_NEGATIVE_KEYS = ("gamma_qe", "Gamma", "gamma_in", "g", "J1", "J2", "epsilon")
POSITIVE_KEYS = ("omega0", "fsr", "n_eff", "radius", "omega0_hz")

DEFAULT_K_POINTS = 201
DEFAULT_GREENS_POINTS = 401


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def config_hash(document: dict) -> str:
    """根据配置内容生成稳定的哈希值（与键顺序无关）。"""
    text = json.dumps(document, sort_keys=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ExperimentConfig:
    """
    校验通过的实验配置。params、grid、greens 中的频率已换算为内部单位。
    """
    mode: str
    units: str
    supermode: Supermode
    params: dict
    grid: dict
    greens: dict
    sweep: dict | None
    output: dict
    threshold: float
    document: dict = field(repr=False)

    @property
    def digest(self) -> str:
        return config_hash(self.document)[:12]

    @property
    def stem(self) -> str:
        return f"{self.mode}_{self.digest}"

    @property
    def omega0(self) -> float:
        return self.params.get("omega0", 1.0)

    @property
    def is_tight_binding(self) -> bool:
        return any(key in self.params for key in TIGHT_BINDING_KEYS)

    def _unit_scale(self) -> float:
        if self.units == "hz":
            return 1.0
        return 2 * math.pi * self.params["omega0_hz"] if "omega0_hz" in self.params else 1.0

    def resolved_fsr(self) -> float | None:
        p = self.params
        if "fsr" in p:
            return p["fsr"]
        if "n_eff" in p and "radius" in p:
            return fsr_from_geometry(p["n_eff"], p["radius"], self._unit_scale())
        return None

    def physical_params(self) -> PhysicalParams:
        """转换为 PhysicalParams；紧束缚形式时按 κ = iJ/𝓕、Γ = g²/(2𝓕) 反推。"""
        p = self.params
        kwargs: dict[str, Any] = {
            "omega0": self.omega0,
            "n_cells": p["n_cells"],
            "unit_scale": self._unit_scale(),
        }
        for key in ("fsr", "n_eff", "radius", "omega_q", "gamma_qe", "gamma_in", "epsilon", "scatterer_cell"):
            if key in p:
                kwargs[key] = p[key]
        for key in ("kappa_in", "kappa_out"):
            if key in p:
                kwargs[key] = 1j * p[key]
        if self.is_tight_binding:
            fsr = self.resolved_fsr()
            if fsr is None:
                raise InvalidParameterError("紧束缚参数用于转移矩阵计算时需要 fsr 或 (n_eff, radius)")
            kwargs["kappa1"] = 1j * p.get("J1", 0.0) / fsr
            kwargs["kappa2"] = 1j * p.get("J2", 0.0) / fsr
            kwargs["Gamma"] = p.get("g", 0.0) ** 2 / (2.0 * fsr)
        else:
            for key in ("kappa1", "kappa2"):
                if key in p:
                    kwargs[key] = 1j * p[key]
            if "Gamma" in p:
                kwargs["Gamma"] = p["Gamma"]
        return PhysicalParams(**kwargs)

    def tight_binding(self) -> TightBindingParams:
        """转换为 TightBindingParams；物理参数形式时经 derive_tight_binding 推出。"""
        p = self.params
        if self.is_tight_binding:
            return TightBindingParams(g=p.get("g", 0.0), J1=p.get("J1", 0.0), J2=p.get("J2", 0.0),
                                      omega0=self.omega0, omega_q=p.get("omega_q"),
                                      gamma_qe=p.get("gamma_qe", 0.0), n_cells=p["n_cells"])
        return derive_tight_binding(self.physical_params())

    def grid_values(self, default_span: float, default_points: int) -> np.ndarray:
        """失谐网格 ω−Ω；未给出时取 ±default_span。"""
        lower = self.grid.get("omega_min", -default_span)
        upper = self.grid.get("omega_max", default_span)
        return np.linspace(lower, upper, self.grid.get("points", default_points))

    def k_values(self) -> np.ndarray:
        return np.linspace(-np.pi, np.pi, self.grid.get("k_points", DEFAULT_K_POINTS))


class _Collector:
    def __init__(self):
        self.issues: list[ValidationIssue] = []

    def add(self, path: str, message: str):
        self.issues.append(ValidationIssue(path, message))


def _check_section(doc: dict, name: str, issues: _Collector) -> dict:
    section = doc.get(name, {})
    if section is None:
        return {}
    if not isinstance(section, dict):
        issues.add(name, "必须为 JSON 对象")
        return {}
    return section


def _validate_params(params: dict, mode: str, inner_mode: str | None, units: str, issues: _Collector):
    for key in params:
        if key not in PARAM_KEYS:
            issues.add(f"params.{key}", "未知字段")
    for key, value in params.items():
        if key in PARAM_KEYS and key != "scatterer_cell" and key != "n_cells" and not _is_number(value):
            issues.add(f"params.{key}", "必须为有限数值")

    if "n_cells" not in params:
        issues.add("params.n_cells", "缺少必填字段")
    elif not _is_int(params["n_cells"]) or params["n_cells"] < 1:
        issues.add("params.n_cells", f"必须为不小于 1 的整数，当前为 {params['n_cells']!r}")
    cell = params.get("scatterer_cell")
    if cell is not None and (not _is_int(cell) or cell < 1):
        issues.add("params.scatterer_cell", f"必须为正整数，当前为 {cell!r}")

    for key in NON_NEGATIVE_KEYS:
        if _is_number(params.get(key)) and params[key] < 0:
            issues.add(f"params.{key}", "必须非负")
    for key in POSITIVE_KEYS:
        if _is_number(params.get(key)) and params[key] <= 0:
            issues.add(f"params.{key}", "必须为正数")
    for key in KAPPA_KEYS:
        value = params.get(key)
        if _is_number(value) and not 0 <= value < 1:
            issues.add(f"params.{key}", f"取 Im(κ)，须满足 0 ≤ Im(κ) < 1，当前为 {value}")

    tight = any(key in params for key in TIGHT_BINDING_KEYS)
    physical = any(key in params for key in ("kappa1", "kappa2", "Gamma"))
    if tight and physical:
        issues.add("params", "紧束缚参数 (g, J1, J2) 与耦合系数 (kappa1, kappa2, Gamma) 不能同时给出")
    if not tight and not physical:
        issues.add("params", "需要给出 (g, J1, J2) 或 (kappa1, kappa2, Gamma)")
    if units == "hz" and "omega0" not in params:
        issues.add("params.omega0", "units=hz 时必须给出 omega0")

    has_fsr = "fsr" in params
    has_geometry = "n_eff" in params and "radius" in params
    if ("n_eff" in params) != ("radius" in params):
        issues.add("params.radius" if "n_eff" in params else "params.n_eff", "n_eff 与 radius 必须同时给出")
    if has_geometry and units == "normalized" and "omega0_hz" not in params:
        issues.add("params.omega0_hz", "归一化单位下由几何参数推算 fsr 时需要 omega0_hz")
    effective = inner_mode if mode == "sweep" else mode
    if (physical or effective in TRANSFER_MODES) and not (has_fsr or has_geometry):
        issues.add("params.fsr", "缺少 fsr 或 (n_eff, radius)")


def _scaled(document: dict) -> tuple[dict, dict, dict]:
    # 把频率字段换算到内部单位
    factor = 2 * math.pi if document.get("units", "normalized") == "hz" else 1.0
    params = dict(document.get("params") or {})
    for key in FREQUENCY_KEYS:
        if key in params:
            params[key] = params[key] * factor
    grid = dict(document.get("grid") or {})
    for key in ("omega_min", "omega_max"):
        if key in grid:
            grid[key] = grid[key] * factor
    greens = dict(document.get("greens") or {})
    if "eta" in greens:
        greens["eta"] = greens["eta"] * factor
    return params, grid, greens


def _check_semantics(document: dict, issues: _Collector):
    # 结构校验通过后再尝试构造参数对象，捕获一致性错误
    params, grid, greens = _scaled(document)
    config = ExperimentConfig(mode=document["mode"], units=document.get("units", "normalized"),
                              supermode=Supermode(document.get("supermode", "forward")),
                              params=params, grid=grid, greens=greens, sweep=document.get("sweep"),
                              output={}, threshold=0.95, document=document)
    try:
        if config.resolved_fsr() is not None or "fsr" in params:
            config.physical_params()
        else:
            config.tight_binding()
    except InvalidParameterError as exc:
        path = "params.fsr" if "fsr" in str(exc) else "params"
        issues.add(path, str(exc))


def validate(source) -> list[ValidationIssue]:
    """
    校验配置文本（或已解析的 dict），返回全部问题；列表为空表示通过。
    """
    issues = _Collector()
    if isinstance(source, (str, bytes)):
        try:
            document = json.loads(source)
        except json.JSONDecodeError as exc:
            return [ValidationIssue("$", f"JSON 解析失败: {exc}")]
    else:
        document = source
    if not isinstance(document, dict):
        return [ValidationIssue("$", "配置必须为 JSON 对象")]

    mode = document.get("mode")
    if mode is None:
        issues.add("mode", "缺少必填字段")
    elif mode not in MODES:
        issues.add("mode", f"必须为 {', '.join(MODES)} 之一，当前为 {mode!r}")
    units = document.get("units", "normalized")
    if units not in UNITS:
        issues.add("units", f"必须为 {', '.join(UNITS)} 之一，当前为 {units!r}")
    supermode = document.get("supermode", "forward")
    if supermode not in [m.value for m in Supermode]:
        issues.add("supermode", f"必须为 forward 或 backward，当前为 {supermode!r}")

    inner_mode = None
    sweep = document.get("sweep")
    if mode == "sweep":
        if not isinstance(sweep, dict):
            issues.add("sweep", "mode=sweep 时必须给出 sweep 对象")
        else:
            inner_mode = sweep.get("mode")
            if inner_mode not in MODES or inner_mode == "sweep":
                issues.add("sweep.mode", f"必须为 {', '.join(MODES[:-1])} 之一，当前为 {inner_mode!r}")
                inner_mode = None
            parameter = sweep.get("parameter")
            if not isinstance(parameter, str) or not parameter.startswith("params.") \
                    or parameter.split(".", 1)[1] not in PARAM_KEYS:
                issues.add("sweep.parameter", f"必须为 params.<字段>，当前为 {parameter!r}")
            values = sweep.get("values")
            if not isinstance(values, list) or not values:
                issues.add("sweep.values", "必须为非空数组")
            else:
                for i, value in enumerate(values):
                    if not _is_number(value):
                        issues.add(f"sweep.values[{i}]", f"必须为有限数值，当前为 {value!r}")

    if "params" not in document:
        issues.add("params", "缺少必填字段")
        params = {}
    else:
        params = _check_section(document, "params", issues)
    _validate_params(params, mode, inner_mode, units if units in UNITS else "normalized", issues)

    grid = _check_section(document, "grid", issues)
    points = grid.get("points")
    if points is not None and (not _is_int(points) or points < 2):
        issues.add("grid.points", f"grid.points ≥ 2，当前为 {points!r}")
    k_points = grid.get("k_points")
    if k_points is not None and (not _is_int(k_points) or k_points < 2):
        issues.add("grid.k_points", f"grid.k_points ≥ 2，当前为 {k_points!r}")
    for key in ("omega_min", "omega_max"):
        if key in grid and not _is_number(grid[key]):
            issues.add(f"grid.{key}", "必须为有限数值")
    if _is_number(grid.get("omega_min")) and _is_number(grid.get("omega_max")) \
            and grid["omega_min"] >= grid["omega_max"]:
        issues.add("grid.omega_min", "必须满足 omega_min < omega_max")

    greens = _check_section(document, "greens", issues)
    if greens.get("side", "left") not in ("left", "right"):
        issues.add("greens.side", f"必须为 left 或 right，当前为 {greens.get('side')!r}")
    if "eta" in greens and (not _is_number(greens["eta"]) or greens["eta"] <= 0):
        issues.add("greens.eta", "必须为正数")

    output = _check_section(document, "output", issues)
    formats = output.get("formats", list(FORMATS))
    if not isinstance(formats, list) or any(f not in FORMATS for f in formats):
        issues.add("output.formats", f"必须为 {list(FORMATS)} 的子集，当前为 {formats!r}")
    if "directory" in output and not isinstance(output["directory"], str):
        issues.add("output.directory", "必须为字符串")

    threshold = document.get("threshold", 0.95)
    if not _is_number(threshold) or not 0 < threshold < 1:
        issues.add("threshold", f"必须位于 (0, 1)，当前为 {threshold!r}")

    if not issues.issues:
        _check_semantics(document, issues)
    return issues.issues


def load_config(source, mode: str | None = None) -> ExperimentConfig:
    """
    解析并校验配置，返回 ExperimentConfig。

    :param source: JSON 文本或 dict。
    :param mode: 覆盖配置中的 mode（CLI 的 --mode）。
    """
    document = json.loads(source) if isinstance(source, (str, bytes)) else copy.deepcopy(source)
    if mode is not None and isinstance(document, dict):
        document["mode"] = mode
    issues = validate(document)
    if issues:
        raise ConfigValidationError(issues)
    params, grid, greens = _scaled(document)
    output = dict(document.get("output") or {})
    output.setdefault("directory", ".")
    output.setdefault("formats", list(FORMATS))
    return ExperimentConfig(
        mode=document["mode"],
        units=document.get("units", "normalized"),
        supermode=Supermode(document.get("supermode", "forward")),
        params=params,
        grid=grid,
        greens=greens,
        sweep=document.get("sweep"),
        output=output,
        threshold=document.get("threshold", 0.95),
        document=document,
    )


def with_value(document: dict, dotted: str, value) -> dict:
    """返回把点分路径 dotted 处的值替换为 value 后的配置副本。"""
    result = copy.deepcopy(document)
    node = result
    parts = dotted.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value
    return result


REPORT_SCHEMA = {
    "windows": list,
    "fidelity": float,
    "survival": float,
    "insertion_loss_db": float,
    "bandwidth": float,
}


def validate_report(report: dict) -> list[ValidationIssue]:
    """校验环行器 JSON 报告的结构。"""
    issues = _Collector()
    if not isinstance(report, dict):
        return [ValidationIssue("$", "报告必须为 JSON 对象")]
    for key, kind in REPORT_SCHEMA.items():
        if key not in report:
            issues.add(key, "缺少必填字段")
        elif kind is float and not (report[key] is None or isinstance(report[key], (int, float))):
            issues.add(key, "必须为数值")
        elif kind is list and not isinstance(report[key], list):
            issues.add(key, "必须为数组")
    for i, window in enumerate(report.get("windows") or []):
        if not isinstance(window, dict) or not {"center", "width"} <= set(window):
            issues.add(f"windows[{i}]", "必须包含 center 与 width")
    for key in ("fidelity", "survival"):
        value = report.get(key)
        if isinstance(value, (int, float)) and not -1e-9 <= value <= 1 + 1e-9:
            issues.add(key, "必须位于 [0, 1]")
    return issues.issues
