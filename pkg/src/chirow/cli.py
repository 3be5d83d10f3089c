# chirow/cli.py
"""
命令行入口：读取 JSON 实验配置，分派到能带、本征谱、格林函数、透射谱、
环行器与参数扫描计算，并写出 CSV/JSON 结果。

用法示例:
  chirow --preset circulator_lossless --out results
  chirow --config my_experiment.json --mode transmission
  chirow --list-presets

退出码: 0 成功；2 配置错误；3 数值计算失败。
"""
import argparse
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.signal import find_peaks

from .device.circulator import circulator_report, fidelity_curve, tunneling_report
from .errors import ConfigValidationError, InvalidParameterError, NumericalFailureError
from .io.config import DEFAULT_GREENS_POINTS, ExperimentConfig, load_config, with_value
from .io.export import write_csv, write_json, write_meta
from .io.preset_manager import PresetManager
from .model.greens import DEFAULT_ETA_RATIO, as_side, left_stability, singularity_scan
from .model.lattice import EdgeFlag, band_structure, bulk_gap, diagonalize, finite_hamiltonian
from .transport.scattering import detuning_grid, transmission_spectrum

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
ENV_THREADS = "CHIROW_THREADS"


@dataclass
class ModeResult:
    """单个模式的计算结果：标量摘要、主表格、附加表格与 JSON 报告。"""
    summary: dict
    table: pd.DataFrame | None = None
    extra_tables: dict = field(default_factory=dict)
    report: dict | None = None


@dataclass
class RunResult:
    config: ExperimentConfig
    result: ModeResult
    files: list[Path]


def thread_limit() -> int:
    """扫描并行度：CHIROW_THREADS，缺省为 CPU 数。"""
    default = os.cpu_count() or 1
    raw = os.environ.get(ENV_THREADS)
    if not raw:
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning("警告: %s=%r 不是整数，使用默认值 %d", ENV_THREADS, raw, default)
        return default
    return max(1, value)


def _run_bands(config: ExperimentConfig) -> ModeResult:
    tb = config.tight_binding()
    frame = band_structure(tb, config.supermode, config.k_values())
    bands = [c for c in frame.columns if c.startswith("E_")]
    frame[bands] = frame[bands] / tb.omega0
    lower, upper = bulk_gap(tb, config.supermode)
    summary = {
        "supermode": config.supermode.value,
        "n_bands": len(bands),
        "gap_lower": lower / tb.omega0,
        "gap_upper": upper / tb.omega0,
        "gap_width": (upper - lower) / tb.omega0,
    }
    return ModeResult(summary=summary, table=frame, report=summary)


def _run_spectrum(config: ExperimentConfig) -> ModeResult:
    tb = config.tight_binding()
    spec = diagonalize(finite_hamiltonian(tb, config.supermode))
    frame = spec.to_frame()
    frame["energy"] = frame["energy"] / tb.omega0
    edge = spec.indices(EdgeFlag.LEFT, EdgeFlag.RIGHT, EdgeFlag.HYBRID)
    summary = {
        "supermode": config.supermode.value,
        "n_states": len(spec.eigenvalues),
        "n_edge": len(edge),
        "n_flat": spec.count(EdgeFlag.FLAT),
        "edge_energies": [float(spec.eigenvalues[i] / tb.omega0) for i in edge],
        "edge_flags": [spec.edge_flags[i].value for i in edge],
    }
    return ModeResult(summary=summary, table=frame,
                      extra_tables={"probabilities": spec.probability_frame()}, report=summary)


def _run_greens(config: ExperimentConfig) -> ModeResult:
    tb = config.tight_binding()
    side = as_side(config.greens.get("side", "left"))
    omega = config.grid_values(2.0 * tb.J2, DEFAULT_GREENS_POINTS)
    eta = config.greens.get("eta", DEFAULT_ETA_RATIO * tb.J2)
    frame = singularity_scan(side, tb.g, tb.J1, tb.J2, omega, eta)
    singular = frame.loc[frame["singular"], "omega"].tolist()
    summary = {
        "side": side.value,
        "stability": left_stability(tb.g, tb.J1, tb.J2),
        "n_singular": len(singular),
        "singular_omega": singular,
        "converged_fraction": float(frame["converged"].mean()),
    }
    return ModeResult(summary=summary, table=frame, report=summary)


def _omega_grid(config: ExperimentConfig, params) -> np.ndarray:
    if "omega_min" in config.grid or "points" in config.grid:
        default = detuning_grid(params) - params.omega0
        return params.omega0 + config.grid_values(float(default[-1]), len(default))
    return detuning_grid(params)


def _run_transmission(config: ExperimentConfig) -> ModeResult:
    params = config.physical_params()
    spec = transmission_spectrum(params, _omega_grid(config, params))
    frame = spec.to_frame()
    peaks, _ = find_peaks(spec.t(2, 3), height=0.5)
    summary = {
        "n_points": len(frame),
        "t23_peaks": int(len(peaks)),
        "max_t23": float(spec.t(2, 3).max()),
        "max_t14": float(spec.t(1, 4).max()),
        "scatterer": bool(spec.scatterer_active),
    }
    if spec.scatterer_active:
        summary["max_reflection_2"] = float(spec.t(2, 2).max())
        summary["max_t24"] = float(spec.t(2, 4).max())
    return ModeResult(summary=summary, table=frame, report=summary)


def _run_circulator(config: ExperimentConfig) -> ModeResult:
    params = config.physical_params()
    grid = _omega_grid(config, params)
    spec = transmission_spectrum(params, grid)
    report = circulator_report(params, grid, config.threshold, spectrum=spec)
    fidelity, survival, insertion_loss = fidelity_curve(spec.T)
    frame = spec.to_frame()
    frame["fidelity"] = fidelity
    frame["survival"] = survival
    frame["insertion_loss_db"] = insertion_loss
    tunneling = tunneling_report(params)
    payload = report.to_dict()
    payload["at_resonance"] = {
        "t23": tunneling.t23, "t14": tunneling.t14,
        "fidelity": tunneling.fidelity, "survival": tunneling.survival,
    }
    omega0 = params.omega0
    summary = {
        "n_windows": len(report.windows),
        "window_centers": [w.center / omega0 for w in report.windows],
        "fidelity": report.fidelity,
        "survival": report.survival,
        "insertion_loss_db": report.insertion_loss_db,
        "bandwidth": report.bandwidth / omega0,
        "total_bandwidth": report.total_bandwidth / omega0,
        "t23_at_resonance": tunneling.t23,
    }
    return ModeResult(summary=summary, table=frame, report=payload)


RUNNERS = {
    "bands": _run_bands,
    "spectrum": _run_spectrum,
    "greens": _run_greens,
    "transmission": _run_transmission,
    "circulator": _run_circulator,
}


def _scalar_summary(summary: dict) -> dict:
    return {k: v for k, v in summary.items() if isinstance(v, (int, float, str, bool))}


def _run_sweep(config: ExperimentConfig) -> ModeResult:
    sweep = config.sweep
    inner = {k: v for k, v in config.document.items() if k != "sweep"}
    inner["mode"] = sweep["mode"]

    def run_point(value):
        point = load_config(with_value(inner, sweep["parameter"], value))
        return _scalar_summary(RUNNERS[point.mode](point).summary)

    workers = min(thread_limit(), len(sweep["values"]))
    logger.info("参数扫描 %s，共 %d 个取值，并行度 %d", sweep["parameter"], len(sweep["values"]), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        summaries = list(pool.map(run_point, sweep["values"]))
    rows = [{sweep["parameter"]: value, **summary} for value, summary in zip(sweep["values"], summaries)]
    frame = pd.DataFrame(rows)
    summary = {"parameter": sweep["parameter"], "mode": sweep["mode"], "n_points": len(rows)}
    return ModeResult(summary=summary, table=frame, report={**summary, "points": rows})


def execute(config: ExperimentConfig) -> ModeResult:
    """执行配置对应的计算，不写文件。"""
    if config.mode == "sweep":
        return _run_sweep(config)
    return RUNNERS[config.mode](config)


def run(config: ExperimentConfig, out_dir: str | Path | None = None) -> RunResult:
    """
    执行配置并写出结果文件 <mode>_<hash>.csv / .json，以及 .meta.json。

    :param config: 校验通过的配置。
    :param out_dir: 输出目录，缺省取配置中的 output.directory。
    """
    result = execute(config)
    directory = Path(out_dir if out_dir is not None else config.output["directory"])
    formats = config.output["formats"]
    files = []
    if "csv" in formats and result.table is not None:
        files.append(write_csv(result.table, directory / f"{config.stem}.csv"))
        for name, table in result.extra_tables.items():
            files.append(write_csv(table, directory / f"{config.stem}_{name}.csv"))
    if "json" in formats and result.report is not None:
        files.append(write_json(result.report, directory / f"{config.stem}.json"))
    files.append(write_meta(directory / f"{config.stem}.meta.json", config.mode, config.digest, files))
    return RunResult(config=config, result=result, files=files)


def print_summary(run_result: RunResult):
    config = run_result.config
    print("=" * 72)
    print(f"模式: {config.mode}    配置哈希: {config.digest}")
    print("-" * 72)
    for key, value in run_result.result.summary.items():
        if isinstance(value, float):
            print(f"{key:<24}{value:.6g}")
        elif isinstance(value, list):
            shown = ", ".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in value)
            print(f"{key:<24}[{shown}]")
        else:
            print(f"{key:<24}{value}")
    print("-" * 72)
    for path in run_result.files:
        print("Wrote", path)
    print("=" * 72)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chirow", description="手性 QE-CROW 单光子输运与环行器模拟")
    source = ap.add_mutually_exclusive_group()
    source.add_argument("--config", help="实验配置 JSON 文件路径")
    source.add_argument("--preset", help="内置或用户预设名")
    source.add_argument("--list-presets", action="store_true", help="列出可用预设")
    ap.add_argument("--mode", default=None, help="覆盖配置中的 mode")
    ap.add_argument("--out", default=None, help="输出目录")
    ap.add_argument("--quiet", action="store_true", help="只输出警告及以上级别的日志")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.list_presets:
        PresetManager().print_available_presets()
        return EXIT_OK
    try:
        if args.preset:
            document = PresetManager().load_config(args.preset)
        elif args.config:
            document = Path(args.config).read_text(encoding="utf-8")
        else:
            print("config: 需要 --config 或 --preset")
            return EXIT_CONFIG
        config = load_config(document, mode=args.mode)
    except ConfigValidationError as exc:
        for issue in exc.issues:
            print(issue)
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        print(f"$: JSON 解析失败: {exc}")
        return EXIT_CONFIG
    except (OSError, KeyError) as exc:
        print(f"config: 无法读取配置: {exc}")
        return EXIT_CONFIG

    try:
        result = run(config, args.out)
    except NumericalFailureError as exc:
        print(f"{exc.operation}: {exc.message}")
        return EXIT_NUMERICAL
    except ConfigValidationError as exc:
        # 扫描点的配置在运行时才逐个校验
        for issue in exc.issues:
            print(issue)
        return EXIT_CONFIG
    except InvalidParameterError as exc:
        print(f"params: {exc}")
        return EXIT_CONFIG
    if not args.quiet:
        print_summary(result)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
