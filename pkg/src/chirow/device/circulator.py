# chirow/device/circulator.py
"""
单光子环行器的器件指标：非互易窗口、保真度、光子存活概率、插入损耗与带宽。

路由约定为 1→2→3→4→1。保真度取各端口"正确输出占总输出之比"的平均，
存活概率取各端口总输出的平均，插入损耗取四个正确端口透射几何平均的 −10·log10。
"""
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from ..errors import DegenerateRoutingError
from ..model.params import PhysicalParams
from ..transport.scattering import (
    TransmissionSpectrum,
    detuning_grid,
    transmission_spectrum,
    transmission_table,
)

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.95
ROUTING = {1: 2, 2: 3, 3: 4, 4: 1}
_CORRECT = (np.arange(4), np.array([ROUTING[m] - 1 for m in range(1, 5)]))


@dataclass(frozen=True)
class Window:
    """非互易窗口，center 为 T23 峰值处的失谐 ω−Ω，lower/upper 为网格上的边界。"""
    center: float
    width: float
    lower: float
    upper: float
    peak_t23: float


@dataclass(frozen=True)
class Channel:
    """保真度高于阈值的连续频段及其最佳工作点（最大保真度处）。"""
    lower: float
    upper: float
    center: float
    fidelity: float
    survival: float
    insertion_loss_db: float
    mean_insertion_loss_db: float

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class BandwidthResult:
    width: float
    mean_insertion_loss_db: float
    total_width: float
    channels: tuple[Channel, ...]


@dataclass(frozen=True)
class TunnelingReport:
    """ω=Ω 处的边缘态隧穿工作点。"""
    t23: float
    t14: float
    fidelity: float
    survival: float
    insertion_loss_db: float


@dataclass(frozen=True)
class CirculatorReport:
    windows: tuple[Window, ...]
    fidelity: float
    survival: float
    insertion_loss_db: float
    bandwidth: float
    mean_insertion_loss_db: float = float("nan")
    total_bandwidth: float = 0.0
    operating_point: float = float("nan")
    channels: tuple[Channel, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        """JSON 报告：windows 只保留 center 与 width，信道给出完整信息。"""
        return {
            "windows": [{"center": w.center, "width": w.width} for w in self.windows],
            "fidelity": self.fidelity,
            "survival": self.survival,
            "insertion_loss_db": self.insertion_loss_db,
            "bandwidth": self.bandwidth,
            "mean_insertion_loss_db": self.mean_insertion_loss_db,
            "total_bandwidth": self.total_bandwidth,
            "operating_point": self.operating_point,
            "channels": [asdict(c) for c in self.channels],
        }

    def print_summary(self, omega0: float = 1.0):
        print("=" * 80)
        print("环行器性能报告")
        print("=" * 80)
        print(f"工作点 (ω−Ω)/Ω : {self.operating_point / omega0:.6e}")
        print(f"保真度          : {self.fidelity:.4f}")
        print(f"存活概率        : {self.survival:.4f}")
        print(f"插入损耗        : {self.insertion_loss_db:.4f} dB")
        print(f"带宽 (最宽信道) : {self.bandwidth / omega0:.6e} Ω")
        print(f"总带宽          : {self.total_bandwidth / omega0:.6e} Ω")
        print("-" * 80)
        print(f"{'窗口中心/Ω':>16}{'宽度/Ω':>16}{'峰值 T23':>12}")
        for w in self.windows:
            print(f"{w.center / omega0:>16.6e}{w.width / omega0:>16.6e}{w.peak_t23:>12.4f}")
        if not self.windows:
            print("未找到非互易窗口。")
        print("=" * 80)


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    # 返回 mask 中连续 True 段的 [start, stop] 下标（闭区间）
    padded = np.concatenate([[False], mask, [False]]).astype(int)
    edges = np.diff(padded)
    starts = np.nonzero(edges == 1)[0]
    stops = np.nonzero(edges == -1)[0] - 1
    return list(zip(starts.tolist(), stops.tolist()))


def find_windows(spec: TransmissionSpectrum, threshold: float = DEFAULT_THRESHOLD) -> list[Window]:
    """
    找出 T23 ≥ threshold 且 T14 ≤ 1 − threshold 的连续频段。

    :param spec: 两个方向共用同一网格的透射谱。
    :param threshold: 判据阈值，默认 0.95。
    :return: Window 列表（可能为空），中心取 T23 的峰值位置。
    """
    t23 = spec.t(2, 3)
    t14 = spec.t(1, 4)
    detuning = spec.detuning
    windows = []
    for start, stop in _runs((t23 >= threshold) & (t14 <= 1.0 - threshold)):
        peak = start + int(np.argmax(t23[start:stop + 1]))
        windows.append(Window(center=float(detuning[peak]),
                              width=float(detuning[stop] - detuning[start]),
                              lower=float(detuning[start]),
                              upper=float(detuning[stop]),
                              peak_t23=float(t23[peak])))
    return windows


def fidelity_curve(T: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    对透射表栈 (..., 4, 4) 逐点计算 (保真度, 存活概率, 插入损耗 dB)。
    """
    T = np.asarray(T, dtype=float)
    totals = T.sum(axis=-1)
    if np.any(totals <= 0):
        raise DegenerateRoutingError("circulator.circulator_metrics", "存在总输出为零的端口")
    correct = T[..., _CORRECT[0], _CORRECT[1]]
    fidelity = np.mean(correct / totals, axis=-1)
    survival = np.mean(totals, axis=-1)
    with np.errstate(divide="ignore"):
        insertion_loss = -2.5 * np.sum(np.log10(correct), axis=-1)
    return fidelity, survival, insertion_loss


def circulator_metrics(T: np.ndarray) -> tuple[float, float, float]:
    """
    单一频率处的环行器指标。

    :param T: 4×4 透射表，T[m−1, n−1] 为端口 m → n，对角元为反射。
    :return: (fidelity, survival, insertion_loss_db)
    """
    T = np.asarray(T, dtype=float)
    if T.shape != (4, 4):
        raise ValueError(f"透射表形状必须为 (4, 4)，当前为 {T.shape}")
    fidelity, survival, insertion_loss = fidelity_curve(T)
    return float(fidelity), float(survival), float(insertion_loss)


def _metrics_at(params: PhysicalParams, detuning: float) -> tuple[float, float, float]:
    return circulator_metrics(transmission_table(params, params.omega0 + detuning)[0])


def _refine_edge(params: PhysicalParams, inside: float, outside: float, threshold: float) -> float:
    def excess(delta):
        return _metrics_at(params, delta)[0] - threshold
    try:
        return brentq(excess, min(inside, outside), max(inside, outside), xtol=1e-15, rtol=1e-12)
    except ValueError:
        return inside


def _channel(params: PhysicalParams, lower: float, upper: float, samples: int = 201) -> Channel:
    local = np.linspace(lower, upper, samples)
    fidelity, survival, insertion_loss = fidelity_curve(transmission_table(params, params.omega0 + local))
    best = int(np.argmax(fidelity))
    return Channel(lower=float(lower), upper=float(upper), center=float(local[best]),
                   fidelity=float(fidelity[best]), survival=float(survival[best]),
                   insertion_loss_db=float(insertion_loss[best]),
                   mean_insertion_loss_db=float(np.mean(insertion_loss)))


def find_channels(params: PhysicalParams, spec: TransmissionSpectrum,
                  fidelity_threshold: float = DEFAULT_THRESHOLD) -> list[Channel]:
    """
    保真度高于阈值的连续频段，边界用 brentq 在相邻网格点之间精化。
    """
    fidelity, _, _ = fidelity_curve(spec.T)
    detuning = spec.detuning
    channels = []
    for start, stop in _runs(fidelity > fidelity_threshold):
        lower = detuning[start]
        if start > 0:
            lower = _refine_edge(params, detuning[start], detuning[start - 1], fidelity_threshold)
        upper = detuning[stop]
        if stop < len(detuning) - 1:
            upper = _refine_edge(params, detuning[stop], detuning[stop + 1], fidelity_threshold)
        channels.append(_channel(params, lower, upper))
    return channels


def bandwidth(params: PhysicalParams, fidelity_threshold: float = DEFAULT_THRESHOLD,
              omega_grid=None) -> BandwidthResult:
    """
    工作带宽：最宽的保真度高于阈值的信道宽度，以及该信道上的平均插入损耗。
    total_width 给出所有信道宽度之和。
    """
    if omega_grid is None:
        omega_grid = detuning_grid(params)
    spec = transmission_spectrum(params, omega_grid)
    channels = find_channels(params, spec, fidelity_threshold)
    if not channels:
        logger.info("保真度阈值 %.3f 下没有可用信道", fidelity_threshold)
        return BandwidthResult(width=0.0, mean_insertion_loss_db=float("nan"), total_width=0.0, channels=())
    widest = max(channels, key=lambda c: c.width)
    return BandwidthResult(width=widest.width, mean_insertion_loss_db=widest.mean_insertion_loss_db,
                           total_width=float(sum(c.width for c in channels)), channels=tuple(channels))


def circulator_report(params: PhysicalParams, omega_grid=None,
                      threshold: float = DEFAULT_THRESHOLD,
                      spectrum: TransmissionSpectrum | None = None) -> CirculatorReport:
    """
    完整的环行器报告。工作点取所有信道中保真度最高的位置；没有信道时取网格上保真度最高处。

    :param spectrum: 已在 omega_grid 上算好的透射谱，给出时直接复用。
    """
    if spectrum is not None:
        spec = spectrum
    else:
        if omega_grid is None:
            omega_grid = detuning_grid(params)
        spec = transmission_spectrum(params, omega_grid)
    windows = find_windows(spec, threshold)
    channels = find_channels(params, spec, threshold)
    if channels:
        best = max(channels, key=lambda c: (c.fidelity, -abs(c.center)))
        operating_point = best.center
        fidelity, survival, insertion_loss = best.fidelity, best.survival, best.insertion_loss_db
        widest = max(channels, key=lambda c: c.width)
        width, mean_loss = widest.width, widest.mean_insertion_loss_db
    else:
        curve, surv, loss = fidelity_curve(spec.T)
        i = int(np.argmax(curve))
        operating_point = float(spec.detuning[i])
        fidelity, survival, insertion_loss = float(curve[i]), float(surv[i]), float(loss[i])
        width, mean_loss = 0.0, float("nan")
    logger.info("找到 %d 个非互易窗口、%d 个信道", len(windows), len(channels))
    return CirculatorReport(
        windows=tuple(windows),
        fidelity=fidelity,
        survival=survival,
        insertion_loss_db=insertion_loss,
        bandwidth=width,
        mean_insertion_loss_db=mean_loss,
        total_bandwidth=float(sum(c.width for c in channels)),
        operating_point=operating_point,
        channels=tuple(channels),
    )


def tunneling_report(params: PhysicalParams) -> TunnelingReport:
    """小 N 链在 ω=Ω 处通过左右边缘态隧穿实现环行的工作点。"""
    table = transmission_table(params, params.omega0)[0]
    fidelity, survival, insertion_loss = circulator_metrics(table)
    return TunnelingReport(t23=float(table[1, 2]), t14=float(table[0, 3]),
                           fidelity=fidelity, survival=survival, insertion_loss_db=insertion_loss)


def count_windows(params: PhysicalParams, threshold: float = DEFAULT_THRESHOLD, points: int = 20001) -> int:
    """非互易窗口数，用于考察信道数随 N 的变化。"""
    return len(find_windows(transmission_spectrum(params, detuning_grid(params, points)), threshold))
