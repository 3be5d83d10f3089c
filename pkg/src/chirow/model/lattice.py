# chirow/model/lattice.py
"""
三聚体 (A, QE, B) 与二聚体 (A, B) 链的 Bloch 哈密顿量、有限开链哈密顿量，
以及对角化、边缘态分类。

能量均相对 Ω 计算（旋转坐标系）。正向超模 CW_A−CCW_B 含 QE，反向超模
CCW_A−CW_B 退化为 SSH 二聚体链。
"""
import logging
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
import pandas as pd
import scipy.linalg

from ..errors import EigensolverError
from .params import TightBindingParams

logger = logging.getLogger(__name__)

RESIDUAL_TOLERANCE = 1e-9
DEGENERACY_TOLERANCE = 1e-9
EDGE_MASS_THRESHOLD = 0.9
FLAT_EMITTER_WEIGHT = 0.1


class Supermode(str, Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


class EdgeFlag(str, Enum):
    LEFT = "left-edge"
    RIGHT = "right-edge"
    HYBRID = "edge-hybridized"
    FLAT = "flat"
    BULK = "bulk"


def as_supermode(value) -> Supermode:
    """把字符串或枚举转换为 Supermode。"""
    try:
        return Supermode(value)
    except ValueError:
        allowed = ", ".join(m.value for m in Supermode)
        raise ValueError(f"supermode 必须为 {allowed} 之一，当前为 {value!r}") from None


@dataclass(frozen=True)
class BlochHamiltonian:
    k: float
    matrix: np.ndarray
    supermode: Supermode

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True)
class FiniteChain:
    """
    有限开链。位点按元胞排列：正向为 (A_j, QE_j, B_j)，反向为 (A_j, B_j)。
    """
    supermode: Supermode
    site_labels: tuple[str, ...]
    matrix: np.ndarray
    params: TightBindingParams

    @property
    def n_cells(self) -> int:
        return self.params.n_cells

    @property
    def sites_per_cell(self) -> int:
        return 3 if self.supermode is Supermode.FORWARD else 2

    @property
    def detunings(self) -> np.ndarray:
        return np.real(np.diag(self.matrix))

    @property
    def emitter_mask(self) -> np.ndarray:
        mask = np.zeros(self.matrix.shape[0])
        if self.supermode is Supermode.FORWARD:
            mask[1::3] = 1.0
        return mask

    @property
    def cell_index(self) -> np.ndarray:
        """每个位点所属的元胞编号 (1..N)。"""
        return np.repeat(np.arange(1, self.n_cells + 1), self.sites_per_cell)

    def left_half_weights(self) -> np.ndarray:
        """
        每个位点对"左半链"的权重。奇数 N 时中间元胞各算一半。
        """
        cells = self.cell_index
        middle = (self.n_cells + 1) / 2.0
        return np.where(cells < middle, 1.0, np.where(cells == middle, 0.5, 0.0))


@dataclass(frozen=True)
class SpectrumResult:
    """
    有限链的本征谱。

    site_probabilities 的形状为 (态数, N, 2)，最后一维是 [A 子格, B 子格]；
    正向超模的 A 子格概率包含 QE 的贡献。
    """
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    site_probabilities: np.ndarray
    emitter_weights: np.ndarray
    left_mass: np.ndarray
    chain: FiniteChain
    edge_flags: tuple[EdgeFlag, ...] = ()

    @property
    def supermode(self) -> Supermode:
        return self.chain.supermode

    def count(self, *flags: EdgeFlag) -> int:
        return sum(1 for flag in self.edge_flags if flag in flags)

    def indices(self, *flags: EdgeFlag) -> list[int]:
        return [i for i, flag in enumerate(self.edge_flags) if flag in flags]

    def to_frame(self) -> pd.DataFrame:
        """每个本征态一行：能量、分类、QE 权重和左半链概率。"""
        return pd.DataFrame({
            "index": np.arange(len(self.eigenvalues)),
            "energy": self.eigenvalues,
            "flag": [flag.value for flag in self.edge_flags],
            "emitter_weight": self.emitter_weights,
            "left_mass": self.left_mass,
        })

    def probability_frame(self) -> pd.DataFrame:
        """长表格式的概率分布：index, cell, sublattice, probability。"""
        n_states, n_cells, _ = self.site_probabilities.shape
        state, cell, sub = np.meshgrid(np.arange(n_states), np.arange(1, n_cells + 1),
                                       np.array(["A", "B"]), indexing="ij")
        return pd.DataFrame({
            "index": state.ravel(),
            "cell": cell.ravel(),
            "sublattice": sub.ravel(),
            "probability": self.site_probabilities.ravel(),
        })

    def print_summary(self, limit: int = 12):
        gap = bulk_gap(self.chain.params, self.supermode)
        print("=" * 72)
        print(f"有限链本征谱 ({self.supermode.value}, N={self.chain.n_cells}, "
              f"维数 {len(self.eigenvalues)})")
        print(f"体能隙: ({gap[0]:.6e}, {gap[1]:.6e})")
        print("-" * 72)
        print(f"{'序号':<6}{'能量':>18}{'QE 权重':>12}{'左半链':>10}  {'分类':<16}")
        shown = [i for i, flag in enumerate(self.edge_flags) if flag is not EdgeFlag.BULK]
        if not shown:
            shown = list(range(min(limit, len(self.eigenvalues))))
        for i in shown[:limit]:
            print(f"{i:<6}{self.eigenvalues[i]:>18.9e}{self.emitter_weights[i]:>12.4f}"
                  f"{self.left_mass[i]:>10.4f}  {self.edge_flags[i].value:<16}")
        print("=" * 72)


def _bloch_factor(tb: TightBindingParams, k):
    return tb.J1 + tb.J2 * np.exp(-1j * np.asarray(k))


def bloch_hamiltonian(tb: TightBindingParams, k: float, supermode) -> BlochHamiltonian:
    """
    动量空间哈密顿量。

    正向：行列顺序 (A, QE, B)，H12 = g，H13 = J1 + J2·e^{−ik}；
    反向：2×2，H12 = J1 + J2·e^{−ik}。
    """
    supermode = as_supermode(supermode)
    if not -np.pi <= k <= np.pi:
        raise ValueError(f"k 必须位于 [−π, π]，当前为 {k}")
    f = complex(_bloch_factor(tb, k))
    if supermode is Supermode.FORWARD:
        matrix = np.array([
            [0.0, tb.g, f],
            [tb.g, tb.detuning, 0.0],
            [np.conj(f), 0.0, 0.0],
        ], dtype=complex)
    else:
        matrix = np.array([[0.0, f], [np.conj(f), 0.0]], dtype=complex)
    return BlochHamiltonian(k=float(k), matrix=matrix, supermode=supermode)


def band_structure(tb: TightBindingParams, supermode, k_grid) -> pd.DataFrame:
    """
    在 k 网格上求能带，返回列 k, E_1, E_2[, E_3]（升序）。
    """
    supermode = as_supermode(supermode)
    k_grid = np.atleast_1d(np.asarray(k_grid, dtype=float))
    if k_grid.size == 0:
        raise ValueError("k_grid 不能为空")
    if np.any(np.abs(k_grid) > np.pi):
        raise ValueError("k_grid 必须位于 [−π, π]")
    matrices = np.stack([bloch_hamiltonian(tb, k, supermode).matrix for k in k_grid])
    bands = np.linalg.eigvalsh(matrices)
    frame = pd.DataFrame(bands, columns=[f"E_{i + 1}" for i in range(bands.shape[1])])
    frame.insert(0, "k", k_grid)
    return frame


def bulk_gap(tb: TightBindingParams, supermode) -> tuple[float, float]:
    """
    零失谐时的体能隙 (下沿, 上沿)。正向超模的平带位于能隙内 E=0 处。
    """
    supermode = as_supermode(supermode)
    dimer = abs(tb.J2 - tb.J1)
    edge = dimer if supermode is Supermode.BACKWARD else float(np.hypot(tb.g, dimer))
    return -edge, edge


def finite_hamiltonian(tb: TightBindingParams, supermode) -> FiniteChain:
    """
    构造开边界有限链哈密顿量。

    非零耦合只有：(A_j, QE_j) 上的 g，(A_j, B_j) 上的 J1，(B_j, A_{j+1}) 上的 J2。
    """
    supermode = as_supermode(supermode)
    n = tb.n_cells
    if supermode is Supermode.FORWARD:
        per_cell = ("A", "QE", "B")
    else:
        per_cell = ("A", "B")
    size = len(per_cell) * n
    matrix = np.zeros((size, size), dtype=complex)
    labels = tuple(f"{name}_{j}" for j in range(1, n + 1) for name in per_cell)

    def site(name: str, j: int) -> int:
        return (j - 1) * len(per_cell) + per_cell.index(name)

    def bond(i: int, k: int, value: float):
        matrix[i, k] = value
        matrix[k, i] = np.conj(value)

    for j in range(1, n + 1):
        bond(site("A", j), site("B", j), tb.J1)
        if supermode is Supermode.FORWARD:
            bond(site("A", j), site("QE", j), tb.g)
            matrix[site("QE", j), site("QE", j)] = tb.detuning
        if j < n:
            bond(site("B", j), site("A", j + 1), tb.J2)
    return FiniteChain(supermode=supermode, site_labels=labels, matrix=matrix, params=tb)


def _rotate_degenerate_clusters(values: np.ndarray, vectors: np.ndarray,
                                weights: np.ndarray, tol: float) -> np.ndarray:
    # 在严格简并的子空间内对角化位点权重算符
    vectors = vectors.copy()
    start = 0
    while start < len(values):
        stop = start + 1
        while stop < len(values) and values[stop] - values[stop - 1] <= tol:
            stop += 1
        if stop - start > 1:
            block = vectors[:, start:stop]
            projected = block.conj().T @ (weights[:, None] * block)
            _, rotation = np.linalg.eigh(projected)
            vectors[:, start:stop] = block @ rotation
        start = stop
    return vectors


def diagonalize(chain: FiniteChain, gap_bounds: tuple[float, float] | None = None) -> SpectrumResult:
    """
    用稠密厄米本征求解器 (scipy.linalg.eigh) 对角化有限链，并分类边缘态。

    :param chain: finite_hamiltonian 的结果。
    :param gap_bounds: 体能隙；缺省时由 bulk_gap 给出。
    :return: SpectrumResult
    """
    matrix = chain.matrix
    try:
        values, vectors = scipy.linalg.eigh(matrix)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverError("lattice.diagonalize", f"本征求解失败: {exc}") from exc

    norm = float(np.max(np.abs(values))) if values.size else 0.0
    scale = norm if norm > 0 else 1.0
    if chain.supermode is Supermode.FORWARD:
        rotation_weights = chain.emitter_mask
    else:
        rotation_weights = chain.left_half_weights()
    vectors = _rotate_degenerate_clusters(values, vectors, rotation_weights,
                                          DEGENERACY_TOLERANCE * scale)

    residual = np.linalg.norm(matrix @ vectors - vectors * values[None, :], axis=0)
    worst = float(residual.max()) if residual.size else 0.0
    if worst > RESIDUAL_TOLERANCE * scale:
        raise EigensolverError("lattice.diagonalize",
                               f"本征向量残差 {worst:.3e} 超过 {RESIDUAL_TOLERANCE}·‖H‖")

    density = np.abs(vectors.T) ** 2
    n, per_cell = chain.n_cells, chain.sites_per_cell
    per_site = density.reshape(len(values), n, per_cell)
    if per_cell == 3:
        probabilities = np.stack([per_site[:, :, 0] + per_site[:, :, 1], per_site[:, :, 2]], axis=-1)
    else:
        probabilities = per_site.copy()

    result = SpectrumResult(
        eigenvalues=values,
        eigenvectors=vectors,
        site_probabilities=probabilities,
        emitter_weights=density @ chain.emitter_mask,
        left_mass=density @ chain.left_half_weights(),
        chain=chain,
    )
    if gap_bounds is None:
        gap_bounds = bulk_gap(chain.params, chain.supermode)
    return replace(result, edge_flags=classify_edge_states(result, gap_bounds))


def classify_edge_states(spec: SpectrumResult, gap_bounds: tuple[float, float]) -> tuple[EdgeFlag, ...]:
    """
    边缘态分类。

    能量严格位于体能隙内、且左（右）半链概率不少于 90% 的态记为 left-edge
    （right-edge）。正向超模中 E=0 处 QE 权重不少于 0.1 的态属于平带。
    剩余的隙内态若在左半链投影下可组合出局域于两端的态，记为 edge-hybridized。
    """
    values = spec.eigenvalues
    lower, upper = gap_bounds
    scale = float(np.max(np.abs(values))) if values.size else 1.0
    zero_tol = DEGENERACY_TOLERANCE * (scale or 1.0)
    flags = []
    undecided = []
    for i, energy in enumerate(values):
        if not lower < energy < upper:
            flags.append(EdgeFlag.BULK)
        elif (spec.supermode is Supermode.FORWARD and abs(energy) <= zero_tol
              and spec.emitter_weights[i] >= FLAT_EMITTER_WEIGHT):
            flags.append(EdgeFlag.FLAT)
        elif spec.left_mass[i] >= EDGE_MASS_THRESHOLD:
            flags.append(EdgeFlag.LEFT)
        elif 1.0 - spec.left_mass[i] >= EDGE_MASS_THRESHOLD:
            flags.append(EdgeFlag.RIGHT)
        else:
            flags.append(EdgeFlag.BULK)
            undecided.append(i)

    if len(undecided) >= 2:
        block = spec.eigenvectors[:, undecided]
        weights = spec.chain.left_half_weights()
        projected = block.conj().T @ (weights[:, None] * block)
        masses = np.linalg.eigvalsh(projected)
        if masses[-1] >= EDGE_MASS_THRESHOLD and masses[0] <= 1.0 - EDGE_MASS_THRESHOLD:
            for i in undecided:
                flags[i] = EdgeFlag.HYBRID
    return tuple(flags)


def hybrid_edge_combinations(spec: SpectrumResult) -> np.ndarray:
    """
    把 edge-hybridized 态旋转为左、右局域的组合，列按左半链概率降序排列。
    """
    indices = spec.indices(EdgeFlag.HYBRID)
    if not indices:
        return np.zeros((spec.eigenvectors.shape[0], 0), dtype=complex)
    block = spec.eigenvectors[:, indices]
    weights = spec.chain.left_half_weights()
    projected = block.conj().T @ (weights[:, None] * block)
    _, rotation = np.linalg.eigh(projected)
    return (block @ rotation)[:, ::-1]
