# chirow/transport/scattering.py
"""
转移矩阵输运计算。

场振幅 (a, b) 分别表示沿链前进与后退的行波分量。单一超模用 2×2 矩阵，
含背向散射体时两个超模通过 4×4 矩阵耦合。所有矩阵构造函数都接受标量或
数组形式的相位，数组输入时返回形状为 (..., n, n) 的矩阵栈。
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from ..errors import IllConditionedError, InvalidCouplingError, InvalidQEError, PoleError
from ..model.lattice import Supermode, as_supermode
from ..model.params import PhysicalParams, derive_tight_binding, derived_losses

logger = logging.getLogger(__name__)

NORM_LIMIT = 1e150
POLE_FLOOR = 1e-300
PROPAGATING_TOLERANCE = 1e-9

# 端口编号 → 输入振幅在 (a0, c0, a_{N+1}, c_{N+1}) 中的位置
INPUT_SLOT = {1: 0, 2: 1, 3: 2, 4: 3}
# 端口编号 → 输出振幅在 (b0, d0, b_{N+1}, d_{N+1}) 中的位置
OUTPUT_SLOT = {2: 0, 1: 1, 4: 2, 3: 3}
# 镜像对称：端口 1↔3、2↔4
MIRROR = {1: 3, 2: 4, 3: 1, 4: 2}


class BlockKind(str, Enum):
    PROP_A = "PropA"
    PROP_B = "PropB"
    COUP1 = "Coup1"
    COUP2 = "Coup2"
    IN = "In"
    OUT = "Out"
    SCATTERER = "Scatterer"


@dataclass(frozen=True)
class TransferBlock:
    matrix: np.ndarray
    kind: BlockKind

    @property
    def det(self):
        return np.linalg.det(self.matrix)


@dataclass(frozen=True)
class QePhase:
    """QE 的透射系数 t_qe = e^{iφ}，φ = φ1 + iφ2。"""
    t_qe: complex
    phi: complex

    @property
    def phi1(self):
        return np.real(self.phi)

    @property
    def phi2(self):
        return np.imag(self.phi)


class PortPair(NamedTuple):
    through: np.ndarray
    drop: np.ndarray


class DispersionRoots(NamedTuple):
    rhs: complex
    two_k: tuple[complex, complex]
    propagating: bool


def qe_transmission(omega, omega_q: float, gamma: float, Gamma: float) -> QePhase:
    """
    QE 对手性耦合模式的透射系数：

        t_qe = (ω − ω_q + i(γ − Γ)) / (ω − ω_q + i(γ + Γ))

    φ 取主值分支；临界耦合 (t_qe=0) 时 φ2 = +∞。
    """
    if gamma < 0 or Gamma < 0 or gamma + Gamma <= 0:
        raise InvalidQEError(f"要求 γ, Γ ≥ 0 且 γ + Γ > 0，当前 γ={gamma}, Γ={Gamma}")
    delta = np.asarray(omega, dtype=float) - omega_q
    t = (delta + 1j * (gamma - Gamma)) / (delta + 1j * (gamma + Gamma))
    phi = np.zeros(np.shape(t), dtype=complex)
    phi.real = np.angle(t)
    with np.errstate(divide="ignore"):
        phi.imag = -np.log(np.abs(t))
    if np.ndim(t) == 0:
        return QePhase(t_qe=complex(t), phi=complex(phi))
    return QePhase(t_qe=t, phi=phi)


def half_ring_phase(omega, params: PhysicalParams):
    """
    半环传播相位 θ = (ω − Ω)/(2𝓕)，约化到 (−π/2, π/2]，θ(Ω) = 0。
    """
    raw = (np.asarray(omega, dtype=float) - params.omega0) / (2.0 * params.fsr)
    return np.pi / 2 - np.mod(np.pi / 2 - raw, np.pi)


def _diag2(d0, d1) -> np.ndarray:
    d0, d1 = np.broadcast_arrays(np.asarray(d0, dtype=complex), np.asarray(d1, dtype=complex))
    out = np.zeros(d0.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = d0
    out[..., 1, 1] = d1
    return out


def _block_diag(upper: np.ndarray, lower: np.ndarray) -> np.ndarray:
    shape = np.broadcast_shapes(upper.shape[:-2], lower.shape[:-2])
    out = np.zeros(shape + (4, 4), dtype=complex)
    out[..., :2, :2] = upper
    out[..., 2:, 2:] = lower
    return out


def _require_nonzero(kappa: complex):
    if abs(kappa) == 0:
        raise InvalidCouplingError("耦合系数为零时转移矩阵无定义")


def propagation_a(theta, alpha: float = 1.0, t_qe=1.0) -> TransferBlock:
    """A 环传播矩阵 diag(α e^{−iθ}, α e^{iθ}·t_qe)；t_qe 只作用在正向超模。"""
    theta = np.asarray(theta)
    return TransferBlock(_diag2(alpha * np.exp(-1j * theta), alpha * np.exp(1j * theta) * t_qe),
                         BlockKind.PROP_A)


def propagation_b(theta, alpha: float = 1.0) -> TransferBlock:
    """B 环传播矩阵 diag(α e^{−iθ}, α e^{iθ})。"""
    theta = np.asarray(theta)
    return TransferBlock(_diag2(alpha * np.exp(-1j * theta), alpha * np.exp(1j * theta)),
                         BlockKind.PROP_B)


def coupling_matrix(t: float, kappa: complex, kind: BlockKind = BlockKind.COUP1) -> TransferBlock:
    """谐振腔间耦合矩阵 (1/κ)[[1, −t], [t*, −1]]，纯虚 κ 时行列式为 1。"""
    _require_nonzero(kappa)
    return TransferBlock(np.array([[1.0, -t], [np.conj(t), -1.0]], dtype=complex) / kappa, kind)


def input_matrix(t_in: float, kappa_in: complex) -> TransferBlock:
    """输入波导与首个谐振腔的耦合矩阵 (1/κ_in)[[−t, 1], [−1, t*]]。"""
    _require_nonzero(kappa_in)
    return TransferBlock(np.array([[-t_in, 1.0], [-1.0, np.conj(t_in)]], dtype=complex) / kappa_in,
                         BlockKind.IN)


def output_matrix(t_out: float, kappa_out: complex) -> TransferBlock:
    """末个谐振腔与输出波导的耦合矩阵 (1/κ_out)[[1, −t], [t*, −1]]。"""
    _require_nonzero(kappa_out)
    return TransferBlock(np.array([[1.0, -t_out], [np.conj(t_out), -1.0]], dtype=complex) / kappa_out,
                         BlockKind.OUT)


def scatterer_matrix(epsilon: float) -> TransferBlock:
    """
    B 环中点处散射体的 4×4 转移矩阵，耦合 a 与 d 分量。

    t_s = cos ε，r_s = i sin ε；1/t_s 只作用在 (a, d) 子块，保持
    |a|² − |b|² + |c|² − |d|² 不变。
    """
    t_s = np.cos(epsilon)
    r_s = 1j * np.sin(epsilon)
    if abs(t_s) < POLE_FLOOR:
        raise PoleError("scattering.scatterer_matrix", message=f"ε={epsilon} 时 t_s=0")
    matrix = np.eye(4, dtype=complex)
    matrix[0, 0] = matrix[3, 3] = 1.0 / t_s
    matrix[0, 3] = -r_s / t_s
    matrix[3, 0] = r_s / t_s
    return TransferBlock(matrix, BlockKind.SCATTERER)


def _qe_factor(params: PhysicalParams, omega, supermode: Supermode):
    if supermode is Supermode.BACKWARD or params.Gamma == 0:
        return 1.0
    return qe_transmission(omega, params.omega_q, params.gamma_qe, params.Gamma).t_qe


def _guard(product: np.ndarray, operation: str):
    magnitude = np.max(np.abs(product))
    if not np.isfinite(magnitude) or magnitude > NORM_LIMIT:
        raise IllConditionedError(operation, f"转移矩阵连乘范数 {magnitude:.3e} 超过 {NORM_LIMIT:.0e}")


def chain_transfer(params: PhysicalParams, omega, supermode) -> np.ndarray:
    """
    有限链的总转移矩阵

        M = M_out·M_pB·M_c1·M_pA·(M_c2·M_pB·M_c1·M_pA)^{N−1}·M_in

    正向超模的 M_pA 含 t_qe，反向超模取 t_qe = 1。数组形式的 omega 返回
    (n, 2, 2) 矩阵栈。
    """
    supermode = as_supermode(supermode)
    theta = half_ring_phase(omega, params)
    alpha = derived_losses(params).alpha
    p_a = propagation_a(theta, alpha, _qe_factor(params, omega, supermode)).matrix
    p_b = propagation_b(theta, alpha).matrix
    c1 = coupling_matrix(params.t1, params.kappa1, BlockKind.COUP1).matrix
    c2 = coupling_matrix(params.t2, params.kappa2, BlockKind.COUP2).matrix
    m_in = input_matrix(params.t_in, params.kappa_in).matrix
    m_out = output_matrix(params.t_out, params.kappa_out).matrix

    front = c1 @ p_a
    cell = c2 @ p_b @ front
    total = np.broadcast_to(m_in, np.shape(theta) + (2, 2))
    for _ in range(params.n_cells - 1):
        total = cell @ total
        _guard(total, "scattering.chain_transfer")
    total = m_out @ p_b @ front @ total
    _guard(total, "scattering.chain_transfer")
    return total


def port_transmissions(M: np.ndarray, direction="forward") -> PortPair:
    """
    由总转移矩阵求直通与下载端口透射：T_through = |M11/M12|²，
    T_drop = |M21 − M11·M22/M12|² = |det M|²/|M12|²。

    正向输入端口 1 得到 (T12, T14)；反向输入端口 2 得到 (T21, T23)。
    """
    as_supermode(direction)
    m12 = M[..., 0, 1]
    if np.any(np.abs(m12) < POLE_FLOOR):
        raise PoleError("scattering.port_transmissions", message="|M12| 低于 1e-300")
    det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    through = np.abs(M[..., 0, 0] / m12) ** 2
    drop = np.abs(det) ** 2 / np.abs(m12) ** 2
    return PortPair(through=through, drop=drop)


def dispersion_backward(theta, t1: float, t2: float, kappa1: complex, kappa2: complex):
    """
    反向超模的色散关系右端：cos(2KΛ) = [cos(2θ) − t1·t2]/(κ1κ2)。
    """
    return (np.cos(2 * np.asarray(theta)) - t1 * t2) / (kappa1 * kappa2)


def dispersion_forward(theta, phi, t1: float, t2: float, kappa1: complex, kappa2: complex) -> DispersionRoots:
    """
    正向超模的色散关系：

        cos(2KΛ − φ/2) = [cos(2θ + φ/2) − t1·t2·cos(φ/2)]/(κ1κ2)

    返回右端值、两个主值分支 2KΛ = φ/2 ± arccos(右端) 以及是否为传播模。
    """
    theta = complex(theta)
    half = complex(phi) / 2
    rhs = (np.cos(2 * theta + half) - t1 * t2 * np.cos(half)) / (kappa1 * kappa2)
    base = np.arccos(complex(rhs))
    propagating = abs(rhs.imag) <= PROPAGATING_TOLERANCE and abs(rhs.real) <= 1.0 + PROPAGATING_TOLERANCE
    return DispersionRoots(rhs=complex(rhs), two_k=(half + base, half - base), propagating=bool(propagating))


def _forward_rhs(params: PhysicalParams, energy: float) -> float:
    theta = energy / (2.0 * params.fsr)
    if params.Gamma > 0:
        phi = qe_transmission(params.omega0 + energy, params.omega_q, params.gamma_qe, params.Gamma).phi
    else:
        phi = 0.0
    return dispersion_forward(theta, phi, params.t1, params.t2, params.kappa1, params.kappa2).rhs.real


def bands_from_transfer(params: PhysicalParams, supermode, k_grid,
                        e_max: float | None = None, scan_points: int = 4001) -> pd.DataFrame:
    """
    由 Bloch 条件求能带，返回长表 (k, energy)，energy = ω − Ω。

    反向超模用闭式 E = ±𝓕·arccos(t1t2 + κ1κ2·cos k)；正向超模在 E>0 与 E<0 两侧
    分别扫描 R(E) − cos k 的变号并用 brentq 精化。这里的 k 对应 2KΛ − φ/2。
    """
    supermode = as_supermode(supermode)
    k_grid = np.atleast_1d(np.asarray(k_grid, dtype=float))
    coupling = (params.kappa1 * params.kappa2).real
    rows = []
    if supermode is Supermode.BACKWARD:
        for k in k_grid:
            argument = params.t1 * params.t2 + coupling * np.cos(k)
            energy = params.fsr * np.arccos(np.clip(argument, -1.0, 1.0))
            rows.extend([(k, -energy), (k, energy)])
        return pd.DataFrame(rows, columns=["k", "energy"])

    if e_max is None:
        tb = derive_tight_binding(params)
        e_max = 1.5 * float(np.hypot(tb.g, tb.J1 + tb.J2))
    magnitudes = np.geomspace(e_max * 1e-9, e_max, scan_points)
    for side in (-1.0, 1.0):
        energies = side * magnitudes
        rhs = np.array([_forward_rhs(params, e) for e in energies])
        for k in k_grid:
            residual = rhs - np.cos(k)
            crossings = np.nonzero(np.sign(residual[:-1]) * np.sign(residual[1:]) < 0)[0]
            for i in crossings:
                root = brentq(lambda e: _forward_rhs(params, e) - np.cos(k), energies[i], energies[i + 1],
                              xtol=1e-16, rtol=1e-13)
                rows.append((k, root))
    frame = pd.DataFrame(rows, columns=["k", "energy"])
    return frame.sort_values(["k", "energy"], ignore_index=True)


@dataclass(frozen=True)
class TransmissionSpectrum:
    """
    频率网格上的四端口透射表。T[i, m−1, n−1] 为 ω_i 处端口 m → 端口 n 的透射。
    """
    omega_grid: np.ndarray
    T: np.ndarray
    omega0: float = 1.0
    scatterer_active: bool = False

    @property
    def detuning(self) -> np.ndarray:
        return self.omega_grid - self.omega0

    def t(self, m: int, n: int) -> np.ndarray:
        return self.T[:, m - 1, n - 1]

    def to_frame(self) -> pd.DataFrame:
        """列 detuning_norm=(ω−Ω)/Ω, T12, T14, T21, T23，散射体存在时追加 R2, T24。"""
        frame = pd.DataFrame({
            "detuning_norm": self.detuning / self.omega0,
            "T12": self.t(1, 2),
            "T14": self.t(1, 4),
            "T21": self.t(2, 1),
            "T23": self.t(2, 3),
        })
        if self.scatterer_active:
            frame["R2"] = self.t(2, 2)
            frame["T24"] = self.t(2, 4)
        return frame


def _fill_by_symmetry(table: np.ndarray) -> np.ndarray:
    # 端口 1、2 的行已知，端口 3、4 按镜像对称补齐
    for m in (3, 4):
        source = MIRROR[m]
        for n in range(1, 5):
            table[:, m - 1, n - 1] = table[:, source - 1, MIRROR[n] - 1]
    return table


def scatterer_chain_transfer(params: PhysicalParams, omega) -> np.ndarray:
    """
    含散射体的 4×4 总转移矩阵，状态向量为 (a, b, c, d)：(a, b) 属于正向超模，
    (c, d) 属于反向超模。散射体位于第 params.scatterer_position 个元胞的 B 环中点。
    """
    theta = half_ring_phase(omega, params)
    alpha = derived_losses(params).alpha
    p_a_forward = propagation_a(theta, alpha, _qe_factor(params, omega, Supermode.FORWARD)).matrix
    p_b = propagation_b(theta, alpha).matrix
    p_b_half = propagation_b(np.asarray(theta) / 2, np.sqrt(alpha)).matrix
    c1 = coupling_matrix(params.t1, params.kappa1, BlockKind.COUP1).matrix
    c2 = coupling_matrix(params.t2, params.kappa2, BlockKind.COUP2).matrix
    m_in = input_matrix(params.t_in, params.kappa_in).matrix
    m_out = output_matrix(params.t_out, params.kappa_out).matrix

    q1 = _block_diag(p_a_forward, p_b)
    p1 = _block_diag(c1, c1)
    q2 = _block_diag(p_b, p_b)
    q2_half = _block_diag(p_b_half, p_b_half)
    p2 = _block_diag(c2, c2)
    p_out = _block_diag(m_out, m_out)
    q_s = scatterer_matrix(params.epsilon).matrix

    total = np.broadcast_to(_block_diag(m_in, m_in), np.shape(theta) + (4, 4))
    for j in range(1, params.n_cells + 1):
        closing = p_out if j == params.n_cells else p2
        if j == params.scatterer_position:
            cell = closing @ q2_half @ q_s @ q2_half @ p1 @ q1
        else:
            cell = closing @ q2 @ p1 @ q1
        total = cell @ total
        _guard(total, "scattering.scatterer_chain_transfer")
    return total


def solve_scatterer_ports(M4: np.ndarray) -> np.ndarray:
    """
    从 4×4 总转移矩阵求出四端口透射表 (..., 4, 4)。

    输入振幅 u = (a0, c0, a_{N+1}, c_{N+1})，输出振幅 v = (b0, d0, b_{N+1}, d_{N+1})；
    x_{N+1} = M4·x_0 化为 A·v = B·u 求解。端口 1、2 来自直接求解，端口 3、4 按镜像对称补齐。
    """
    e_in0 = np.zeros((4, 4))
    e_out0 = np.zeros((4, 4))
    e_in_end = np.zeros((4, 4))
    e_out_end = np.zeros((4, 4))
    e_in0[0, 0] = e_in0[2, 1] = 1.0
    e_out0[1, 0] = e_out0[3, 1] = 1.0
    e_in_end[0, 2] = e_in_end[2, 3] = 1.0
    e_out_end[1, 2] = e_out_end[3, 3] = 1.0

    lhs = M4 @ e_out0 - e_out_end
    rhs = e_in_end - M4 @ e_in0
    try:
        s = np.linalg.solve(lhs, np.broadcast_to(rhs, lhs.shape))
    except np.linalg.LinAlgError as exc:
        raise PoleError("scattering.solve_scatterer_ports", message=f"端口方程奇异: {exc}") from exc

    single = s.ndim == 2
    stack = s[None] if single else s
    table = np.zeros(stack.shape[:-2] + (4, 4))
    for m in (1, 2):
        for n in range(1, 5):
            table[:, m - 1, n - 1] = np.abs(stack[:, OUTPUT_SLOT[n], INPUT_SLOT[m]]) ** 2
    table = _fill_by_symmetry(table)
    return table[0] if single else table


def scatterer_transmissions(params: PhysicalParams, omega) -> np.ndarray:
    """含散射体链的四端口透射表。"""
    return solve_scatterer_ports(scatterer_chain_transfer(params, omega))


def transmission_table(params: PhysicalParams, omega) -> np.ndarray:
    """
    频率 omega（标量或数组）处的 4×4 透射表。ε>0 时走 4×4 散射体路径，
    否则用两个 2×2 超模的乘积并按对称关系补齐。
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if params.epsilon > 0:
        return scatterer_transmissions(params, omega)
    forward = port_transmissions(chain_transfer(params, omega, Supermode.FORWARD), Supermode.FORWARD)
    backward = port_transmissions(chain_transfer(params, omega, Supermode.BACKWARD), Supermode.BACKWARD)
    table = np.zeros((omega.size, 4, 4))
    table[:, 0, 1] = forward.through
    table[:, 0, 3] = forward.drop
    table[:, 1, 0] = backward.through
    table[:, 1, 2] = backward.drop
    return _fill_by_symmetry(table)


def transmission_spectrum(params: PhysicalParams, omega_grid) -> TransmissionSpectrum:
    """在频率网格上计算完整的四端口透射谱。"""
    omega_grid = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    table = transmission_table(params, omega_grid)
    if np.any(table > 1.0 + 1e-9):
        logger.warning("警告: 透射率超过 1（最大 %.6g），请检查损耗参数", float(table.max()))
    return TransmissionSpectrum(omega_grid=omega_grid, T=table, omega0=params.omega0,
                                scatterer_active=params.epsilon > 0)


def detuning_grid(params: PhysicalParams, points: int = 8001, span_factor: float = 1.25) -> np.ndarray:
    """
    覆盖两个超模通带的绝对频率网格：Ω ± span_factor·√(g² + (J1+J2)²)。
    """
    tb = derive_tight_binding(params)
    span = span_factor * float(np.hypot(tb.g, tb.J1 + tb.J2))
    return params.omega0 + np.linspace(-span, span, points)
