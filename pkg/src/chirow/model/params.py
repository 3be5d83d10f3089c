# chirow/model/params.py
"""
物理参数与紧束缚参数。

所有频率与速率都以角频率存储。归一化模式下取 Ω=1，此时 unit_scale 记录
Ω 对应的物理角频率 (rad/s)，仅在由几何参数推算 FSR 时用到。
"""
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import constants

from ..errors import InvalidCouplingError, InvalidParameterError

logger = logging.getLogger(__name__)

# 同时给出 fsr 与 (n_eff, radius) 时允许的相对偏差
FSR_CONSISTENCY_TOLERANCE = 0.01
_REAL_PART_TOLERANCE = 1e-12


def check_coupling(name: str, kappa) -> complex:
    """
    校验一个耦合系数并返回 complex 值。

    :param name: 字段名，用于错误信息。
    :param kappa: 纯虚、虚部非负、模小于 1 的耦合系数。
    :return: complex(kappa)
    """
    kappa = complex(kappa)
    if abs(kappa.real) > _REAL_PART_TOLERANCE:
        raise InvalidCouplingError(f"{name} 必须为纯虚数，当前为 {kappa}")
    if kappa.imag < 0:
        raise InvalidCouplingError(f"{name} 的虚部必须非负（耦合符号约定），当前为 {kappa}")
    if abs(kappa) >= 1:
        raise InvalidCouplingError(f"{name} 的模必须小于 1，当前 |κ|={abs(kappa):.6g}")
    return complex(0.0, kappa.imag)


def transmission_coefficient(kappa: complex) -> float:
    """由耦合系数求实透射系数 t = √(1−|κ|²)。"""
    return math.sqrt(1.0 - abs(kappa) ** 2)


def fsr_from_geometry(n_eff: float, radius: float, unit_scale: float = 1.0) -> float:
    """
    由有效折射率与环半径计算自由光谱范围 𝓕 = c/(n_eff·r)（角频率）。

    :param n_eff: 有效折射率。
    :param radius: 环半径 (m)。
    :param unit_scale: 内部频率单位对应的 rad/s；归一化模式下传入 Ω 的物理值。
    :return: 以内部单位表示的 𝓕。
    """
    if n_eff <= 0 or radius <= 0:
        raise InvalidParameterError("n_eff 与 radius 必须为正数")
    return constants.c / (n_eff * radius) / unit_scale


def _require_non_negative(**values):
    for name, value in values.items():
        if value < 0 or not np.isfinite(value):
            raise InvalidParameterError(f"{name} 必须为非负有限值，当前为 {value}")


@dataclass(frozen=True)
class PhysicalParams:
    """
    实验层面的参数：谐振频率、自由光谱范围、耦合系数与损耗。

    耦合系数约定为纯虚数，虚部非负。fsr 可以直接给出，也可以由 (n_eff, radius)
    推算；二者同时给出时相对偏差不得超过 1%。
    """
    omega0: float = 1.0
    fsr: float | None = None
    n_eff: float | None = None
    radius: float | None = None
    omega_q: float | None = None
    gamma_qe: float = 0.0
    Gamma: float = 0.0
    kappa1: complex = 0.1j
    kappa2: complex = 0.1j
    kappa_in: complex = 0.25j
    kappa_out: complex | None = None
    gamma_in: float = 0.0
    n_cells: int = 10
    epsilon: float = 0.0
    scatterer_cell: int | None = None
    unit_scale: float = field(default=1.0, compare=False)

    def __post_init__(self):
        set_ = object.__setattr__
        if self.omega0 <= 0:
            raise InvalidParameterError(f"omega0 必须为正数，当前为 {self.omega0}")
        if self.unit_scale <= 0:
            raise InvalidParameterError("unit_scale 必须为正数")

        geometry_given = self.n_eff is not None and self.radius is not None
        if self.fsr is None:
            if not geometry_given:
                raise InvalidParameterError("需要给出 fsr 或 (n_eff, radius)")
            set_(self, "fsr", fsr_from_geometry(self.n_eff, self.radius, self.unit_scale))
        elif geometry_given:
            geometric = fsr_from_geometry(self.n_eff, self.radius, self.unit_scale)
            mismatch = abs(geometric - self.fsr) / self.fsr
            if mismatch > FSR_CONSISTENCY_TOLERANCE:
                raise InvalidParameterError(
                    f"fsr={self.fsr:.6g} 与几何推算值 {geometric:.6g} 相差 {mismatch:.2%}，超过 1%"
                )
        if self.fsr <= 0:
            raise InvalidParameterError(f"fsr 必须为正数，当前为 {self.fsr}")

        if self.omega_q is None:
            set_(self, "omega_q", self.omega0)
        if self.kappa_out is None:
            set_(self, "kappa_out", self.kappa_in)
        for name in ("kappa1", "kappa2", "kappa_in", "kappa_out"):
            set_(self, name, check_coupling(name, getattr(self, name)))

        _require_non_negative(gamma_qe=self.gamma_qe, Gamma=self.Gamma,
                              gamma_in=self.gamma_in, epsilon=self.epsilon)
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise InvalidParameterError(f"n_cells 必须为不小于 1 的整数，当前为 {self.n_cells}")
        set_(self, "n_cells", int(self.n_cells))
        if self.scatterer_cell is not None and not 1 <= self.scatterer_cell <= self.n_cells:
            raise InvalidParameterError(
                f"scatterer_cell 必须位于 [1, {self.n_cells}]，当前为 {self.scatterer_cell}"
            )

    @property
    def t1(self) -> float:
        return transmission_coefficient(self.kappa1)

    @property
    def t2(self) -> float:
        return transmission_coefficient(self.kappa2)

    @property
    def t_in(self) -> float:
        return transmission_coefficient(self.kappa_in)

    @property
    def t_out(self) -> float:
        return transmission_coefficient(self.kappa_out)

    @property
    def scatterer_position(self) -> int:
        """散射体所在的元胞编号，未指定时取中间元胞 ⌈N/2⌉。"""
        if self.scatterer_cell is not None:
            return self.scatterer_cell
        return math.ceil(self.n_cells / 2)


@dataclass(frozen=True)
class TightBindingParams:
    """紧束缚参数 {g, J1, J2} 以及失谐、耗散和元胞数。"""
    g: float
    J1: float
    J2: float
    omega0: float = 1.0
    omega_q: float | None = None
    gamma_qe: float = 0.0
    n_cells: int = 1

    def __post_init__(self):
        _require_non_negative(g=self.g, J1=self.J1, J2=self.J2, gamma_qe=self.gamma_qe)
        if self.omega_q is None:
            object.__setattr__(self, "omega_q", self.omega0)
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise InvalidParameterError(f"n_cells 必须为不小于 1 的整数，当前为 {self.n_cells}")
        object.__setattr__(self, "n_cells", int(self.n_cells))

    @property
    def detuning(self) -> float:
        """QE 相对谐振腔的失谐 ω_q − Ω。"""
        return self.omega_q - self.omega0

    @property
    def scale(self) -> float:
        """耦合强度的特征尺度，用于数值容差。"""
        return max(self.g, self.J1, self.J2)


class LossBudget(NamedTuple):
    gamma_ex: float
    gamma_tol: float
    alpha: float


def derive_tight_binding(p: PhysicalParams) -> TightBindingParams:
    """
    由波导耦合系数推出紧束缚耦合强度：g = √(2Γ𝓕)，J_i = Im(κ_i)·𝓕。

    :param p: 物理参数。
    :return: TightBindingParams，其余字段照抄。
    """
    for name in ("kappa1", "kappa2"):
        check_coupling(name, getattr(p, name))
    return TightBindingParams(
        g=math.sqrt(2.0 * p.Gamma * p.fsr),
        J1=p.kappa1.imag * p.fsr,
        J2=p.kappa2.imag * p.fsr,
        omega0=p.omega0,
        omega_q=p.omega_q,
        gamma_qe=p.gamma_qe,
        n_cells=p.n_cells,
    )


def physical_from_tight_binding(tb: TightBindingParams, fsr: float,
                                kappa_in: complex = 0.25j, gamma_in: float = 0.0,
                                epsilon: float = 0.0, unit_scale: float = 1.0) -> PhysicalParams:
    """
    derive_tight_binding 的逆映射：κ_i = i·J_i/𝓕，Γ = g²/(2𝓕)。

    :param tb: 紧束缚参数。
    :param fsr: 自由光谱范围 𝓕（内部单位）。
    :return: PhysicalParams
    """
    if fsr <= 0:
        raise InvalidParameterError(f"fsr 必须为正数，当前为 {fsr}")
    return PhysicalParams(
        omega0=tb.omega0,
        fsr=fsr,
        omega_q=tb.omega_q,
        gamma_qe=tb.gamma_qe,
        Gamma=tb.g ** 2 / (2.0 * fsr),
        kappa1=1j * tb.J1 / fsr,
        kappa2=1j * tb.J2 / fsr,
        kappa_in=kappa_in,
        gamma_in=gamma_in,
        n_cells=tb.n_cells,
        epsilon=epsilon,
        unit_scale=unit_scale,
    )


def derived_losses(p: PhysicalParams) -> LossBudget:
    """
    计算边缘谐振腔的外部损耗与传播损耗系数。

    γ_ex = −ln(t_in)·𝓕，γ_tol = γ_ex + γ_in，α = 1 − 2γ_in/𝓕（截断到 [0, 1]）。
    """
    kappa_in = check_coupling("kappa_in", p.kappa_in)
    gamma_ex = -math.log(transmission_coefficient(kappa_in)) * p.fsr
    alpha = 1.0 - 2.0 * p.gamma_in / p.fsr
    if not 0.0 <= alpha <= 1.0:
        logger.warning("警告: 损耗系数 α=%.6g 超出 [0, 1]，已截断", alpha)
        alpha = min(max(alpha, 0.0), 1.0)
    return LossBudget(gamma_ex=gamma_ex, gamma_tol=gamma_ex + p.gamma_in, alpha=alpha)


def scatterer_coupling(p: PhysicalParams) -> float:
    """背向散射耦合强度 h = ε·𝓕。"""
    return p.epsilon * p.fsr


def epsilon_for_coupling(h: float, fsr: float) -> float:
    """scatterer_coupling 的逆：给定 h 求 ε = h/𝓕。"""
    if fsr <= 0:
        raise InvalidParameterError(f"fsr 必须为正数，当前为 {fsr}")
    return h / fsr
