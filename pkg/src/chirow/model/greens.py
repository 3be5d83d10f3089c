# chirow/model/greens.py
"""
边界格林函数的递推分析。

左边界递推对应以 QE 为端点的线性链 QE–A–B–QE–A–B…（去掉末端 J2 键），
迭代 N 次恰好给出 3N 位点链在 QE 端点处的预解式矩阵元。右边界递推按
给定的迭代式实现，其不动点满足一个三次方程。

频率以 J2 为单位，ω 取复数，虚部 η>0 为推迟正则化。
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
import pandas as pd

from ..errors import InvalidParameterError, PoleError

logger = logging.getLogger(__name__)

POLE_FLOOR = 1e-300
DEFAULT_ETA_RATIO = 1e-6
DIVERGENCE_FACTOR = 0.1
MAX_STEPS = 500
CONVERGENCE_TOLERANCE = 1e-12
NEWTON_STEPS = 4


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"


def as_side(value) -> Side:
    try:
        return Side(value)
    except ValueError:
        raise ValueError(f"side 必须为 left 或 right，当前为 {value!r}") from None


@dataclass(frozen=True)
class GreenRecursionState:
    """一次递推的结果：边界格林函数值 value 以及迭代步数 step。"""
    side: Side
    omega: complex
    value: complex
    step: int
    converged: bool = False

    def __post_init__(self):
        if complex(self.omega).imag < 0:
            raise ValueError(f"推迟格林函数要求 Im(ω) ≥ 0，当前 ω={self.omega}")


class LeftFixedPoints(NamedTuple):
    regular: complex
    singular: complex


def left_recursion_step(x: complex, omega: complex, g: float, J1: float, J2: float) -> complex:
    """
    左边界递推的一步：

        G' = [ω(ω − J2²G) − J1²] / [(ω² − g²)(ω − J2²G) − J1²ω]
    """
    y = omega - J2 ** 2 * x
    denominator = (omega ** 2 - g ** 2) * y - J1 ** 2 * omega
    if abs(denominator) < POLE_FLOOR:
        raise PoleError("greens.left_recursion_step", omega)
    return (omega * y - J1 ** 2) / denominator


def xi_left(x: complex, omega: complex, g: float, J1: float, J2: float) -> complex:
    """不动点函数 ξ_L(x) = F(x) − x，其零点即左边界递推的不动点。"""
    return left_recursion_step(x, omega, g, J1, J2) - x


def left_quadratic_coefficients(omega: complex, g: float, J1: float, J2: float) -> tuple[complex, complex, complex]:
    """左不动点二次方程 a·x² + b·x + c = 0 的系数。"""
    w2 = omega ** 2 - g ** 2
    return (J2 ** 2 * w2,
            -omega * (w2 + J2 ** 2 - J1 ** 2),
            omega ** 2 - J1 ** 2)


def singular_residue(g: float, J1: float, J2: float) -> float:
    """奇异分支在 ω→±g 处的留数 (J2² − J1²)/(2J2²)。"""
    if J2 <= 0:
        raise InvalidParameterError("J2 必须为正数")
    return (J2 ** 2 - J1 ** 2) / (2.0 * J2 ** 2)


def regular_limit(g: float, J1: float, J2: float, sign: int = 1) -> float:
    """
    正则分支在 ω = ±g 处的取值 (g² − J1²)/(±g·(J2² − J1²))。

    即把 G 按 (ω ∓ g) 展开后零阶项的系数：二次方程 a·x² + b·x + c = 0 在 a → 0 时
    剩下的根 −c/b。它与 left_fixed_points 的正则根在 |ω ∓ g| → 0 时一致，
    偏差为 O(|ω ∓ g|)；ω 恰为 ±g 时 left_fixed_points 抛出 PoleError，应改用本函数。
    """
    if g <= 0 or J1 == J2:
        raise InvalidParameterError("正则分支极限要求 g > 0 且 J1 ≠ J2")
    return (g ** 2 - J1 ** 2) / (sign * g * (J2 ** 2 - J1 ** 2))


def left_fixed_points(omega: complex, g: float, J1: float, J2: float) -> LeftFixedPoints:
    """
    左边界递推的两个不动点，并按与奇异项 R/(ω∓g) 的距离区分正则/奇异分支。

    ω² = g² 时二次项消失，抛出 PoleError；此时正则分支由 regular_limit 给出。
    """
    a, b, c = left_quadratic_coefficients(omega, g, J1, J2)
    if abs(a) < POLE_FLOOR:
        raise PoleError("greens.left_fixed_points", omega, "ω² = g²，奇异分支发散")
    disc = np.sqrt(complex(b * b - 4 * a * c))
    # 数值稳定的求根公式
    q = -0.5 * (b + disc) if abs(b + disc) >= abs(b - disc) else -0.5 * (b - disc)
    first = q / a
    second = c / q if abs(q) > POLE_FLOOR else first
    nearest = g if abs(omega - g) <= abs(omega + g) else -g
    leading = singular_residue(g, J1, J2) / (omega - nearest) if omega != nearest else np.inf
    if abs(first - leading) <= abs(second - leading):
        return LeftFixedPoints(regular=complex(second), singular=complex(first))
    return LeftFixedPoints(regular=complex(first), singular=complex(second))


def left_stability(g: float, J1: float, J2: float) -> float:
    """
    奇异不动点处 ∂ξ_L/∂x = J1²/J2² − 1。负值表示不动点稳定，即存在左边缘态。
    """
    if J2 <= 0:
        raise InvalidParameterError("J2 必须为正数")
    return J1 ** 2 / J2 ** 2 - 1.0


def right_recursion_step(x: complex, omega: complex, g: float, J1: float, J2: float) -> complex:
    """
    右边界递推的一步：G' = {ω − J1²[(ω − J2²G)² − g²]⁻¹}⁻¹。
    """
    d = (omega - J2 ** 2 * x) ** 2 - g ** 2
    if abs(d) < POLE_FLOOR:
        raise PoleError("greens.right_recursion_step", omega)
    inner = omega - J1 ** 2 / d
    if abs(inner) < POLE_FLOOR:
        raise PoleError("greens.right_recursion_step", omega)
    return 1.0 / inner


def right_cubic_coefficients(omega: complex, g: float, J1: float, J2: float) -> tuple[complex, ...]:
    """
    右不动点三次方程的系数 (a3, a2, a1, a0)：

        ωJ2⁴x³ − (2ω²J2² + J2⁴)x² + [ω(ω² − g² + 2J2²) − J1²]x + g² − ω² = 0
    """
    return (omega * J2 ** 4,
            -(2 * omega ** 2 * J2 ** 2 + J2 ** 4),
            omega * (omega ** 2 - g ** 2 + 2 * J2 ** 2) - J1 ** 2,
            g ** 2 - omega ** 2)


def _polish(coefficients, root: complex) -> complex:
    derivative = np.polyder(coefficients)
    for _ in range(NEWTON_STEPS):
        slope = np.polyval(derivative, root)
        if slope == 0:
            break
        step = np.polyval(coefficients, root) / slope
        root = root - step
        if abs(step) <= 1e-16 * max(1.0, abs(root)):
            break
    return complex(root)


def cardano_roots(a: complex, b: complex, c: complex, d: complex) -> np.ndarray:
    """
    用 Cardano 公式求 a·x³ + b·x² + c·x + d = 0 的三个复根，并做 Newton 修正。
    """
    if abs(a) < POLE_FLOOR:
        raise PoleError("greens.cardano_roots", message="三次项系数为零")
    p = (3 * a * c - b * b) / (3 * a * a)
    q = (2 * b ** 3 - 9 * a * b * c + 27 * a * a * d) / (27 * a ** 3)
    shift = -b / (3 * a)
    sq = np.sqrt(complex((q / 2) ** 2 + (p / 3) ** 3))
    w = -q / 2 + sq if abs(-q / 2 + sq) >= abs(-q / 2 - sq) else -q / 2 - sq
    u = complex(w) ** (1.0 / 3.0) if w != 0 else 0j
    unity = np.exp(2j * np.pi / 3)
    roots = []
    for k in range(3):
        uk = u * unity ** k
        vk = -p / (3 * uk) if uk != 0 else 0j
        roots.append(uk + vk + shift)
    coefficients = np.array([a, b, c, d], dtype=complex)
    return np.array([_polish(coefficients, r) for r in roots])


def right_fixed_points(omega: complex, g: float, J1: float, J2: float) -> np.ndarray:
    """右边界递推的不动点（三次方程的全部根）。ω=0 时退化为二次方程。"""
    a3, a2, a1, a0 = right_cubic_coefficients(omega, g, J1, J2)
    if abs(a3) < POLE_FLOOR:
        return np.roots([a2, a1, a0]).astype(complex)
    return cardano_roots(a3, a2, a1, a0)


def _step_function(side: Side):
    return left_recursion_step if side is Side.LEFT else right_recursion_step


def boundary_green(side, omega: complex, g: float, J1: float, J2: float, n_cells: int,
                   seed: complex = 0j) -> GreenRecursionState:
    """从 seed 出发精确迭代 n_cells 步，得到 N 元胞链的边界格林函数。"""
    side = as_side(side)
    if n_cells < 1:
        raise InvalidParameterError("n_cells 必须不小于 1")
    step = _step_function(side)
    x = complex(seed)
    for _ in range(n_cells):
        x = step(x, omega, g, J1, J2)
    return GreenRecursionState(side=side, omega=complex(omega), value=x, step=n_cells)


def iterate_boundary(side, omega: complex, g: float, J1: float, J2: float,
                     seed: complex = 0j, max_steps: int = MAX_STEPS,
                     tol: float = CONVERGENCE_TOLERANCE) -> GreenRecursionState:
    """
    迭代到不动点：当 |Δx| ≤ tol·max(1, |x|) 时判为收敛，最多 max_steps 步。
    """
    side = as_side(side)
    step = _step_function(side)
    x = complex(seed)
    for n in range(1, max_steps + 1):
        new = step(x, omega, g, J1, J2)
        if abs(new - x) <= tol * max(1.0, abs(new)):
            return GreenRecursionState(side=side, omega=complex(omega), value=new, step=n, converged=True)
        x = new
    logger.debug("递推在 ω=%s 处 %d 步内未收敛", omega, max_steps)
    return GreenRecursionState(side=side, omega=complex(omega), value=x, step=max_steps)


def emitter_chain_hamiltonian(g: float, J1: float, J2: float, n_cells: int) -> np.ndarray:
    """
    以 QE 为第 0 个位点的线性链，键依次为 g, J1, J2 循环，末端 J2 键去掉（共 3N 个位点）。
    """
    hoppings = np.tile([g, J1, J2], n_cells)[:-1]
    return np.diag(hoppings, 1) + np.diag(hoppings, -1)


def boundary_resolvent(omega: complex, g: float, J1: float, J2: float, n_cells: int) -> complex:
    """直接求逆得到的边界预解式矩阵元 [(ω − H)⁻¹]₀₀，用作左递推的对照。"""
    h = emitter_chain_hamiltonian(g, J1, J2, n_cells)
    unit = np.zeros(h.shape[0], dtype=complex)
    unit[0] = 1.0
    return complex(np.linalg.solve(omega * np.eye(h.shape[0]) - h, unit)[0])


def singularity_scan(side, g: float, J1: float, J2: float, omega_grid,
                     eta: float | None = None) -> pd.DataFrame:
    """
    在实频率网格上扫描边界格林函数的奇异性。

    每个 ω 取 ω + iη 迭代到收敛；收敛值满足 |G| > 0.1/η 的频率判为奇异。
    返回列 omega, re, im, converged, singular（频率以 J2 为单位）。
    """
    side = as_side(side)
    if eta is None:
        eta = DEFAULT_ETA_RATIO * J2
    if eta <= 0:
        raise InvalidParameterError("eta 必须为正数")
    threshold = DIVERGENCE_FACTOR / eta
    rows = []
    for omega in np.atleast_1d(np.asarray(omega_grid, dtype=float)):
        try:
            state = iterate_boundary(side, complex(omega, eta), g, J1, J2)
        except PoleError:
            logger.warning("警告: ω=%.6g 处遇到递推极点，已跳过", omega)
            rows.append((omega, np.nan, np.nan, False, False))
            continue
        singular = state.converged and abs(state.value) > threshold
        rows.append((omega, state.value.real, state.value.imag, state.converged, singular))
    frame = pd.DataFrame(rows, columns=["omega", "re", "im", "converged", "singular"])
    frame["omega_over_J2"] = frame["omega"] / J2 if J2 > 0 else np.nan
    return frame


def right_singularity_scan(g: float, J1: float, J2: float, omega_grid,
                           eta: float | None = None) -> list[float]:
    """右边界格林函数奇异的频率列表；J1 < J2 时为 {0}。"""
    frame = singularity_scan(Side.RIGHT, g, J1, J2, omega_grid, eta)
    return frame.loc[frame["singular"], "omega"].tolist()


def left_singularity_scan(g: float, J1: float, J2: float, omega_grid,
                          eta: float | None = None) -> list[float]:
    """左边界格林函数奇异的频率列表；J1 < J2 时为 {−g, +g}。"""
    frame = singularity_scan(Side.LEFT, g, J1, J2, omega_grid, eta)
    return frame.loc[frame["singular"], "omega"].tolist()
