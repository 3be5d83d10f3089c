# chirow/errors.py
"""
chirow 的异常层次。

参数错误继承自 ValueError，数值失败继承自 ArithmeticError，
调用方既可以捕获 ChirowError，也可以按标准异常类型处理。
"""
from dataclasses import dataclass


class ChirowError(Exception):
    """chirow 所有异常的基类。"""


class InvalidParameterError(ChirowError, ValueError):
    """物理参数违反约束（取值范围、一致性等）。"""


class InvalidCouplingError(InvalidParameterError):
    """耦合系数不满足约定：Re(κ)≠0、|κ|≥1 或 Im(κ)<0。"""


class InvalidQEError(InvalidParameterError):
    """量子发射体参数无效，例如 Γ=γ=0 时透射系数无定义。"""


class NumericalFailureError(ChirowError, ArithmeticError):
    """
    数值计算失败。

    :param operation: 出错的运算，形如 "scattering.chain_transfer"，CLI 以此给出退出码 3 的提示。
    """

    def __init__(self, operation: str, message: str):
        super().__init__(f"{operation}: {message}")
        self.operation = operation
        self.message = message


class PoleError(NumericalFailureError):
    """在精确极点处求值（递推分母或 |M12| 低于 1e-300）。"""

    def __init__(self, operation: str, omega=None, message: str | None = None):
        if message is None:
            message = f"在 ω={omega} 处遇到极点"
        super().__init__(operation, message)
        self.omega = omega


class IllConditionedError(NumericalFailureError):
    """转移矩阵连乘的范数超过上限。"""


class EigensolverError(NumericalFailureError):
    """本征求解失败或残差超过 1e-9·‖H‖。"""


class DegenerateRoutingError(NumericalFailureError):
    """某个端口总输出为零，保真度无定义。"""


@dataclass(frozen=True)
class ValidationIssue:
    """配置校验中的一条问题，path 为点分字段路径，例如 "params.n_cells"。"""
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


class ConfigValidationError(ChirowError):
    """实验配置未通过校验，issues 中包含全部问题。"""

    def __init__(self, issues: list[ValidationIssue]):
        self.issues = list(issues)
        lines = "\n".join(str(issue) for issue in self.issues)
        super().__init__(f"配置校验失败，共 {len(self.issues)} 处问题:\n{lines}")
