"""
异常类型定义

库代码只负责抛出异常；命令行入口根据 exit_code 把异常转换为退出码：
0 通过，1 界/不变量被违反，2 用法或解析错误，3 资源保护触发。
"""

from typing import Optional


class SymCloneError(Exception):
    """所有 symclone 异常的基类"""

    exit_code = 1


class InvalidDimensionError(SymCloneError, ValueError):
    """维数或拷贝数不合法"""

    exit_code = 2


class ArgumentError(SymCloneError, ValueError):
    """参数不满足前置条件（例如 k > M）"""

    exit_code = 2


class ConfigurationError(SymCloneError, ValueError):
    """环境变量或配置值不合法"""

    exit_code = 2


class ParseError(SymCloneError, ValueError):
    """输入文件格式错误，location 指出出错位置"""

    exit_code = 2

    def __init__(self, message: str, location: Optional[str] = None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class ResourceGuardError(SymCloneError, MemoryError):
    """稠密矩阵规模超过保护上限"""

    exit_code = 3


class ValidationError(SymCloneError):
    """不变量校验失败，invariant 为失败的不变量名称"""

    exit_code = 1

    def __init__(self, message: str, invariant: Optional[str] = None):
        self.invariant = invariant
        if invariant:
            message = f"[{invariant}] {message}"
        super().__init__(message)


class NormalizationError(ValidationError):
    """向量或态未归一"""


class BoundViolationError(ValidationError):
    """计算得到的距离超过了解析上界"""


class SolverError(SymCloneError, RuntimeError):
    """SDP 求解器未收敛或证书不满足精度要求"""

    exit_code = 1


__all__ = [
    'SymCloneError',
    'InvalidDimensionError',
    'ArgumentError',
    'ConfigurationError',
    'ParseError',
    'ResourceGuardError',
    'ValidationError',
    'NormalizationError',
    'BoundViolationError',
    'SolverError',
]
