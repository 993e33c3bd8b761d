"""
运行配置

所有容差与规模保护集中在 Settings 中。默认值可由环境变量覆盖：

- SYMCLONE_MAX_DENSE: 稠密嵌入 d^M 的上限（默认 2**20）
- SYMCLONE_MAX_SDP: SDP 中 Choi 矩阵边长上限（默认 400）
- SYMCLONE_OVERLAP: 分裂重叠张量的计算方式，combinatorial 或 embedding
- SYMCLONE_SOLVER: cvxpy 求解器名称（默认 CLARABEL）
- SYMCLONE_WORKERS: 扫描时的工作线程数
"""

import os
from dataclasses import dataclass, replace
from typing import Mapping, Optional

from src.common.errors import ConfigurationError

OVERLAP_METHODS = ("combinatorial", "embedding")


@dataclass(frozen=True)
class Settings:
    """不可变的运行配置"""

    tol_alg: float = 1e-10
    tol_num: float = 1e-8
    tol_sdp: float = 1e-6
    agreement_gate: float = 1e-3
    max_dense: int = 2 ** 20
    max_sdp_side: int = 400
    overlap_method: str = "combinatorial"
    sdp_solver: str = "CLARABEL"
    workers: int = 1

    def __post_init__(self):
        for name in ("tol_alg", "tol_num", "tol_sdp", "agreement_gate"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} 必须为正数")
        if self.max_dense < 1 or self.max_sdp_side < 1 or self.workers < 1:
            raise ConfigurationError("规模上限与线程数必须为正整数")
        if self.overlap_method not in OVERLAP_METHODS:
            raise ConfigurationError(
                f"未知的 overlap_method: {self.overlap_method!r}，可选 {OVERLAP_METHODS}")


def _read_int(env: Mapping[str, str], key: str, default: int) -> int:
    raw = env.get(key)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(f"环境变量 {key}={raw!r} 不是整数")


def load_settings(env: Optional[Mapping[str, str]] = None) -> Settings:
    """
    从环境变量读取配置

    Args:
        env: 环境变量映射，默认为 os.environ

    Returns:
        Settings: 新的配置对象
    """
    env = os.environ if env is None else env
    return Settings(
        max_dense=_read_int(env, "SYMCLONE_MAX_DENSE", Settings.max_dense),
        max_sdp_side=_read_int(env, "SYMCLONE_MAX_SDP", Settings.max_sdp_side),
        overlap_method=env.get("SYMCLONE_OVERLAP") or Settings.overlap_method,
        sdp_solver=(env.get("SYMCLONE_SOLVER") or Settings.sdp_solver).upper(),
        workers=_read_int(env, "SYMCLONE_WORKERS", Settings.workers),
    )


_current: Optional[Settings] = None


def get_settings() -> Settings:
    """返回进程内共享的配置（首次调用时从环境变量加载）"""
    global _current
    if _current is None:
        _current = load_settings()
    return _current


def override_settings(**changes) -> Settings:
    """以给定字段覆盖当前配置，返回新配置；不传参数时重新加载环境变量"""
    global _current
    _current = replace(get_settings(), **changes) if changes else load_settings()
    return _current


__all__ = ['Settings', 'load_settings', 'get_settings', 'override_settings']
