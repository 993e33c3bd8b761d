"""
对称广播信道 k 接收方限制的量子容量上界
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, Optional

import numpy as np
from scipy.stats import entropy

from src.channels import HermitianMap, compose, trace_channel, transposition_map
from src.combinat import sym_dim
from src.common.errors import ArgumentError
from src.diamond import check_sdp_size, diamond_norm

logger = logging.getLogger(__name__)


def binary_entropy(x: float) -> float:
    """H(x) = -x log2 x - (1-x) log2(1-x)，H(0) = H(1) = 0"""
    if not 0.0 <= x <= 1.0:
        raise ArgumentError(f"二元熵的参数必须在 [0, 1] 内，得到 {x}")
    return float(entropy([x, 1.0 - x], base=2))


@dataclass(frozen=True)
class CapacityReport:
    """容量上界；continuity_bound 在 2kd/M > 1 时无定义，此时 continuity_defined 为 False"""

    d: int
    M: int
    k: int
    d_in: int
    continuity_bound: Optional[float]
    continuity_defined: bool
    transpose_bound_log: float
    transpose_bound_linear: float
    min_bound: float
    computed_transpose_diamond: Optional[float] = None

    def to_json(self) -> Dict[str, object]:
        return asdict(self)


def capacity_bounds(d: int, M: int, k: int, d_in: int,
                    computed_transpose_diamond: Optional[float] = None) -> CapacityReport:
    """
    continuity_bound = (16kd/M) log2 d_+^{(k)} + 4 H(2kd/M)
    transpose_bound_log = min(log2(1 + 2kd d_+^{(k)}/M), log2(1 + 2kd d_in/M))
    transpose_bound_linear = min(2kd d_+^{(k)}/M, 2kd d_in/M)
    """
    if min(d, M, k, d_in) < 1:
        raise ArgumentError(f"参数必须 >= 1，得到 d={d}, M={M}, k={k}, d_in={d_in}")
    eps = 2 * k * d / M
    dk = sym_dim(d, k)
    defined = eps <= 1
    continuity = 8 * eps * math.log2(dk) + 4 * binary_entropy(eps) if defined else None
    if not defined:
        logger.info("2kd/M = %.4f > 1，连续性界被略去", eps)
    linear = min(eps * dk, eps * d_in)
    log_form = min(math.log2(1 + eps * dk), math.log2(1 + eps * d_in))
    bounds = [log_form, linear] + ([continuity] if defined else [])
    return CapacityReport(
        d=d, M=M, k=k, d_in=d_in,
        continuity_bound=continuity,
        continuity_defined=defined,
        transpose_bound_log=log_form,
        transpose_bound_linear=linear,
        min_bound=min(bounds),
        computed_transpose_diamond=computed_transpose_diamond,
    )


def transpose_diamond(E_k: HermitianMap, basis: Optional[np.ndarray] = None,
                      tol: Optional[float] = None, seed: Optional[int] = 0) -> float:
    """
    log2 ‖E_k ∘ Θ_in‖_⋄

    Θ_in 为输入空间上的转置，默认在规范占据数基下；给定酉矩阵 basis 时在其列基下转置
    （菱形范数与基的选择无关）。返回经过证书的上界的对数。
    """
    check_sdp_size(E_k)
    theta = transposition_map(E_k.d_in, E_k.copies_in, basis)
    result = diamond_norm(compose(E_k, theta), tol=tol, seed=seed)
    return math.log2(result.upper)


def identity_broadcast_capacity(d: int, M: int, k: int, tol: Optional[float] = None) -> CapacityReport:
    """恒等广播（E 为 (H^{⊗M})_+ 上的恒等）的 k 接收方限制：解析界与数值转置菱形范数"""
    restricted = trace_channel(d, M, k)
    computed = transpose_diamond(restricted, tol=tol)
    return capacity_bounds(d, M, k, sym_dim(d, M), computed)


__all__ = [
    'binary_entropy', 'CapacityReport', 'capacity_bounds', 'transpose_diamond',
    'identity_broadcast_capacity',
]
