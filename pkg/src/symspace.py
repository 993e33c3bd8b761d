"""
对称子空间的线性代数

占据数基 |n> 的规范顺序固定为计数元组的字典序降序，例如 d=2, M=2 时为
(2,0), (1,1), (0,2)。所有 SymOperator 的行列都按这个顺序排列。

计算基中的串按 "第一个张量因子为最高位" 的方式编号，与 numpy 的 C 顺序
reshape 一致。
"""

import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.combinat import multinomial, occupation_tuples, sym_dim
from src.common.errors import (ArgumentError, NormalizationError, ParseError,
                               ResourceGuardError, ValidationError)
from src.common.settings import get_settings

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class OccupationVector:
    """占据数向量 n = (n_1, ..., n_d)，标记对称子空间的正交基"""

    counts: Tuple[int, ...]

    @property
    def d(self) -> int:
        return len(self.counts)

    @property
    def M(self) -> int:
        return sum(self.counts)

    def multinomial(self) -> int:
        return multinomial(self.counts)


def occupation_basis(d: int, M: int) -> List[OccupationVector]:
    """返回 P_{M,d} 中的全部占据数向量（字典序降序）"""
    return [OccupationVector(c) for c in occupation_tuples(d, M)]


@lru_cache(maxsize=None)
def _counts_array(d: int, M: int) -> np.ndarray:
    counts = np.array(occupation_tuples(d, M), dtype=np.int64).reshape(-1, d)
    counts.flags.writeable = False
    return counts


@lru_cache(maxsize=None)
def occupation_index(d: int, M: int) -> Dict[Tuple[int, ...], int]:
    """占据数元组 -> 基矢编号"""
    return {c: i for i, c in enumerate(occupation_tuples(d, M))}


def check_dense(d: int, M: int):
    """稠密 d^M 表示的规模保护"""
    limit = get_settings().max_dense
    if d ** M > limit:
        raise ResourceGuardError(
            f"d^M = {d}^{M} = {d ** M} 超过稠密上限 {limit}（可用 SYMCLONE_MAX_DENSE 调整）")


@lru_cache(maxsize=32)
def embed_isometry(d: int, M: int) -> np.ndarray:
    """
    对称子空间到 H^{⊗M} 的嵌入等距 V

    第 j 列是 |n_j> 在计算基下的坐标：占据数为 n_j 的每个串上取值
    1/sqrt(M!/Π n_i!)。满足 V†V = I。

    Returns:
        np.ndarray: 形状 (d^M, sym_dim(d, M)) 的只读复矩阵
    """
    check_dense(d, M)
    D = sym_dim(d, M)
    if M == 0:
        V = np.ones((1, 1), dtype=complex)
        V.flags.writeable = False
        return V

    digits = np.stack(np.unravel_index(np.arange(d ** M), (d,) * M), axis=1)
    counts = np.stack([(digits == i).sum(axis=1) for i in range(d)], axis=1)

    # 以 M+1 为基的编码保持字典序，基矢编码因此是降序的
    radix = (M + 1) ** np.arange(d - 1, -1, -1, dtype=np.int64)
    keys = counts @ radix
    basis_keys = _counts_array(d, M) @ radix
    columns = D - 1 - np.searchsorted(basis_keys[::-1], keys)

    weights = np.array([1.0 / math.sqrt(multinomial(c)) for c in occupation_tuples(d, M)])
    V = np.zeros((d ** M, D), dtype=complex)
    V[np.arange(d ** M), columns] = weights[columns]
    V.flags.writeable = False
    return V


def symmetrizer(d: int, M: int) -> np.ndarray:
    """对称子空间上的投影 P_+ = V V†"""
    V = embed_isometry(d, M)
    return V @ V.conj().T


@lru_cache(maxsize=64)
def _split_overlap_combinatorial(d: int, A: int, B: int) -> np.ndarray:
    index = occupation_index(d, A + B)
    G = np.zeros((sym_dim(d, A), sym_dim(d, B), sym_dim(d, A + B)))
    for i, m in enumerate(occupation_tuples(d, A)):
        for j, b in enumerate(occupation_tuples(d, B)):
            s = tuple(x + y for x, y in zip(m, b))
            G[i, j, index[s]] = math.sqrt(Fraction(multinomial(m) * multinomial(b), multinomial(s)))
    G.flags.writeable = False
    return G


def _split_overlap_embedding(d: int, A: int, B: int) -> np.ndarray:
    W = embed_isometry(d, A + B).reshape(d ** A, d ** B, -1)
    return np.einsum('xm,yb,xys->mbs', embed_isometry(d, A).conj(),
                     embed_isometry(d, B).conj(), W)


def split_overlap(d: int, A: int, B: int, method: Optional[str] = None) -> np.ndarray:
    """
    分裂重叠张量 G[m, b, s] = (<m| ⊗ <b|) |s>

    |m> ∈ (H^{⊗A})_+，|b> ∈ (H^{⊗B})_+，|s> ∈ (H^{⊗(A+B)})_+。
    由于 (H^{⊗(A+B)})_+ ⊂ (H^{⊗A})_+ ⊗ (H^{⊗B})_+，有 V_{A+B} = (V_A ⊗ V_B) G。

    Args:
        method: "combinatorial"（闭式，非零当且仅当 m+b=s）或 "embedding"
                （通过稠密嵌入计算的参照实现）；默认取配置值

    Raises:
        ResourceGuardError: d^{A+B} 超过 max_dense（两种方法相同）
    """
    if A < 0 or B < 0:
        raise ArgumentError(f"拷贝数必须非负，得到 A={A}, B={B}")
    check_dense(d, A + B)
    method = method or get_settings().overlap_method
    if method == "embedding":
        return _split_overlap_embedding(d, A, B)
    if method == "combinatorial":
        return _split_overlap_combinatorial(d, A, B)
    raise ArgumentError(f"未知的 method: {method!r}")


def haar_state(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar 随机纯态：归一化的标准复高斯向量"""
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return psi / np.linalg.norm(psi)


def _amplitudes(psi: np.ndarray, M: int) -> np.ndarray:
    """psi 可为 (d,) 或 (n, d)；返回 (..., sym_dim) 的振幅"""
    d = psi.shape[-1]
    counts = _counts_array(d, M)
    amps = np.array([math.sqrt(multinomial(c)) for c in occupation_tuples(d, M)], dtype=complex)
    amps = np.broadcast_to(amps, psi.shape[:-1] + amps.shape).copy()
    for i in range(d):
        factor = psi[..., i, None] ** counts[:, i]
        amps *= np.where(counts[:, i] == 0, 1.0, factor)
    return amps


def coherent_amplitudes(psi: Sequence[complex], M: int, tol: Optional[float] = None) -> np.ndarray:
    """
    |psi>^{⊗M} 在占据数基下的振幅

    系数为 psi_1^{n_1} ... psi_d^{n_d} sqrt(M!/Π n_i!)。

    Raises:
        NormalizationError: psi 不是单位向量
    """
    tol = get_settings().tol_alg if tol is None else tol
    psi = np.asarray(psi, dtype=complex)
    if abs(np.linalg.norm(psi) - 1.0) > tol:
        raise NormalizationError(f"psi 的范数为 {np.linalg.norm(psi)!r}，不是单位向量",
                                 invariant="unit-norm")
    return _amplitudes(psi, M)


@dataclass(frozen=True, eq=False)
class SymOperator:
    """对称子空间 (H^{⊗M})_+ 上的算符，按规范占据数顺序排列"""

    d: int
    M: int
    matrix: np.ndarray

    def __post_init__(self):
        side = sym_dim(self.d, self.M)
        if self.matrix.shape != (side, side):
            raise ArgumentError(
                f"矩阵形状 {self.matrix.shape} 与 sym_dim({self.d}, {self.M}) = {side} 不符")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, d: int, M: int, amplitudes: np.ndarray) -> 'SymOperator':
        amplitudes = np.asarray(amplitudes, dtype=complex)
        return cls(d, M, np.outer(amplitudes, amplitudes.conj()))

    @classmethod
    def maximally_mixed(cls, d: int, M: int) -> 'SymOperator':
        D = sym_dim(d, M)
        return cls(d, M, np.eye(D, dtype=complex) / D)

    def state_residuals(self) -> Dict[str, float]:
        """作为量子态的三项残差：厄米性、最小本征值的负部、迹偏差"""
        herm = float(np.abs(self.matrix - self.matrix.conj().T).max())
        eigs = np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2)
        return {
            "hermitian": herm,
            "psd": float(max(0.0, -eigs.min())),
            "trace": float(abs(np.trace(self.matrix) - 1.0)),
        }

    def validate_state(self, tol: Optional[float] = None) -> 'SymOperator':
        """校验厄米、半正定、迹为 1，失败时抛出 ValidationError"""
        tol = get_settings().tol_alg if tol is None else tol
        for name, value in self.state_residuals().items():
            if value > tol:
                raise ValidationError(f"残差 {value:.3e} 超过容差 {tol:.1e}", invariant=f"state-{name}")
        return self

    def to_json(self) -> Dict[str, object]:
        return {"d": self.d, "M": self.M,
                "re": self.matrix.real.tolist(), "im": self.matrix.imag.tolist()}

    @classmethod
    def from_json(cls, data: Dict[str, object], source: str = "<json>") -> 'SymOperator':
        """从 {d, M, re, im} 读取；re/im 可为嵌套行或扁平的行优先数组"""
        try:
            d, M = int(data["d"]), int(data["M"])
            side = sym_dim(d, M)
            re = np.asarray(data["re"], dtype=float).reshape(side, side)
            im = np.asarray(data.get("im", np.zeros((side, side))), dtype=float).reshape(side, side)
        except KeyError as exc:
            raise ParseError(f"缺少字段 {exc.args[0]!r}", location=source)
        except (TypeError, ValueError) as exc:
            raise ParseError(str(exc), location=source)
        return cls(d, M, re + 1j * im)


def load_sym_operator(path: str) -> SymOperator:
    """从 JSON 文件读取 SymOperator"""
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, location=f"{path}:{exc.lineno}:{exc.colno}")
    except OSError as exc:
        raise ParseError(exc.strerror or str(exc), location=path)
    return SymOperator.from_json(data, source=path)


def random_sym_state(d: int, M: int, rng: np.random.Generator,
                     rank: Optional[int] = None) -> SymOperator:
    """随机的对称子空间混态（Ginibre 构造，默认满秩）"""
    D = sym_dim(d, M)
    rank = D if rank is None else rank
    G = rng.standard_normal((D, rank)) + 1j * rng.standard_normal((D, rank))
    rho = G @ G.conj().T
    return SymOperator(d, M, rho / np.trace(rho).real)


def partial_trace_sym(rho: SymOperator, k: int, method: Optional[str] = None) -> SymOperator:
    """
    对称算符的 k 粒子边缘 Tr_{M-k}[rho]

    利用 V_M = (V_{M-k} ⊗ V_k) G，边缘直接在占据数基下计算：
    rho_k[a,b] = Σ_t Σ_{m,n} G[t,a,m] rho[m,n] G[t,b,n]^*
    """
    if not 0 <= k <= rho.M:
        raise ArgumentError(f"需要 0 <= k <= M，得到 k={k}, M={rho.M}")
    if k == rho.M:
        return SymOperator(rho.d, k, rho.matrix.copy())
    G = split_overlap(rho.d, rho.M - k, k, method)
    out = np.einsum('tam,mn,tbn->ab', G, rho.matrix, G.conj(), optimize=True)
    return SymOperator(rho.d, k, out)


def partial_trace_oracle(rho: SymOperator, k: int) -> SymOperator:
    """参照实现：V_k† Tr_{M-k}[V_M rho V_M†] V_k（稠密嵌入）"""
    if not 0 <= k <= rho.M:
        raise ArgumentError(f"需要 0 <= k <= M，得到 k={k}, M={rho.M}")
    d, M = rho.d, rho.M
    VM, Vk = embed_isometry(d, M), embed_isometry(d, k)
    full = (VM @ rho.matrix @ VM.conj().T).reshape(d ** (M - k), d ** k, d ** (M - k), d ** k)
    reduced = np.einsum('iaib->ab', full)
    return SymOperator(d, k, Vk.conj().T @ reduced @ Vk)


def permute_operator(op: np.ndarray, dim: int, copies: int, perm: Sequence[int]) -> np.ndarray:
    """U_π X U_π†：把第 i 个张量因子移到位置 perm[i]"""
    order = np.argsort(perm)
    tensor = op.reshape((dim,) * (2 * copies))
    axes = list(order) + [copies + i for i in order]
    return tensor.transpose(axes).reshape(op.shape)


def permute_vector(vec: np.ndarray, dim: int, copies: int, perm: Sequence[int]) -> np.ndarray:
    """U_π |v>：把第 i 个张量因子移到位置 perm[i]"""
    return vec.reshape((dim,) * copies).transpose(np.argsort(perm)).reshape(vec.shape)


def adjacent_transpositions(copies: int) -> List[Tuple[int, ...]]:
    """对称群 S_copies 的相邻对换生成元"""
    perms = []
    for i in range(copies - 1):
        perm = list(range(copies))
        perm[i], perm[i + 1] = perm[i + 1], perm[i]
        perms.append(tuple(perm))
    return perms


def haar_moment_residual(d: int, M: int, n_samples: int, seed: Optional[int] = None) -> float:
    """
    Haar 矩的蒙特卡罗残差

    用 n_samples 个 Haar 随机纯态估计 ∫dφ |φ><φ|^{⊗M}，在占据数基下与
    P_+/d_+^{(M)} = I/d_+^{(M)} 比较，返回算子范数残差（约 O(1/sqrt(n))）。
    """
    if n_samples < 1:
        raise ArgumentError(f"n_samples 必须 >= 1，得到 {n_samples}")
    if d == 1:
        # 一维空间上每个纯态都等于唯一的基矢
        return 0.0
    rng = np.random.default_rng(seed)
    psi = rng.standard_normal((n_samples, d)) + 1j * rng.standard_normal((n_samples, d))
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    amps = _amplitudes(psi, M)
    moment = amps.T @ amps.conj() / n_samples
    D = sym_dim(d, M)
    residual = float(np.linalg.norm(moment - np.eye(D) / D, ord=2))
    logger.debug("haar_moment_residual(d=%d, M=%d, n=%d) = %.3e", d, M, n_samples, residual)
    return residual


__all__ = [
    'OccupationVector', 'occupation_basis', 'occupation_index', 'check_dense',
    'embed_isometry', 'symmetrizer', 'split_overlap', 'haar_state',
    'coherent_amplitudes', 'SymOperator', 'load_sym_operator', 'random_sym_state',
    'partial_trace_sym', 'partial_trace_oracle', 'permute_operator',
    'permute_vector', 'adjacent_transpositions', 'haar_moment_residual',
]
