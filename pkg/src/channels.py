"""
对称子空间之间的信道（Choi 矩阵表示）

Choi 约定：choi = (Φ ⊗ id)(|Ω><Ω|)，|Ω> = Σ_i |i>|i> 未归一，输出因子在前、
输入因子在后，两侧都按规范占据数顺序排列。于是
    choi4[a, m, b, n] = Φ(|m><n|)[a, b]
其中 choi4 是 choi 的 (out, in, out, in) 四阶张量视图。

输入空间为 (H_in^{⊗copies_in})_+，dim H_in = d_in（默认与输出的 d 相同）；
输出空间为 (H^{⊗copies_out})_+。一个维数为 D 的普通系统写成 (d=D, copies=1)。
"""

import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.combinat import ProbabilityVector, ps_distribution, sym_dim
from src.common.errors import ArgumentError, ParseError, ValidationError
from src.common.settings import get_settings
from src.symspace import SymOperator, embed_isometry, split_overlap

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class HermitianMap:
    """保厄米映射（例如两个信道之差）；choi 只要求厄米"""

    d: int
    copies_in: int
    copies_out: int
    choi: np.ndarray
    d_in: Optional[int] = field(default=None)

    def __post_init__(self):
        if self.d_in is None:
            object.__setattr__(self, "d_in", self.d)
        side = self.out_dim * self.in_dim
        if self.choi.shape != (side, side):
            raise ArgumentError(
                f"Choi 形状 {self.choi.shape} 与 (out={self.out_dim}) x (in={self.in_dim}) 不符")

    @property
    def in_dim(self) -> int:
        return sym_dim(self.d_in, self.copies_in)

    @property
    def out_dim(self) -> int:
        return sym_dim(self.d, self.copies_out)

    @property
    def choi4(self) -> np.ndarray:
        """(out, in, out, in) 张量视图"""
        return self.choi.reshape(self.out_dim, self.in_dim, self.out_dim, self.in_dim)

    def same_shape(self, other: 'HermitianMap') -> bool:
        return (self.d, self.d_in, self.copies_in, self.copies_out) == \
               (other.d, other.d_in, other.copies_in, other.copies_out)

    def __sub__(self, other: 'HermitianMap') -> 'HermitianMap':
        if not self.same_shape(other):
            raise ArgumentError("两个映射的输入/输出空间不一致，无法相减")
        return HermitianMap(self.d, self.copies_in, self.copies_out,
                            self.choi - other.choi, self.d_in)

    def hermitian_residual(self) -> float:
        return float(np.abs(self.choi - self.choi.conj().T).max())


class SymChannel(HermitianMap):
    """完全正且保迹的对称子空间信道"""

    def cptp_residuals(self) -> Dict[str, float]:
        """厄米性、半正定性（最小本征值负部）与保迹性的残差"""
        herm = (self.choi + self.choi.conj().T) / 2
        marginal = np.einsum('aman->mn', self.choi4)
        return {
            "hermitian": self.hermitian_residual(),
            "psd": float(max(0.0, -np.linalg.eigvalsh(herm).min())),
            "trace_preserving": float(np.abs(marginal - np.eye(self.in_dim)).max()),
        }

    def validate(self, tol: Optional[float] = None) -> 'SymChannel':
        tol = get_settings().tol_alg if tol is None else tol
        for name, value in self.cptp_residuals().items():
            if value > tol:
                raise ValidationError(f"残差 {value:.3e} 超过容差 {tol:.1e}", invariant=f"cptp-{name}")
        return self

    def to_json(self) -> Dict[str, object]:
        return {"d": self.d, "d_in": self.d_in, "copies_in": self.copies_in,
                "copies_out": self.copies_out,
                "choi_re": self.choi.real.tolist(), "choi_im": self.choi.imag.tolist()}

    @classmethod
    def from_json(cls, data: Dict[str, object], source: str = "<json>") -> 'SymChannel':
        """从 {d, copies_in, copies_out, choi_re, choi_im[, d_in]} 读取"""
        try:
            d, M, k = int(data["d"]), int(data["copies_in"]), int(data["copies_out"])
            d_in = int(data.get("d_in", d))
            side = sym_dim(d, k) * sym_dim(d_in, M)
            re = np.asarray(data["choi_re"], dtype=float).reshape(side, side)
            im = np.asarray(data.get("choi_im", np.zeros((side, side))), dtype=float).reshape(side, side)
        except KeyError as exc:
            raise ParseError(f"缺少字段 {exc.args[0]!r}", location=source)
        except (TypeError, ValueError) as exc:
            raise ParseError(str(exc), location=source)
        return cls(d, M, k, re + 1j * im, d_in)


def load_channel(path: str) -> SymChannel:
    """从 JSON 文件读取 SymChannel 并校验 CPTP"""
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, location=f"{path}:{exc.lineno}:{exc.colno}")
    except OSError as exc:
        raise ParseError(exc.strerror or str(exc), location=path)
    return SymChannel.from_json(data, source=path).validate(get_settings().tol_num)


def _from_choi4(cls, d: int, copies_in: int, copies_out: int, choi4: np.ndarray,
                d_in: Optional[int] = None):
    out_dim, in_dim = choi4.shape[0], choi4.shape[1]
    choi = choi4.reshape(out_dim * in_dim, out_dim * in_dim)
    # 缓存的信道在调用方之间共享，Choi 矩阵只读
    choi.flags.writeable = False
    return cls(d, copies_in, copies_out, choi, d_in)


def identity_channel(d: int, M: int) -> SymChannel:
    """(H^{⊗M})_+ 上的恒等信道，Choi = |Ω><Ω|"""
    D = sym_dim(d, M)
    eye = np.eye(D, dtype=complex)
    return _from_choi4(SymChannel, d, M, M, np.einsum('am,bn->ambn', eye, eye))


@lru_cache(maxsize=64)
def uclon_channel(d: int, s: int, k: int, method: Optional[str] = None) -> SymChannel:
    """
    通用 s -> k 克隆信道

    UClon_{s,k}(rho) = (d_+^{(s)}/d_+^{(k)}) P_+^{(k)} (rho ⊗ I^{⊗(k-s)}) P_+^{(k)}
    s = k 时为恒等信道；s = 0 时制备 (H^{⊗k})_+ 上的最大混态。
    """
    if not 0 <= s <= k:
        raise ArgumentError(f"需要 s <= k，得到 s={s}, k={k}")
    G = split_overlap(d, s, k - s, method)
    scale = sym_dim(d, s) / sym_dim(d, k)
    choi4 = scale * np.einsum('mta,ntb->ambn', G.conj(), G, optimize=True)
    return _from_choi4(SymChannel, d, s, k, choi4.astype(complex))


@lru_cache(maxsize=64)
def umeasprep_channel(d: int, M: int, k: int, method: Optional[str] = None) -> SymChannel:
    """
    通用测量-制备信道 M -> k

    UMeasPrep_{M,k}(rho) = (d_+^{(M)}/d_+^{(M+k)}) Tr_M[(rho ⊗ I^{⊗k}) P_+^{(M+k)}]

    以 G = (V_M ⊗ V_k)† V_{M+k} 写出：Φ(|m><n|)[a,b] = c (G G†)[(n,a),(m,b)]。
    method="embedding" 时严格经由 embed_isometry(d, M+k) 构造（受稠密规模保护）。
    k = 0 时为求迹泛函。
    """
    if M < 0 or k < 0:
        raise ArgumentError(f"拷贝数必须非负，得到 M={M}, k={k}")
    G = split_overlap(d, M, k, method)
    scale = sym_dim(d, M) / sym_dim(d, M + k)
    choi4 = scale * np.einsum('nas,mbs->ambn', G, G.conj(), optimize=True)
    return _from_choi4(SymChannel, d, M, k, choi4.astype(complex))


@lru_cache(maxsize=64)
def trace_channel(d: int, M: int, k: int, method: Optional[str] = None) -> SymChannel:
    """偏迹信道 Tr_{M-k}: (H^{⊗M})_+ -> (H^{⊗k})_+"""
    if not 0 <= k <= M:
        raise ArgumentError(f"需要 0 <= k <= M，得到 k={k}, M={M}")
    G = split_overlap(d, M - k, k, method)
    choi4 = np.einsum('tam,tbn->ambn', G, G.conj(), optimize=True)
    return _from_choi4(SymChannel, d, M, k, choi4.astype(complex))


def transposition_map(d: int, copies: int, basis: Optional[np.ndarray] = None) -> HermitianMap:
    """
    (H^{⊗copies})_+ 上的转置映射

    默认在规范占据数基下转置；给定酉矩阵 basis = U 时，在 U 的列所构成的
    基下转置：Θ_U(X) = U (U† X U)^T U† = W X^T W†，W = U U^T。
    """
    D = sym_dim(d, copies)
    W = np.eye(D, dtype=complex) if basis is None else basis @ basis.T
    if W.shape != (D, D):
        raise ArgumentError(f"basis 形状 {W.shape} 与维数 {D} 不符")
    return _from_choi4(HermitianMap, d, copies, copies, np.einsum('an,bm->ambn', W, W.conj()))


def pair_trace_channel(d: int, k: int) -> SymChannel:
    """
    (K^{⊗k})_+ -> H^{⊗k}，K = H ⊗ H'：对每一对求掉纯化因子 H'

    输出空间 H^{⊗k} 不一定落在对称子空间内，因此作为一个 d^k 维的单系统
    (d=d^k, copies_out=1) 表示。
    """
    K = d * d
    V = np.asarray(embed_isometry(K, k)).T.reshape((-1,) + (d, d) * k)
    # (s, x1, y1, x2, y2, ...) -> (s, x1..xk, y1..yk)
    axes = [0] + [1 + 2 * i for i in range(k)] + [2 + 2 * i for i in range(k)]
    V = V.transpose(axes).reshape(-1, d ** k, d ** k)
    choi4 = np.einsum('sxy,tzy->xszt', V, V.conj())
    return _from_choi4(SymChannel, d ** k, k, 1, choi4, d_in=K)


def apply(ch: HermitianMap, rho: SymOperator) -> SymOperator:
    """通过 Choi 矩阵作用信道：Φ(rho)[a,b] = Σ_{m,n} choi4[a,m,b,n] rho[m,n]"""
    if (rho.d, rho.M) != (ch.d_in, ch.copies_in):
        raise ArgumentError(
            f"态位于 (d={rho.d}, M={rho.M})，信道输入为 (d={ch.d_in}, M={ch.copies_in})")
    return SymOperator(ch.d, ch.copies_out, np.einsum('ambn,mn->ab', ch.choi4, rho.matrix))


def compose(after: HermitianMap, before: HermitianMap) -> HermitianMap:
    """
    复合 after ∘ before

    两个都是 SymChannel 时结果仍是 SymChannel，否则为 HermitianMap。
    """
    if (after.d_in, after.copies_in) != (before.d, before.copies_out):
        raise ArgumentError(
            f"内部维数不匹配：after 输入 (d={after.d_in}, M={after.copies_in})，"
            f"before 输出 (d={before.d}, M={before.copies_out})")
    choi4 = np.einsum('apbq,pmqn->ambn', after.choi4, before.choi4, optimize=True)
    cls = SymChannel if isinstance(after, SymChannel) and isinstance(before, SymChannel) else HermitianMap
    return _from_choi4(cls, after.d, before.copies_in, after.copies_out, choi4, before.d_in)


def mix(channels: Sequence[SymChannel], weights) -> SymChannel:
    """
    凸组合 Σ_i w_i Φ_i

    Args:
        weights: ProbabilityVector 或概率序列（必须非负且和为 1）
    """
    if not isinstance(weights, ProbabilityVector):
        weights = [float(w) for w in weights]
        if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > get_settings().tol_alg:
            raise ArgumentError("权重必须非负且和为 1")
    weights = [float(w) for w in weights]
    if len(weights) != len(channels) or not channels:
        raise ArgumentError("信道数与权重数不一致")
    first = channels[0]
    if not all(first.same_shape(ch) for ch in channels):
        raise ArgumentError("参与混合的信道形状不一致")
    choi = sum(w * ch.choi for w, ch in zip(weights, channels))
    return SymChannel(first.d, first.copies_in, first.copies_out, choi, first.d_in)


def decomposition_channels(d: int, M: int, k: int) -> List[SymChannel]:
    """分解右侧各项 UClon_{s,k} ∘ Tr_{M-s}，s = 0..min(k, M)"""
    return [compose(uclon_channel(d, s, k), trace_channel(d, M, s))
            for s in range(min(k, M) + 1)]


def decomposition_residual(d: int, M: int, k: int) -> float:
    """
    混合分解的残差

    左边 UMeasPrep_{M,k}，右边 Σ_s p_s UClon_{s,k} ∘ Tr_{M-s}；
    返回两者 Choi 矩阵之差的迹范数。
    """
    lhs = umeasprep_channel(d, M, k)
    rhs = mix(decomposition_channels(d, M, k), ps_distribution(d, M, k))
    residual = float(np.linalg.norm(lhs.choi - rhs.choi, ord='nuc'))
    logger.debug("decomposition_residual(d=%d, M=%d, k=%d) = %.3e", d, M, k, residual)
    return residual


__all__ = [
    'HermitianMap', 'SymChannel', 'load_channel', 'identity_channel',
    'uclon_channel', 'umeasprep_channel', 'trace_channel', 'transposition_map',
    'pair_trace_channel', 'apply', 'compose', 'mix', 'decomposition_channels',
    'decomposition_residual',
]
