"""
有限 de Finetti 构造

- 态：UMeasPrep_{M,k}(rho) 逼近 rho 的 k 粒子边缘
- 置换不变态：经纯化进入 (K^{⊗M})_+，K = H ⊗ H，界中的 d 换成 d^2
- 对称广播信道：UMeasPrep_{M,k} ∘ E 逼近 Tr_{M-k} ∘ E（菱形范数）
- 一般置换不变广播信道：由调用方给出协变膨胀 V，同样以 d^2 计界
- 克隆与估计的保真度差随 M 的衰减
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Iterator, Optional, Tuple

import numpy as np

from src.channels import (SymChannel, apply, compose, pair_trace_channel, trace_channel,
                          uclon_channel, umeasprep_channel)
from src.combinat import fidelity_clon, fidelity_est, sym_dim
from src.common.errors import ArgumentError, BoundViolationError, ValidationError
from src.common.settings import get_settings
from src.common.sweep_events import SweepEventType
from src.diamond import diamond_distance, trace_norm
from src.symspace import (SymOperator, adjacent_transpositions, check_dense, coherent_amplitudes,
                          embed_isometry, partial_trace_sym, permute_operator, permute_vector)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DeFinettiCertificate:
    """距离（迹范数或菱形范数）与对应解析上界的对照"""

    k: int
    distance: float
    bound: float
    dimension_used: int
    norm: str = "trace"
    tolerance: float = 0.0

    @property
    def margin(self) -> float:
        return self.bound - self.distance

    def to_json(self) -> Dict[str, object]:
        return {
            "k": self.k,
            "distance": {"value": self.distance, "tolerance": self.tolerance},
            "bound": self.bound,
            "margin": self.margin,
            "dimension_used": self.dimension_used,
            "norm": self.norm,
        }


def _certify(certificate: DeFinettiCertificate, invariant: str) -> DeFinettiCertificate:
    if certificate.margin < -certificate.tolerance:
        raise BoundViolationError(
            f"距离 {certificate.distance:.10f} 超过上界 {certificate.bound:.10f}", invariant=invariant)
    return certificate


def estimation_bound(d: int, M: int, k: int) -> float:
    """2k(d+k-1)/(M+d)"""
    return 2 * k * (d + k - 1) / (M + d)


def broadcast_bound(d: int, M: int, k: int) -> float:
    """min(4(1 - sqrt(d_+^{(M-k)}/d_+^{(M)})), 2kd/M)"""
    ratio = Fraction(sym_dim(d, M - k), sym_dim(d, M))
    return min(4.0 * (1.0 - math.sqrt(ratio)), 2 * k * d / M)


def definetti_mixture_state(rho: SymOperator) -> SymOperator:
    """逼近用的混合态本身 UMeasPrep_{M,M}(rho)"""
    return apply(umeasprep_channel(rho.d, rho.M, rho.M), rho)


def definetti_state(rho: SymOperator, k: int) -> Tuple[SymOperator, DeFinettiCertificate]:
    """
    rho 的 k 粒子边缘与乘积态混合之间的距离

    Returns:
        (rho_tilde_k, certificate)：rho_tilde_k = UMeasPrep_{M,k}(rho)，
        certificate.distance = ‖rho_tilde_k - Tr_{M-k} rho‖_1，
        certificate.bound = 2k(d+k-1)/(M+d)

    Raises:
        ArgumentError: k > M
        ValidationError: rho 不是合法的态
        BoundViolationError: 距离超过上界
    """
    settings = get_settings()
    if not 1 <= k <= rho.M:
        raise ArgumentError(f"需要 1 <= k <= M，得到 k={k}, M={rho.M}")
    rho.validate_state(settings.tol_num)
    d, M = rho.d, rho.M
    approx = apply(umeasprep_channel(d, M, k), rho)
    marginal = partial_trace_sym(rho, k)
    certificate = DeFinettiCertificate(
        k=k,
        distance=trace_norm(approx.matrix - marginal.matrix),
        bound=estimation_bound(d, M, k),
        dimension_used=d,
        tolerance=settings.tol_num,
    )
    return approx, _certify(certificate, "definetti-state")


@dataclass(frozen=True, eq=False)
class PurifiedSymState:
    """(K^{⊗M})_+ 中的纯化，K = H ⊗ H'，振幅按 (d^2, M) 的占据数基排列"""

    d: int
    M: int
    amplitudes: np.ndarray

    def full_vector(self) -> np.ndarray:
        """K^{⊗M} 中的完整向量，成对因子的编号为 x*d + y"""
        return embed_isometry(self.d * self.d, self.M) @ self.amplitudes

    def marginal(self) -> np.ndarray:
        """求掉每一对的第二个因子，得到 H^{⊗M} 上的态"""
        d, M = self.d, self.M
        tensor = self.full_vector().reshape((d, d) * M)
        axes = [2 * i for i in range(M)] + [2 * i + 1 for i in range(M)]
        X = tensor.transpose(axes).reshape(d ** M, d ** M)
        return X @ X.conj().T

    def as_operator(self) -> SymOperator:
        return SymOperator.pure(self.d * self.d, self.M, self.amplitudes)


def _validate_full_state(rho: np.ndarray, d: int, M: int, tol: float):
    side = d ** M
    if rho.shape != (side, side):
        raise ArgumentError(f"矩阵形状 {rho.shape} 与 d^M = {side} 不符")
    if np.abs(rho - rho.conj().T).max() > tol:
        raise ValidationError("rho 不是厄米的", invariant="state-hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValidationError("rho 的迹不为 1", invariant="state-trace")
    if np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() < -tol:
        raise ValidationError("rho 不是半正定的", invariant="state-psd")


def purify_perm_invariant(rho: np.ndarray, d: int, M: int) -> PurifiedSymState:
    """
    置换不变态的对称纯化 |Ψ> = (rho^{1/2} ⊗ I)|Ω>

    |Ω> = Σ_i |i>|i> 使成对置换下的不变性自动成立；这里仍逐个相邻对换检查，
    然后把向量投影到 (K^{⊗M})_+ 的占据数基上并检查投影残差。

    Raises:
        ValidationError: rho 对某个相邻对换不不变（invariant 中给出该对换），
                         或纯化落在对称子空间之外
    """
    tol = get_settings().tol_alg
    rho = np.asarray(rho, dtype=complex)
    _validate_full_state(rho, d, M, get_settings().tol_num)
    for perm in adjacent_transpositions(M):
        if np.abs(permute_operator(rho, d, M, perm) - rho).max() > tol:
            raise ValidationError(f"rho 在对换 {perm} 下不不变", invariant=f"perm-invariance{perm}")

    K = d * d
    check_dense(K, M)
    values, vectors = np.linalg.eigh((rho + rho.conj().T) / 2)
    root = (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.conj().T
    # (x1..xM, y1..yM) -> (x1, y1, x2, y2, ...)
    axes = [i // 2 + (i % 2) * M for i in range(2 * M)]
    vec = root.reshape((d,) * (2 * M)).transpose(axes).reshape(-1)
    for perm in adjacent_transpositions(M):
        if np.abs(permute_vector(vec, K, M, perm) - vec).max() > tol:
            raise ValidationError(f"纯化在成对对换 {perm} 下不不变", invariant="pair-invariance")

    V = embed_isometry(K, M)
    amplitudes = V.conj().T @ vec
    residual = float(np.linalg.norm(vec - V @ amplitudes))
    if residual > tol:
        raise ValidationError(f"纯化不在对称子空间内（残差 {residual:.3e}）", invariant="symmetric-support")
    amplitudes = amplitudes / np.linalg.norm(amplitudes)
    return PurifiedSymState(d, M, amplitudes)


def _trace_tail(rho: np.ndarray, d: int, M: int, k: int) -> np.ndarray:
    """H^{⊗M} 上的算符对后 M-k 个因子求偏迹"""
    tensor = rho.reshape(d ** k, d ** (M - k), d ** k, d ** (M - k))
    return np.einsum('ajbj->ab', tensor)


def definetti_perm_invariant(rho: np.ndarray, d: int, M: int, k: int) -> DeFinettiCertificate:
    """
    置换不变态（不一定支撑在对称子空间上）的 de Finetti 证书

    纯化后在基维数 d^2 上构造 UMeasPrep_{M,k}，再求掉纯化因子，
    与 rho 的 k 粒子边缘比较；上界为 2k(d^2+k-1)/(M+d^2)。
    """
    if not 1 <= k <= M:
        raise ArgumentError(f"需要 1 <= k <= M，得到 k={k}, M={M}")
    settings = get_settings()
    purified = purify_perm_invariant(rho, d, M)
    K = d * d
    approx = apply(umeasprep_channel(K, M, k), purified.as_operator())
    approx_k = apply(pair_trace_channel(d, k), approx).matrix
    marginal = _trace_tail(np.asarray(rho, dtype=complex), d, M, k)
    certificate = DeFinettiCertificate(
        k=k,
        distance=trace_norm(approx_k - marginal),
        bound=estimation_bound(K, M, k),
        dimension_used=K,
        tolerance=settings.tol_num,
    )
    return _certify(certificate, "definetti-perm-invariant")


def broadcast_approx(E: SymChannel, k: int, tol: Optional[float] = None,
                     seed: Optional[int] = 0) -> Tuple[SymChannel, DeFinettiCertificate]:
    """
    输出在对称子空间内的广播信道的 de Finetti 逼近

    Ẽ_k = UMeasPrep_{M,k} ∘ E 与 E_k = Tr_{M-k} ∘ E 的菱形距离由 SDP 上界给出，
    上界为 min(4(1 - sqrt(d_+^{(M-k)}/d_+^{(M)})), 2kd/M)。
    """
    M, d = E.copies_out, E.d
    if not 1 <= k <= M:
        raise ArgumentError(f"需要 1 <= k <= M，得到 k={k}, M={M}")
    settings = get_settings()
    approx = compose(umeasprep_channel(d, M, k), E)
    restricted = compose(trace_channel(d, M, k), E)
    result = diamond_distance(approx, restricted, tol=tol, seed=seed)
    certificate = DeFinettiCertificate(
        k=k,
        distance=result.upper,
        bound=broadcast_bound(d, M, k),
        dimension_used=d,
        norm="diamond",
        tolerance=settings.tol_sdp if tol is None else tol,
    )
    logger.debug("broadcast_approx(d=%d, M=%d, k=%d)：%.10f <= %.10f",
                 d, M, k, certificate.distance, certificate.bound)
    return approx, _certify(certificate, "broadcast-bound")


def dilation_channel(V: np.ndarray, d: int, M: int, d_env: int = 1) -> SymChannel:
    """
    由膨胀 V: H_in -> (K^{⊗M})_+ ⊗ H_env 得到 F = Tr_env(V · V†)，F 的输出在 (K^{⊗M})_+

    V 的行按 (K^{⊗M} 的计算基, env) 排列，成对因子编号为 x*d + y。

    Raises:
        ValidationError: V 不是等距，或其像不在 (K^{⊗M})_+ ⊗ H_env 内
    """
    tol = get_settings().tol_alg
    K = d * d
    V = np.asarray(V, dtype=complex)
    if V.shape[0] != K ** M * d_env:
        raise ArgumentError(f"V 的行数 {V.shape[0]} 与 (d^2)^M * d_env = {K ** M * d_env} 不符")
    d_in = V.shape[1]
    isometry_residual = float(np.abs(V.conj().T @ V - np.eye(d_in)).max())
    if isometry_residual > tol:
        raise ValidationError(f"V†V 偏离单位阵 {isometry_residual:.3e}", invariant="isometry")
    emb = embed_isometry(K, M)
    V3 = V.reshape(K ** M, d_env, d_in)
    W = np.einsum('xp,xei->pei', emb.conj(), V3)
    support_residual = float(np.abs(np.einsum('xp,pei->xei', emb, W) - V3).max())
    if support_residual > tol:
        raise ValidationError(f"V 的像不在对称子空间内（残差 {support_residual:.3e}）",
                              invariant="symmetric-support")
    choi4 = np.einsum('pei,qej->piqj', W, W.conj())
    side = choi4.shape[0] * d_in
    return SymChannel(K, 1, M, choi4.reshape(side, side), d_in)


def broadcast_approx_general(V: np.ndarray, d: int, M: int, k: int, d_env: int = 1,
                             tol: Optional[float] = None,
                             seed: Optional[int] = 0) -> DeFinettiCertificate:
    """
    置换不变广播信道的 de Finetti 证书（协变膨胀由调用方给出）

    先在基维数 d^2 上对 F 做 broadcast_approx，再对两侧同时求掉纯化因子
    （偏迹不增大范数），得到 E 层面的距离；上界取 d^2 版本。
    """
    F = dilation_channel(V, d, M, d_env)
    settings = get_settings()
    approx, lifted = broadcast_approx(F, k, tol=tol, seed=seed)
    reduce_pairs = pair_trace_channel(d, k)
    restricted = compose(trace_channel(d * d, M, k), F)
    result = diamond_distance(compose(reduce_pairs, approx), compose(reduce_pairs, restricted),
                              tol=tol, seed=seed)
    certificate = DeFinettiCertificate(
        k=k,
        distance=min(result.upper, lifted.distance),
        bound=lifted.bound,
        dimension_used=d * d,
        norm="diamond",
        tolerance=settings.tol_sdp if tol is None else tol,
    )
    logger.debug("broadcast_approx_general：E 层面 %.10f，K 层面 %.10f", result.upper, lifted.distance)
    return _certify(certificate, "broadcast-general-bound")


def symmetric_swap_dilation(d: int) -> np.ndarray:
    """
    两接收方对称化信道 rho -> (rho + S rho S)/2 的协变膨胀（H_in = H ⊗ H）

    V|ψ> = (|ψ>_{x1 x2}|0>_{y1}|1>_{y2} + S|ψ>_{x1 x2}|1>_{y1}|0>_{y2}) / sqrt(2)，
    环境平凡。需要 d >= 2。
    """
    if d < 2:
        raise ArgumentError(f"需要 d >= 2，得到 d={d}")
    V = np.zeros((d, d, d, d, d * d), dtype=complex)   # (x1, y1, x2, y2, input)
    for x1 in range(d):
        for x2 in range(d):
            V[x1, 0, x2, 1, x1 * d + x2] += 1 / math.sqrt(2)
            V[x1, 1, x2, 0, x2 * d + x1] += 1 / math.sqrt(2)
    return V.reshape(d ** 4, d * d)


def uclon_single_copy_fidelity(d: int, N: int, M: int) -> float:
    """通过 uclon_channel 数值计算 N -> M 克隆的单拷贝保真度"""
    e0 = np.zeros(d)
    e0[0] = 1.0
    state = SymOperator.pure(d, N, coherent_amplitudes(e0, N))
    single = partial_trace_sym(apply(uclon_channel(d, N, M), state), 1)
    a = coherent_amplitudes(e0, 1)
    return float(np.real(a.conj() @ single.matrix @ a))


def cloning_estimation_gap(d: int, N: int, M_range: Iterable[int],
                           validate_upto: int = 6) -> Iterator[Tuple[SweepEventType, Dict[str, object]]]:
    """
    克隆保真度与估计保真度之差

    每个 M 产生一行 {M, F_clon, F_est, gap, bound, bound_d2}，gap = F_clon[N->M] - F_est[N]，
    bound = 2d/M，bound_d2 = 2d^2/M。M <= validate_upto 时用 uclon_channel 交叉检验闭式。
    gap 不随 M 单调减小时产生 FLAG。

    Raises:
        BoundViolationError: gap 不在 [0, bound] 内
        ValidationError: 闭式与信道计算不一致
    """
    Ms = list(M_range)
    if not Ms:
        raise ArgumentError("M 的范围为空")
    if min(Ms) < N:
        raise ArgumentError(f"需要 M >= N，得到 M={min(Ms)}, N={N}")
    tol = get_settings().tol_alg
    f_est = fidelity_est(d, N, 1)
    previous, flags = None, 0
    for M in Ms:
        f_clon = fidelity_clon(d, N, M)
        if M <= validate_upto:
            numeric = uclon_single_copy_fidelity(d, N, M)
            if abs(numeric - float(f_clon)) > tol:
                raise ValidationError(f"M={M}：信道保真度 {numeric!r} 与闭式 {float(f_clon)!r} 不符",
                                      invariant="cloning-fidelity")
        gap = f_clon - f_est
        bound = Fraction(2 * d, M)
        if not 0 <= gap <= bound:
            raise BoundViolationError(f"M={M}：gap = {gap} 不在 [0, {bound}] 内", invariant="gap-bound")
        row = {"d": d, "N": N, "M": M, "F_clon": float(f_clon), "F_est": float(f_est),
               "gap": float(gap), "bound": float(bound), "bound_d2": 2 * d * d / M}
        yield SweepEventType.ROW, row
        if previous is not None and gap > previous:
            flags += 1
            logger.warning("gap 在 M=%d 处增大", M)
            yield SweepEventType.FLAG, {"invariant": "gap-monotone", "M": M, "value": float(gap)}
        previous = gap
    yield SweepEventType.SUMMARY, {"command": "clonegap", "d": d, "N": N, "rows": len(Ms),
                                   "flags": flags, "passed": True}


__all__ = [
    'DeFinettiCertificate', 'estimation_bound', 'broadcast_bound', 'definetti_mixture_state',
    'definetti_state', 'PurifiedSymState', 'purify_perm_invariant', 'definetti_perm_invariant',
    'broadcast_approx', 'dilation_channel', 'broadcast_approx_general', 'symmetric_swap_dilation',
    'uclon_single_copy_fidelity', 'cloning_estimation_gap',
]
