"""
菱形范数（完全有界迹范数）

对保厄米映射 Δ，‖Δ‖_⋄ = sup_Ψ ‖(I_A ⊗ Δ)(|Ψ><Ψ|)‖_1，辅助系统维数取输入维数。
两侧同时计算：

- 下界：see-saw 交替优化见证态 Ψ 与对偶酉矩阵，目标单调不减
- 上界：标准 SDP（cvxpy 建模），对偶变量在 numpy 中修复到严格可行后重新求值，
  与原问题的最优值之差作为证书的对偶间隙
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import cvxpy as cp
import numpy as np
from scipy.linalg import polar, sqrtm

from src.channels import HermitianMap, SymChannel, trace_channel, umeasprep_channel
from src.combinat import BoundReport, analytic_bounds
from src.common.errors import ArgumentError, BoundViolationError, ResourceGuardError, SolverError
from src.common.settings import get_settings
from src.common.sweep_events import SweepEventType
from src.symspace import haar_state

logger = logging.getLogger(__name__)

FALLBACK_SOLVER = "SCS"


def trace_norm(A: np.ndarray) -> float:
    """奇异值之和"""
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, ord='nuc'))


def _require_hermitian(D: HermitianMap):
    tol = get_settings().tol_num
    residual = D.hermitian_residual()
    if residual > tol:
        raise ArgumentError(f"Choi 矩阵不是厄米的（残差 {residual:.3e}）")


def choi_lower_bound(D: HermitianMap) -> float:
    """最大纠缠见证给出的下界 ‖J(Δ)‖_1 / 输入维数"""
    return trace_norm(D.choi) / D.in_dim


def _output_operator(D: HermitianMap, W: np.ndarray) -> np.ndarray:
    """(I_A ⊗ Δ)(|Ψ><Ψ|)，Ψ 的系数矩阵为 W[a, i]；结果按 (out, anc) 排列"""
    lifted = np.kron(np.eye(D.out_dim), W)
    return lifted @ D.choi @ lifted.conj().T


def witness_value(D: HermitianMap, witness: np.ndarray) -> float:
    """见证态 witness（辅助系统 ⊗ 输入，单位向量）对应的输出迹范数"""
    n = D.in_dim
    W = np.asarray(witness, dtype=complex).reshape(n, n)
    return trace_norm(_output_operator(D, W))


def witness_from_state(rho: np.ndarray) -> np.ndarray:
    """输入态 rho 的标准纯化 Σ (√rho)^T 的系数，约化到输入上恰为 rho"""
    root = sqrtm(rho)
    W = np.asarray(root).T
    return (W / np.linalg.norm(W)).reshape(-1)


def _seesaw_run(D: HermitianMap, W: np.ndarray, iters: int, tol: float) -> Tuple[float, np.ndarray, List[float]]:
    n, out = D.in_dim, D.out_dim
    J4 = D.choi4
    history = []
    value = trace_norm(_output_operator(D, W))
    history.append(value)
    for _ in range(iters):
        u, _ = polar(_output_operator(D, W))
        U4 = u.conj().T.reshape(out, n, out, n)
        K = np.einsum('pboa,oipj->bjai', U4, J4, optimize=True).reshape(n * n, n * n)
        K = (K + K.conj().T) / 2
        _, vectors = np.linalg.eigh(K)
        W_next = vectors[:, -1].reshape(n, n)
        next_value = trace_norm(_output_operator(D, W_next))
        if next_value < value:
            break
        W, improvement, value = W_next, next_value - value, next_value
        history.append(value)
        if improvement <= tol * max(1.0, value):
            break
    return value, W.reshape(-1), history


def seesaw_lower(D: HermitianMap, restarts: int = 2, iters: int = 200,
                 seed: Optional[int] = None,
                 starts: Sequence[np.ndarray] = ()) -> Tuple[float, np.ndarray]:
    """
    see-saw 下界

    固定 Ψ 时，对偶酉矩阵取输出算符极分解的酉部分；固定酉矩阵时，Ψ 取拉回的
    厄米型的最大本征向量。初始点为最大纠缠态、starts 中的见证以及 restarts 个
    Haar 随机见证（由 seed 决定）。

    Returns:
        (value, witness)：最佳值及达到它的单位见证向量
    """
    _require_hermitian(D)
    n = D.in_dim
    rng = np.random.default_rng(seed)
    initial = [np.eye(n, dtype=complex).reshape(-1) / np.sqrt(n)]
    initial.extend(np.asarray(w, dtype=complex).reshape(-1) for w in starts)
    initial.extend(haar_state(n * n, rng) for _ in range(restarts))
    tol = get_settings().tol_num
    best_value, best_witness = -1.0, initial[0]
    for i, w in enumerate(initial):
        value, witness, history = _seesaw_run(D, w.reshape(n, n), iters, tol)
        logger.debug("see-saw 起点 %d：%d 步，%.10f -> %.10f", i, len(history), history[0], value)
        if value > best_value:
            best_value, best_witness = value, witness
    return max(best_value, 0.0), best_witness


@dataclass(frozen=True)
class SdpCertificate:
    """SDP 上界的证书"""

    upper: float
    primal: float
    gap: float
    solver: str
    status: str
    shift: float
    rho0: Optional[np.ndarray] = None
    rho1: Optional[np.ndarray] = None


def check_sdp_size(D: HermitianMap):
    """Choi 边长超过 max_sdp_side 时抛出 ResourceGuardError"""
    side = D.choi.shape[0]
    limit = get_settings().max_sdp_side
    if side > limit:
        raise ResourceGuardError(
            f"SDP 中 Choi 矩阵边长 {side} 超过上限 {limit}（可通过 SYMCLONE_MAX_SDP 调整）")


def _solve(problem: cp.Problem, solver: str) -> str:
    """先用配置的求解器，失败时退回 SCS；返回实际使用的求解器名称"""
    candidates = [solver] + ([FALLBACK_SOLVER] if solver != FALLBACK_SOLVER else [])
    last_error = None
    for name in candidates:
        try:
            problem.solve(solver=name)
        except (cp.error.SolverError, ValueError) as exc:
            logger.info("求解器 %s 失败：%s", name, exc)
            last_error = exc
            continue
        if problem.status == cp.OPTIMAL:
            return name
        logger.info("求解器 %s 返回状态 %s", name, problem.status)
        last_error = problem.status
    raise SolverError(f"SDP 未能求解到最优（最后一次：{last_error}）")


def _dual_problem(J: np.ndarray, out: int, n: int):
    side = out * n
    Z = cp.Variable((2 * side, 2 * side), hermitian=True)
    t0, t1 = cp.Variable(), cp.Variable()
    Y0, Y1 = Z[:side, :side], Z[side:, side:]
    constraints = [
        Z >> 0,
        Z[:side, side:] == -J,
        cp.partial_trace(Y0, [out, n], axis=0) << t0 * np.eye(n),
        cp.partial_trace(Y1, [out, n], axis=0) << t1 * np.eye(n),
    ]
    return cp.Problem(cp.Minimize((t0 + t1) / 2), constraints), Z


def _primal_problem(J: np.ndarray, out: int, n: int):
    side = out * n
    Z = cp.Variable((2 * side, 2 * side), hermitian=True)
    rho0 = cp.Variable((n, n), hermitian=True)
    rho1 = cp.Variable((n, n), hermitian=True)
    eye_out = np.eye(out)
    constraints = [
        Z >> 0, rho0 >> 0, rho1 >> 0,
        cp.real(cp.trace(rho0)) == 1, cp.real(cp.trace(rho1)) == 1,
        Z[:side, :side] == cp.kron(eye_out, rho0),
        Z[side:, side:] == cp.kron(eye_out, rho1),
    ]
    objective = cp.Maximize(cp.real(cp.trace(J.conj().T @ Z[:side, side:])))
    return cp.Problem(objective, constraints), rho0, rho1


def _certified_upper(block: np.ndarray, J: np.ndarray, out: int, n: int) -> Tuple[float, float]:
    """
    把对偶解修复为严格可行：厄米化，块矩阵最小本征值为负时整体平移，
    再以非对角块固定为 -J 重新计算目标值。
    """
    side = out * n
    block = (block + block.conj().T) / 2
    block[:side, side:] = -J
    block[side:, :side] = -J.conj().T
    shift = max(0.0, -float(np.linalg.eigvalsh(block).min()))
    Y0 = block[:side, :side] + shift * np.eye(side)
    Y1 = block[side:, side:] + shift * np.eye(side)

    def marginal_norm(Y):
        reduced = np.einsum('aman->mn', Y.reshape(out, n, out, n))
        return float(np.linalg.eigvalsh((reduced + reduced.conj().T) / 2).max())
    return (marginal_norm(Y0) + marginal_norm(Y1)) / 2, shift


def sdp_upper(D: HermitianMap, tol: Optional[float] = None) -> Tuple[float, SdpCertificate]:
    """
    SDP 上界

    对偶问题：min (‖Tr_out Y0‖_∞ + ‖Tr_out Y1‖_∞)/2，[[Y0, -J], [-J†, Y1]] ⪰ 0。
    原问题：max Re Tr(J† X)，[[I ⊗ rho0, X], [X†, I ⊗ rho1]] ⪰ 0。
    上界取修复后的严格可行对偶解的目标值，对偶间隙 = 上界 - 原问题值。

    Raises:
        ResourceGuardError: Choi 边长超过 max_sdp_side
        SolverError: 求解失败或对偶间隙超过 tol
    """
    _require_hermitian(D)
    check_sdp_size(D)
    settings = get_settings()
    tol = settings.tol_sdp if tol is None else tol
    J = (D.choi + D.choi.conj().T) / 2
    out, n = D.out_dim, D.in_dim
    if not np.any(np.abs(J) > settings.tol_alg):
        certificate = SdpCertificate(0.0, 0.0, 0.0, "trivial", cp.OPTIMAL, 0.0)
        return 0.0, certificate

    dual, Z = _dual_problem(J, out, n)
    solver = _solve(dual, settings.sdp_solver)
    upper, shift = _certified_upper(np.array(Z.value, dtype=complex), J, out, n)

    primal, rho0, rho1 = _primal_problem(J, out, n)
    _solve(primal, settings.sdp_solver)
    primal_value = float(primal.value)
    gap = upper - primal_value
    logger.debug("SDP(%s)：上界 %.10f，原问题 %.10f，间隙 %.2e，平移 %.2e",
                 solver, upper, primal_value, gap, shift)
    if gap > tol:
        raise SolverError(f"对偶间隙 {gap:.3e} 超过容差 {tol:.1e}")
    certificate = SdpCertificate(upper, primal_value, gap, solver, dual.status, shift,
                                 np.array(rho0.value), np.array(rho1.value))
    return upper, certificate


@dataclass(frozen=True)
class DiamondResult:
    """菱形范数的双侧估计"""

    lower: float
    upper: float
    witness: np.ndarray
    certificate: SdpCertificate

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    @property
    def sdp_gap(self) -> float:
        return self.certificate.gap

    def as_row(self) -> Dict[str, float]:
        return {"lower": self.lower, "upper": self.upper, "gap": self.gap, "sdp_gap": self.sdp_gap}


def diamond_norm(D: HermitianMap, tol: Optional[float] = None, restarts: int = 2,
                 iters: int = 200, seed: Optional[int] = 0) -> DiamondResult:
    """
    同时运行 SDP 上界与 see-saw 下界

    see-saw 额外以原问题最优输入态 rho0、rho1、它们的转置与平均值为起点。

    Raises:
        SolverError: 下界超过上界加容差
    """
    settings = get_settings()
    tol = settings.tol_sdp if tol is None else tol
    upper, certificate = sdp_upper(D, tol)
    starts = []
    if certificate.rho0 is not None:
        rho0, rho1 = certificate.rho0, certificate.rho1
        for rho in (rho0, rho1, rho0.T, rho1.T, (rho0 + rho1) / 2):
            rho = (rho + rho.conj().T) / 2
            starts.append(witness_from_state(_clip_state(rho)))
    lower, witness = seesaw_lower(D, restarts=restarts, iters=iters, seed=seed, starts=starts)
    if lower > upper + tol:
        raise SolverError(f"下界 {lower:.10f} 超过上界 {upper:.10f}")
    lower = min(lower, upper)
    if upper - lower > settings.agreement_gate:
        logger.warning("see-saw 与 SDP 相差 %.3e，超过 %.1e", upper - lower, settings.agreement_gate)
    return DiamondResult(lower, upper, witness, certificate)


def _clip_state(rho: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eigh(rho)
    values = np.clip(values, 0.0, None)
    rho = (vectors * values) @ vectors.conj().T
    return rho / np.trace(rho).real


def diamond_distance(A: SymChannel, B: SymChannel, tol: Optional[float] = None,
                     restarts: int = 2, iters: int = 200, seed: Optional[int] = 0) -> DiamondResult:
    """‖A - B‖_⋄ 的双侧估计"""
    return diamond_norm(A - B, tol=tol, restarts=restarts, iters=iters, seed=seed)


def applicable_bound(report: BoundReport) -> float:
    """估计信道与偏迹信道距离的最小可用解析上界（含证明链中的 2(1-p_k)）"""
    bound = report.min_estimation_bound
    if report.proof_bound_estimation is not None:
        bound = min(bound, float(report.proof_bound_estimation))
    return bound


def _comparison_row(d: int, M: int, k: int, exact: bool, seed: Optional[int]) -> Dict[str, object]:
    report = analytic_bounds(d, M, k)
    row = report.as_row()
    if not exact:
        return row
    result = diamond_distance(umeasprep_channel(d, M, k), trace_channel(d, M, k), seed=seed)
    row.update(result.as_row())
    bound = applicable_bound(report)
    if result.upper > bound + get_settings().tol_sdp:
        raise BoundViolationError(
            f"d={d}, M={M}, k={k}：菱形距离 {result.upper:.10f} 超过解析上界 {bound:.10f}",
            invariant="estimation-bound")
    return row


def bound_comparison_table(d: int, M_range: Iterable[int], k: int, exact: bool = True,
                           workers: Optional[int] = None,
                           seed: Optional[int] = 0) -> Iterator[Tuple[SweepEventType, Dict[str, object]]]:
    """
    计算距离与解析上界的对照表

    逐个 M 产生 (ROW, row)；计算所得距离随 M 增大而增加时产生 (FLAG, ...)；
    最后产生 (SUMMARY, ...)。各 M 的计算可在线程池中并行，输出顺序始终按 M。
    只列解析界时允许 M < k，此时第二组估计界留空，clone_bound 有意义。

    Raises:
        ArgumentError: M 的范围为空，或 exact 时含有 M < k
        BoundViolationError: 计算所得距离超过解析上界
    """
    Ms = list(M_range)
    if not Ms:
        raise ArgumentError("M 的范围为空")
    if exact and min(Ms) < k:
        raise ArgumentError(f"计算距离需要 M >= k，得到 M={min(Ms)}, k={k}")
    workers = workers or get_settings().workers
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = pool.map(lambda M: _comparison_row(d, M, k, exact, seed), Ms)
        previous = None
        flags = 0
        for row in rows:
            yield SweepEventType.ROW, row
            if exact:
                if previous is not None and row["upper"] > previous["upper"] + get_settings().tol_sdp:
                    flags += 1
                    logger.warning("距离在 M=%d 处增大：%.10f > %.10f", row["M"], row["upper"], previous["upper"])
                    yield SweepEventType.FLAG, {"invariant": "monotone-in-M", "M": row["M"],
                                                "value": row["upper"], "previous": previous["upper"]}
                previous = row
    yield SweepEventType.SUMMARY, {"command": "bounds", "d": d, "k": k, "rows": len(Ms),
                                   "exact": exact, "flags": flags, "passed": True}


__all__ = [
    'trace_norm', 'check_sdp_size', 'choi_lower_bound', 'witness_value', 'witness_from_state',
    'seesaw_lower', 'SdpCertificate', 'sdp_upper', 'DiamondResult', 'diamond_norm',
    'diamond_distance', 'applicable_bound', 'bound_comparison_table',
]
