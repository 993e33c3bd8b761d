"""
对称子空间的精确组合学

所有量都用任意精度整数 / Fraction 计算，只在报告边界处转为浮点数。

提供：
- sym_dim: 对称子空间维数 d_+^{(M)} = C(d+M-1, M)
- ps_distribution: 随机丢失 + 克隆分解中的权重 p_s
- fidelity_est: 最优估计保真度 F_{M,k}
- analytic_bounds: 三个解析菱形范数上界
- identity_suite: 分解权重归一化所依赖的组合恒等式（精确，无容差）
- 证明链中的中间不等式与相干输入下分解式的精确检验
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from src.common.errors import ArgumentError, InvalidDimensionError, ValidationError

Binomial = Callable[[int, int], int]


def binom(n: int, r: int) -> int:
    """广义二项式系数：r < 0 或 r > n 时为 0"""
    if r < 0 or n < 0 or r > n:
        return 0
    return math.comb(n, r)


def _require(condition: bool, message: str, error=ArgumentError):
    if not condition:
        raise error(message)


def sym_dim(d: int, M: int) -> int:
    """
    对称子空间 (H^{⊗M})_+ 的维数

    Args:
        d: 单粒子维数，d >= 1
        M: 拷贝数，M >= 0

    Returns:
        int: C(d+M-1, M)
    """
    _require(d >= 1, f"维数 d 必须 >= 1，得到 {d}", InvalidDimensionError)
    _require(M >= 0, f"拷贝数 M 必须 >= 0，得到 {M}", InvalidDimensionError)
    return math.comb(d + M - 1, M)


def multinomial(counts: Sequence[int]) -> int:
    """多项式系数 (Σn)! / Π n_i!"""
    result, total = 1, 0
    for n in counts:
        total += n
        result *= math.comb(total, n)
    return result


@dataclass(frozen=True)
class ProbabilityVector:
    """精确的概率向量，entries[s] 对应 s = 0..len-1"""

    entries: Tuple[Fraction, ...]

    def __post_init__(self):
        if any(p < 0 for p in self.entries):
            raise ArgumentError("概率分量必须非负")
        if sum(self.entries, Fraction(0)) != 1:
            raise ArgumentError("概率分量之和必须精确为 1")

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, s: int) -> Fraction:
        return self.entries[s]

    def __iter__(self):
        return iter(self.entries)

    def as_floats(self) -> List[float]:
        return [float(p) for p in self.entries]


def ps_distribution(d: int, M: int, k: int) -> ProbabilityVector:
    """
    分解 UMeasPrep_{M,k} = Σ_s p_s UClon_{s,k} ∘ Tr_{M-s} 中的权重

    p_s = C(M,s) C(d+k-1, k-s) / C(d+M+k-1, k)，s = 0..min(k, M)。
    归一化由 Chu-Vandermonde 卷积保证，这里用精确有理数检查。
    """
    _require(d >= 1 and M >= 1 and k >= 1, f"需要 d, M, k >= 1，得到 ({d}, {M}, {k})")
    denominator = math.comb(d + M + k - 1, k)
    entries = tuple(Fraction(binom(M, s) * binom(d + k - 1, k - s), denominator)
                    for s in range(min(k, M) + 1))
    return ProbabilityVector(entries)


def fidelity_est(d: int, M: int, k: int) -> Fraction:
    """最优估计（M 份输入、k 份输出）的保真度 F_{M,k} = d_+^{(M)} / d_+^{(M+k)}"""
    _require(k >= 0, f"k 必须 >= 0，得到 {k}")
    return Fraction(sym_dim(d, M), sym_dim(d, M + k))


def fidelity_clon(d: int, N: int, M: int) -> Fraction:
    """最优通用克隆 N -> M 的单拷贝保真度 N/M + (M-N)(N+1)/(M(N+d))"""
    _require(1 <= N <= M, f"需要 1 <= N <= M，得到 N={N}, M={M}")
    return Fraction(N, M) + Fraction((M - N) * (N + 1), M * (N + d))


@dataclass(frozen=True)
class BoundReport:
    """(d, M, k) 下的解析上界"""

    d: int
    M: int
    k: int
    bound_estimation_1: Fraction
    bound_estimation_2_exact: Optional[float]
    bound_estimation_2_linear: Optional[Fraction]
    bound_cloning: Fraction
    min_estimation_bound: float
    bound_1_regime: bool
    estimation_2_defined: bool
    proof_bound_estimation: Optional[Fraction] = None
    proof_bound_cloning: Optional[Fraction] = None

    def as_row(self) -> Dict[str, object]:
        """转换为表格行（浮点数）"""
        def f(x):
            return None if x is None else float(x)
        return {
            "d": self.d, "M": self.M, "k": self.k,
            "bound1": f(self.bound_estimation_1),
            "bound2_exact": f(self.bound_estimation_2_exact),
            "bound2_linear": f(self.bound_estimation_2_linear),
            "clone_bound": f(self.bound_cloning),
            "min": self.min_estimation_bound,
        }


def analytic_bounds(d: int, M: int, k: int) -> BoundReport:
    """
    计算三个解析上界

    - bound_estimation_1 = 2k(d+k-1)/(M+d)
    - bound_estimation_2_exact = 4(1 - sqrt(d_+^{(M-k)}/d_+^{(M)}))，仅 k <= M
    - bound_estimation_2_linear = 2kd/M，仅 k <= M
    - bound_cloning = 2M(d+M-1)/(k+d)

    k > M 时第二组界不存在，estimation_2_defined 为 False。
    """
    _require(d >= 1 and M >= 1 and k >= 1, f"需要 d, M, k >= 1，得到 ({d}, {M}, {k})")
    bound1 = Fraction(2 * k * (d + k - 1), M + d)
    bound_clone = Fraction(2 * M * (d + M - 1), k + d)
    ps = ps_distribution(d, M, k)
    defined = k <= M
    if defined:
        ratio = Fraction(sym_dim(d, M - k), sym_dim(d, M))
        bound2_exact = 4.0 * (1.0 - math.sqrt(ratio))
        bound2_linear = Fraction(2 * k * d, M)
        minimum = min(float(bound1), bound2_exact)
        proof_estimation = 2 * (1 - ps[k])
    else:
        bound2_exact, bound2_linear, proof_estimation = None, None, None
        minimum = float(bound1)
    proof_cloning = 2 * (1 - ps[M]) if M <= k else None
    return BoundReport(
        d=d, M=M, k=k,
        bound_estimation_1=bound1,
        bound_estimation_2_exact=bound2_exact,
        bound_estimation_2_linear=bound2_linear,
        bound_cloning=bound_clone,
        min_estimation_bound=minimum,
        bound_1_regime=M * (k - 1) <= d * d,
        estimation_2_defined=defined,
        proof_bound_estimation=proof_estimation,
        proof_bound_cloning=proof_cloning,
    )


def _falling(n: int, m: int) -> int:
    return math.perm(n, m) if 0 <= m <= n else 0


def _check_weight(closed_form: Fraction, weight: Fraction, name: str):
    if closed_form != weight:
        raise ValidationError(f"{name} 的降阶乘闭式 {closed_form} 与分解权重 {weight} 不符",
                              invariant="proof-chain-weight")


def proof_chain_estimation(d: int, M: int, k: int) -> Tuple[Fraction, Fraction, Fraction]:
    """
    收敛到理想估计的证明链（k <= M）

    Returns:
        (p_k, ((M-k+1)/(d+M))^k, 1 - k(d+k-1)/(d+M))，依次不增
    """
    _require(1 <= k <= M, f"需要 1 <= k <= M，得到 k={k}, M={M}")
    p_k = Fraction(_falling(M, k), _falling(d + M + k - 1, k))
    _check_weight(p_k, ps_distribution(d, M, k)[k], "p_k")
    middle = Fraction(M - k + 1, d + M) ** k
    last = 1 - Fraction(k * (d + k - 1), d + M)
    return p_k, middle, last


def proof_chain_cloning(d: int, M: int, k: int) -> Tuple[Fraction, Fraction, Fraction]:
    """
    收敛到通用克隆的证明链（M <= k）

    Returns:
        (p_M, ((k-M+1)/(d+k))^M, 1 - M(d+M-1)/(d+k))，依次不增
    """
    _require(1 <= M <= k, f"需要 1 <= M <= k，得到 M={M}, k={k}")
    p_M = Fraction(_falling(k, M), _falling(d + M + k - 1, M))
    _check_weight(p_M, ps_distribution(d, M, k)[M], "p_M")
    middle = Fraction(k - M + 1, d + k) ** M
    last = 1 - Fraction(M * (d + M - 1), d + k)
    return p_M, middle, last


def dimension_ratio_chain(d: int, M: int, k: int) -> Tuple[Fraction, Fraction, Fraction]:
    """
    线性化第二个界所用的不等式链：
    d_+^{(M-k)}/d_+^{(M)} >= (1-k/M)^d >= 1 - dk/M
    """
    _require(1 <= k <= M, f"需要 1 <= k <= M，得到 k={k}, M={M}")
    ratio = Fraction(sym_dim(d, M - k), sym_dim(d, M))
    return ratio, (1 - Fraction(k, M)) ** d, 1 - Fraction(d * k, M)


@dataclass(frozen=True)
class IdentityReport:
    """identity_suite 的结果；first_failure 为第一个反例（名称与参数）"""

    passed: bool
    checks: int
    first_failure: Optional[Tuple[str, Tuple[int, ...], int, int]] = None


def identity_suite(M_max: int, binomial: Binomial = binom) -> IdentityReport:
    """
    对 0 <= s <= M <= M_max 精确验证分解权重归一化所依赖的组合恒等式

    (a)  β_s = Σ_n (-1)^{s-n} C(s,n) C(M+n,M) = C(M,s)
    (a1) Chu-Vandermonde 展开后的双重和同样等于 C(M,s)
    (a2) Klee 恒等式 Σ_n (-1)^{s-n} C(s,n) C(s+n,l) = C(s,l-s)
    (b)  Klee 之后的中间式 Σ_{l'} C(s,l') C(M-s, M-s-l') = C(M,s)
    (c)  Chu-Vandermonde：C(z+w,N) = Σ_i C(z,i) C(w,N-i)，0 <= z,w,N <= M_max
         （只检验非负整数，复数参数的解析延拓不在范围内）

    Args:
        M_max: 最大拷贝数
        binomial: 二项式系数函数，可注入错误实现做负面测试

    Returns:
        IdentityReport: 是否全部通过、检查次数及第一个反例
    """
    _require(M_max >= 1, f"M_max 必须 >= 1，得到 {M_max}")
    C = binomial
    checks = 0

    def fail(name, args, lhs, rhs):
        return IdentityReport(False, checks, (name, args, lhs, rhs))

    for M in range(M_max + 1):
        for s in range(M + 1):
            target = C(M, s)
            beta = sum((-1) ** (s - n) * C(s, n) * C(M + n, M) for n in range(s + 1))
            checks += 1
            if beta != target:
                return fail("beta", (M, s), beta, target)

            expanded = sum((-1) ** (s - n) * C(s, n) * C(s + n, l) * C(M - s, M - l)
                           for n in range(s + 1) for l in range(M + 1))
            checks += 1
            if expanded != target:
                return fail("beta_expanded", (M, s), expanded, target)

            post_klee = sum(C(s, lp) * C(M - s, M - s - lp) for lp in range(M - s + 1))
            checks += 1
            if post_klee != target:
                return fail("post_klee", (M, s), post_klee, target)

            for l in range(M + 1):
                klee = sum((-1) ** (s - n) * C(s, n) * C(s + n, l) for n in range(s + 1))
                checks += 1
                if klee != C(s, l - s):
                    return fail("klee", (s, l), klee, C(s, l - s))

    for z in range(M_max + 1):
        for w in range(M_max + 1):
            for N in range(M_max + 1):
                lhs = C(z + w, N)
                rhs = sum(C(z, i) * C(w, N - i) for i in range(N + 1))
                checks += 1
                if lhs != rhs:
                    return fail("chu_vandermonde", (z, w, N), lhs, rhs)

    return IdentityReport(True, checks)


def occupation_tuples(d: int, M: int) -> List[Tuple[int, ...]]:
    """d 个非负整数之和为 M 的全部划分，按字典序降序排列"""
    _require(d >= 1, f"维数 d 必须 >= 1，得到 {d}", InvalidDimensionError)
    _require(M >= 0, f"拷贝数 M 必须 >= 0，得到 {M}", InvalidDimensionError)
    if d == 1:
        return [(M,)]
    return [(first,) + rest
            for first in range(M, -1, -1)
            for rest in occupation_tuples(d - 1, M - first)]


def coherent_action_weights(d: int, M: int, k: int) -> List[Fraction]:
    """
    UMeasPrep_{M,k}(|1><1|^{⊗M}) 在占据数基下的对角元（精确）

    weight(n) = (d_+^{(M)}/d_+^{(M+k)}) · C(M+k,k)^{-1} · C(M+n_1, M)，
    n 按 occupation_tuples(d, k) 的顺序排列；输出在该基下是对角的。
    """
    prefactor = fidelity_est(d, M, k) / math.comb(M + k, k)
    return [prefactor * math.comb(M + n[0], M) for n in occupation_tuples(d, k)]


def decomposition_exact(d: int, M: int, k: int) -> Optional[Tuple[Tuple[int, ...], Fraction, Fraction]]:
    """
    在相干输入 |1>^{⊗M} 上精确验证混合分解

    对每个 n ∈ P_{k,d}：
    weight(n) = Σ_s p_s (d_+^{(s)}/d_+^{(k)}) C(n_1,s)/C(k,s)

    Returns:
        None 表示全部相等；否则返回 (n, 左边, 右边)
    """
    ps = ps_distribution(d, M, k)
    d_k = sym_dim(d, k)
    for n, lhs in zip(occupation_tuples(d, k), coherent_action_weights(d, M, k)):
        rhs = sum((ps[s] * Fraction(sym_dim(d, s), d_k) * Fraction(binom(n[0], s), math.comb(k, s))
                   for s in range(len(ps))), Fraction(0))
        if lhs != rhs:
            return n, lhs, rhs
    return None


__all__ = [
    'binom', 'sym_dim', 'multinomial', 'ProbabilityVector', 'ps_distribution',
    'fidelity_est', 'fidelity_clon', 'BoundReport', 'analytic_bounds',
    'proof_chain_estimation', 'proof_chain_cloning', 'dimension_ratio_chain',
    'IdentityReport', 'identity_suite', 'occupation_tuples',
    'coherent_action_weights', 'decomposition_exact',
]
