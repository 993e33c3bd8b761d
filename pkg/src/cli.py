"""
命令行入口

子命令：identities, decompose, bounds, definetti, broadcast, capacity, clonegap。
退出码：0 通过，1 界/不变量被违反，2 用法或解析错误，3 资源保护触发。
"""

import argparse
import contextlib
import logging
import sys
from dataclasses import dataclass
from typing import List, Optional, Sequence

from src.capacity import capacity_bounds, transpose_diamond
from src.channels import decomposition_residual, load_channel, trace_channel
from src.combinat import binom, decomposition_exact, identity_suite, ps_distribution, sym_dim
from src.common.errors import ArgumentError, SymCloneError
from src.common.settings import get_settings, override_settings
from src.definetti import broadcast_approx, cloning_estimation_gap, definetti_state
from src.diamond import bound_comparison_table
from src.emit import CsvWriter, JsonWriter, SvgWriter, dumps, write_sweep
from src.symspace import load_sym_operator

logger = logging.getLogger(__name__)

FORMATS = ("json", "csv", "svg")


@dataclass(frozen=True)
class RunConfig:
    """一次命令行调用的配置"""

    command: str
    d: Optional[int]
    M: Optional[int]
    M_range: Optional[range]
    k: Optional[int]
    d_in: Optional[int]
    N: Optional[int]
    seed: int
    out: Optional[str]
    format: Optional[str]
    exact: bool
    workers: Optional[int]
    path: Optional[str]
    inject_fault: bool


def parse_range(text: str) -> range:
    """'a:b' -> range(a, b+1)，两端包含"""
    try:
        start, stop = (int(part) for part in text.split(":"))
    except ValueError:
        raise ArgumentError(f"--M-range 需要 a:b 形式，得到 {text!r}")
    if start > stop:
        raise ArgumentError(f"--M-range {text} 为空")
    return range(start, stop + 1)


def _positive(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"必须为正数，得到 {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="随机种子")
    common.add_argument("--tol-alg", type=_positive, help="代数容差（默认 1e-10）")
    common.add_argument("--tol-sdp", type=_positive, help="SDP 对偶间隙容差（默认 1e-6）")
    common.add_argument("--out", help="输出文件，默认标准输出")
    common.add_argument("--format", choices=FORMATS, help="输出格式")
    common.add_argument("--workers", type=int, help="扫描线程数")
    common.add_argument("--verbose", "-v", action="store_true", help="输出调试日志")

    parser = argparse.ArgumentParser(prog="symclone", description="对称子空间信道的精确计算工具")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identities", parents=[common], help="精确验证组合恒等式")
    p.add_argument("--M", type=int, default=30, help="最大拷贝数")
    p.add_argument("--inject-fault", action="store_true", help="使用错误的二项式系数（负面测试）")

    p = sub.add_parser("decompose", parents=[common], help="验证测量-制备信道的混合分解")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--k", type=int, required=True)

    p = sub.add_parser("bounds", parents=[common], help="解析上界表（--exact 时附带 SDP 距离）")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--M-range", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--exact", action="store_true")

    p = sub.add_parser("definetti", parents=[common], help="对称态的 de Finetti 证书")
    p.add_argument("path", help="SymOperator JSON 文件")
    p.add_argument("--k", type=int, required=True)

    p = sub.add_parser("broadcast", parents=[common], help="对称广播信道的 de Finetti 证书")
    p.add_argument("path", help="SymChannel JSON 文件")
    p.add_argument("--k", type=int, required=True)

    p = sub.add_parser("capacity", parents=[common], help="量子容量上界")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--din", type=int, help="输入维数，默认为 (H^{⊗M})_+ 的维数")
    p.add_argument("--exact", action="store_true", help="计算恒等广播限制的转置菱形范数")

    p = sub.add_parser("clonegap", parents=[common], help="克隆与估计的保真度差")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--M-range", required=True)
    return parser


def make_config(args: argparse.Namespace) -> RunConfig:
    M_range = parse_range(args.M_range) if getattr(args, "M_range", None) else None
    return RunConfig(
        command=args.command,
        d=getattr(args, "d", None),
        M=getattr(args, "M", None),
        M_range=M_range,
        k=getattr(args, "k", None),
        d_in=getattr(args, "din", None),
        N=getattr(args, "N", None),
        seed=args.seed,
        out=args.out,
        format=args.format,
        exact=getattr(args, "exact", False),
        workers=args.workers,
        path=getattr(args, "path", None),
        inject_fault=getattr(args, "inject_fault", False),
    )


@contextlib.contextmanager
def _output(path: Optional[str]):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            yield handle


def _emit_document(config: RunConfig, document: dict):
    with _output(config.out) as stream:
        stream.write(dumps(document) + "\n")


def _emit_sweep(config: RunConfig, events, default_format: str, y_columns: Sequence[str]):
    fmt = config.format or default_format
    with _output(config.out) as stream:
        if fmt == "csv":
            writer = CsvWriter(stream)
        elif fmt == "json":
            writer = JsonWriter(stream)
        else:
            writer = SvgWriter(stream, x="M", y=y_columns, title=config.command)
        write_sweep(events, writer)
    return writer


def cmd_identities(config: RunConfig) -> int:
    binomial = binom
    if config.inject_fault:
        def binomial(n: int, r: int) -> int:
            return binom(n, r) + (1 if (n, r) == (2, 1) else 0)
    report = identity_suite(config.M, binomial=binomial)
    document = {"command": "identities", "M_max": config.M, "passed": report.passed,
                "checks": report.checks}
    if report.first_failure is not None:
        name, args, lhs, rhs = report.first_failure
        document["first_failure"] = {"identity": name, "args": list(args), "lhs": lhs, "rhs": rhs}
        logger.error("恒等式 %s 在 %s 处失败：%d != %d", name, args, lhs, rhs)
    _emit_document(config, document)
    return 0 if report.passed else 1


def cmd_decompose(config: RunConfig) -> int:
    d, M, k = config.d, config.M, config.k
    tol = get_settings().tol_alg
    ps = ps_distribution(d, M, k)
    residual = decomposition_residual(d, M, k)
    mismatch = decomposition_exact(d, M, k)
    passed = residual < tol and mismatch is None
    document = {
        "command": "decompose", "d": d, "M": M, "k": k,
        "p": [str(p) for p in ps],
        "residual": {"value": residual, "tolerance": tol},
        "exact_coherent_check": mismatch is None,
        "passed": passed,
    }
    _emit_document(config, document)
    return 0 if passed else 1


def cmd_bounds(config: RunConfig) -> int:
    events = bound_comparison_table(config.d, config.M_range, config.k, exact=config.exact,
                                    workers=config.workers, seed=config.seed)
    columns = ("bound1", "bound2_exact", "min") + (("upper",) if config.exact else ())
    _emit_sweep(config, events, "csv", columns)
    return 0


def cmd_definetti(config: RunConfig) -> int:
    rho = load_sym_operator(config.path)
    _, certificate = definetti_state(rho, config.k)
    _emit_document(config, dict(certificate.to_json(), command="definetti"))
    return 0


def cmd_broadcast(config: RunConfig) -> int:
    channel = load_channel(config.path)
    _, certificate = broadcast_approx(channel, config.k, seed=config.seed)
    _emit_document(config, dict(certificate.to_json(), command="broadcast"))
    return 0


def cmd_capacity(config: RunConfig) -> int:
    d, M, k = config.d, config.M, config.k
    d_in = config.d_in or sym_dim(d, M)
    computed = transpose_diamond(trace_channel(d, M, k), seed=config.seed) if config.exact else None
    report = capacity_bounds(d, M, k, d_in, computed)
    _emit_document(config, dict(report.to_json(), command="capacity"))
    if computed is not None and computed > report.transpose_bound_log + get_settings().agreement_gate:
        logger.error("转置菱形范数 %.10f 超过上界 %.10f", computed, report.transpose_bound_log)
        return 1
    return 0


def cmd_clonegap(config: RunConfig) -> int:
    events = cloning_estimation_gap(config.d, config.N, config.M_range)
    _emit_sweep(config, events, "csv", ("gap", "bound"))
    return 0


COMMANDS = {
    "identities": cmd_identities,
    "decompose": cmd_decompose,
    "bounds": cmd_bounds,
    "definetti": cmd_definetti,
    "broadcast": cmd_broadcast,
    "capacity": cmd_capacity,
    "clonegap": cmd_clonegap,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        overrides = {}
        if args.tol_alg is not None:
            overrides["tol_alg"] = args.tol_alg
        if args.tol_sdp is not None:
            overrides["tol_sdp"] = args.tol_sdp
        if args.workers is not None:
            overrides["workers"] = args.workers
        override_settings(**overrides)
        config = make_config(args)
        return COMMANDS[config.command](config)
    except SymCloneError as exc:
        logger.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
