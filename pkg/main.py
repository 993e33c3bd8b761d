"""
symclone 主程序

不带参数时演示一个完整的计算流程；带参数时转交命令行入口（见 src/cli.py）
"""

import sys

from src.channels import trace_channel, umeasprep_channel
from src.cli import main as cli_main
from src.combinat import analytic_bounds
from src.diamond import diamond_distance


def main():
    print("🚀 对称子空间信道演示")
    print("=" * 50)

    d, k = 2, 1
    print(f"📥 UMeasPrep_(M,{k}) 与 Tr_(M-{k}) 的菱形距离，d = {d}")
    print("-" * 50)
    for M in range(1, 6):
        result = diamond_distance(umeasprep_channel(d, M, k), trace_channel(d, M, k))
        report = analytic_bounds(d, M, k)
        print(f"  M={M}: [{result.lower:.6f}, {result.upper:.6f}]  解析上界 {report.min_estimation_bound:.6f}")

    print("\n✅ 计算完成!")


if __name__ == "__main__":
    if len(sys.argv) > 1:
        sys.exit(cli_main(sys.argv[1:]))
    main()
