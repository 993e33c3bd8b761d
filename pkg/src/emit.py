"""
扫描结果的写出器

扫描函数产生 (SweepEventType, payload) 事件；写出器通过 handle_event 统一分派，
在 close() 时把内容写入输出流。
"""

import csv
import json
import math
import sys
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from src.common.errors import ArgumentError  # noqa: E402
from src.common.sweep_events import SweepEventType  # noqa: E402


def format_float(x: float) -> str:
    """17 位有效数字；非有限值写为 null"""
    if not math.isfinite(x):
        return "null"
    return f"{x:.17g}"


def dumps(value) -> str:
    """确定性的 JSON 编码：键排序，浮点数固定 17 位有效数字"""
    if value is None or isinstance(value, bool):
        return json.dumps(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        items = sorted((str(k), v) for k, v in value.items())
        return "{" + ", ".join(f"{json.dumps(k, ensure_ascii=False)}: {dumps(v)}" for k, v in items) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in value) + "]"
    if hasattr(value, "item"):
        return dumps(value.item())
    raise TypeError(f"无法编码 {type(value).__name__}")


class RowWriter:
    """写出器基类"""

    def __init__(self, stream: TextIO):
        self.stream = stream
        self.rows: List[Dict[str, object]] = []
        self.flags: List[Dict[str, object]] = []
        self.summary: Optional[Dict[str, object]] = None

    def on_row(self, row: Dict[str, object]):
        """处理数据行"""
        self.rows.append(row)

    def on_flag(self, flag: Dict[str, object]):
        """处理标记"""
        self.flags.append(flag)

    def on_summary(self, summary: Dict[str, object]):
        """处理汇总"""
        self.summary = summary

    def handle_event(self, event_type: SweepEventType, payload: Dict[str, object]):
        """处理事件的统一入口"""
        if event_type == SweepEventType.ROW:
            self.on_row(payload)
        elif event_type == SweepEventType.FLAG:
            self.on_flag(payload)
        elif event_type == SweepEventType.SUMMARY:
            self.on_summary(payload)

    def close(self):
        """把收集的内容写入输出流"""


class CsvWriter(RowWriter):
    """
    逐行写出 CSV；列为第一行的键（保持插入顺序）

    标记不进入表格，每个标记写成一行 "FLAG <json>" 到 flag_stream（默认标准错误）。
    """

    def __init__(self, stream: TextIO, columns: Optional[Sequence[str]] = None,
                 flag_stream: Optional[TextIO] = None):
        super().__init__(stream)
        self.columns = list(columns) if columns else None
        self.flag_stream = flag_stream
        self._writer = None

    def on_flag(self, flag: Dict[str, object]):
        super().on_flag(flag)
        stream = self.flag_stream or sys.stderr
        stream.write("FLAG " + dumps(flag) + "\n")

    def on_row(self, row: Dict[str, object]):
        super().on_row(row)
        if self._writer is None:
            self.columns = self.columns or list(row)
            self._writer = csv.DictWriter(self.stream, fieldnames=self.columns,
                                          extrasaction="ignore", lineterminator="\n")
            self._writer.writeheader()
        self._writer.writerow({k: self._cell(row.get(k)) for k in self.columns})

    @staticmethod
    def _cell(value) -> str:
        if value is None:
            return ""
        if isinstance(value, float):
            return format_float(value)
        return str(value)


class JsonWriter(RowWriter):
    """整体写出 {rows, flags, summary}；只有汇总没有数据行时直接写出汇总"""

    def close(self):
        if self.rows or self.flags:
            document = {"rows": self.rows, "flags": self.flags, "summary": self.summary}
        else:
            document = self.summary
        self.stream.write(dumps(document) + "\n")


class SvgWriter(RowWriter):
    """以 x 列为横轴画出 y 列的折线（matplotlib Agg 后端，元数据固定）"""

    def __init__(self, stream: TextIO, x: str = "M", y: Sequence[str] = ("min",),
                 title: Optional[str] = None):
        super().__init__(stream)
        self.x, self.y, self.title = x, list(y), title

    def close(self):
        if not self.rows:
            raise ArgumentError("没有可绘制的数据行")
        plt.rcParams["svg.hashsalt"] = "symclone"
        fig, ax = plt.subplots(figsize=(6, 4))
        xs = [row[self.x] for row in self.rows]
        for column in self.y:
            points = [(x, row.get(column)) for x, row in zip(xs, self.rows) if row.get(column) is not None]
            if points:
                ax.plot(*zip(*points), marker="o", label=column)
        ax.set_xlabel(self.x)
        if self.title:
            ax.set_title(self.title)
        ax.legend()
        fig.savefig(self.stream, format="svg", metadata={"Date": None})
        plt.close(fig)


def write_sweep(events: Iterable[Tuple[SweepEventType, Dict[str, object]]],
                writer: RowWriter) -> RowWriter:
    """
    便利函数：把扫描事件交给写出器并关闭

    Returns:
        RowWriter: 同一个写出器，可读取 rows / flags / summary
    """
    for event_type, payload in events:
        writer.handle_event(event_type, payload)
    writer.close()
    return writer


__all__ = ['format_float', 'dumps', 'RowWriter', 'CsvWriter', 'JsonWriter', 'SvgWriter', 'write_sweep']
