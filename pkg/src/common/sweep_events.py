"""
扫描事件类型定义

统一定义所有扫描（sweep）生成器产生的事件类型，便于写出器统一处理。
"""

from enum import Enum


class SweepEventType(Enum):
    """扫描事件类型枚举"""

    ROW = "ROW"
    """数据行事件，载荷为一行表格数据 (dict)"""

    FLAG = "FLAG"
    """标记事件，数值检查未通过但不致命（例如单调性被违反）"""

    SUMMARY = "SUMMARY"
    """汇总事件，扫描结束时的整体结论"""

    def __str__(self):
        """返回事件类型的字符串表示"""
        return self.value

    def __repr__(self):
        """返回事件类型的详细表示"""
        return f"SweepEventType.{self.name}"


__all__ = ['SweepEventType']
