#!/usr/bin/env python3
"""
CSV表格读写

功能：
- 按字符串读入原始CSV，解析错误转换为带行号的 ParseError
- 数值化检查：第一处无法解析的行给出文件行号
- 结果表（指标历史、消融、回测）的写出与按表头读回
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence
import logging
import re

import numpy as np
import pandas as pd

from .errors import DataError, ParseError

logger = logging.getLogger(__name__)

_LINE_PATTERN = re.compile(r"line (\d+)")


def read_raw_csv(path: str, what: str, skiprows: int = 0, nrows: Optional[int] = None) -> pd.DataFrame:
    """
    以字符串读入无表头CSV（表头行若存在则作为第0行返回）

    Args:
        path: 文件路径
        what: 文件用途（用于错误信息）
        skiprows: 跳过的起始行数
        nrows: 最多读取的行数

    Raises:
        DataError: 文件不存在或为空
        ParseError: 某行字段数多于首行
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"{what}不存在: {path}")
    try:
        return pd.read_csv(path, header=None, dtype=str, skiprows=skiprows, nrows=nrows,
                           skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise DataError(f"{what}为空: {path}") from e
    except pd.errors.ParserError as e:
        match = _LINE_PATTERN.search(str(e))
        raise ParseError(f"{what}字段数不一致: {e}", int(match.group(1)) if match else None) from e


def numeric_values(frame: pd.DataFrame, first_line: int) -> np.ndarray:
    """
    把字符串表转换为浮点数组

    Args:
        frame: read_raw_csv 得到的数据行
        first_line: frame 第一行在文件中的行号

    Raises:
        ParseError: 缺字段或无法解析（附行号）
    """
    numeric = frame.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna().any(axis=1).to_numpy()
    if bad.any():
        row = int(np.argmax(bad))
        raise ParseError(f"无法解析数值: {frame.iloc[row].tolist()}", first_line + row)
    # 逐元素float()解析，写出的repr可精确读回
    return frame.to_numpy(dtype=object).astype(np.float64)


def write_table(path: str, rows: Sequence[Dict[str, Any]], columns: List[str]) -> Path:
    """写出带表头的结果表"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(list(rows), columns=columns)
    frame.to_csv(path, index=False)
    logger.debug(f"表格已写出: path={path}, rows={len(frame)}")
    return path


def read_table(path: str, columns: List[str], what: str) -> pd.DataFrame:
    """
    读回 write_table 写出的结果表

    Raises:
        DataError: 文件不存在、为空或表头不符
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"{what}不存在: {path}")
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except pd.errors.EmptyDataError as e:
        raise DataError(f"{what}为空: {path}") from e
    if list(frame.columns) != columns:
        raise DataError(f"{what}表头不符: {list(frame.columns)}")
    return frame
