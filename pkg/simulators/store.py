#!/usr/bin/env python3
"""
数据文件存储

功能：
- 跟踪数据集：每个划分一个CSV（首行 1,2,T,n_seq，随后每条序列依次为方位角行、x行、y行）+ metadata.json
- 报价CSV：bidpx,bidsz,askpx,asksz[,指标…][,action]
- DataStore：数据目录下报价 / 标注文件的命名与检索
"""

from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple
import json
import logging

import numpy as np
import pandas as pd

from core.errors import DataError, ParseError
from core.tables import numeric_values, read_raw_csv
from core.tensor import SeqTensor
from training.dataset import SequenceSet
from .market import N_ACTIONS, TickSeries
from .tracking import SPLITS, TrackingDataset

logger = logging.getLogger(__name__)

TICK_COLUMNS = ["bidpx", "bidsz", "askpx", "asksz"]
ACTION_COLUMN = "action"
METADATA_FILE = "metadata.json"

# 跟踪数据的通道数：输入为方位角，目标为 (x, y)
TRACKING_CHANNELS = (1, 2)


# ========== 跟踪数据集 ==========

def _write_tracking_split(path: Path, split: SequenceSet, T: int) -> None:
    channels_in, channels_out = TRACKING_CHANNELS
    length = split.inputs[0].length if len(split) else T
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(f"{channels_in},{channels_out},{length},{len(split)}\n")
        if len(split):
            blocks = [np.vstack([x.data, target.data]) for x, target in split]
            pd.DataFrame(np.vstack(blocks)).to_csv(f, header=False, index=False)


def save_tracking(dataset: TrackingDataset, directory: str) -> Path:
    """
    保存跟踪数据集

    每个划分写出 {split}.csv：首行为 channels_in,channels_out,T,n_seq，
    之后每条序列先写输入行（去均值方位角）再写目标行（x、y）。
    metadata.json 记录训练输入均值、序列长度与生成参数

    Args:
        dataset: 跟踪数据集
        directory: 输出目录
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    counts = {}
    for name in SPLITS:
        split = dataset.splits.get(name, SequenceSet(name=name))
        counts[name] = len(split)
        _write_tracking_split(directory / f"{name}.csv", split, dataset.T)

    metadata = {
        "input_mean": dataset.input_mean,
        "T": dataset.T,
        "counts": counts,
        "params": dataset.params,
        "saved_at": datetime.now().isoformat(),
    }
    with open(directory / METADATA_FILE, 'w', encoding='utf-8') as f:
        json.dump(metadata, f, ensure_ascii=False, indent=2)

    logger.info(f"跟踪数据集已保存: dir={directory}, counts={counts}")
    return directory


def _read_tracking_header(path: Path) -> Tuple[int, int, int, int]:
    with open(path, 'r', encoding='utf-8') as f:
        first = f.readline().strip()
    if not first:
        raise DataError(f"跟踪数据文件为空: {path}")
    try:
        channels_in, channels_out, T, n_seq = (int(v) for v in first.split(","))
    except ValueError as e:
        raise ParseError(f"首行应为 channels_in,channels_out,T,n_seq, 实际: {first}", 1) from e
    if (channels_in, channels_out) != TRACKING_CHANNELS:
        raise ParseError(f"通道数应为{TRACKING_CHANNELS}, 实际({channels_in}, {channels_out})", 1)
    if T < 1 or n_seq < 0:
        raise ParseError(f"非法的序列长度或条数: T={T}, n_seq={n_seq}", 1)
    return channels_in, channels_out, T, n_seq


def _read_tracking_split(path: Path, name: str) -> SequenceSet:
    channels_in, channels_out, T, n_seq = _read_tracking_header(path)
    if n_seq == 0:
        return SequenceSet(name=name)

    rows_per_seq = channels_in + channels_out
    values = numeric_values(read_raw_csv(path, "跟踪数据文件", skiprows=1), first_line=2)
    if values.shape != (rows_per_seq * n_seq, T):
        raise ParseError(f"数据形状应为{(rows_per_seq * n_seq, T)}, 实际{values.shape}", 2)

    inputs, targets = [], []
    for start in range(0, len(values), rows_per_seq):
        inputs.append(SeqTensor(values[start:start + channels_in]))
        targets.append(SeqTensor(values[start + channels_in:start + rows_per_seq]))
    return SequenceSet(inputs=inputs, targets=targets, name=name)


def load_tracking(directory: str) -> TrackingDataset:
    """
    读取 save_tracking 写出的数据集

    Raises:
        DataError: 目录或元数据缺失
        ParseError: CSV格式错误
    """
    directory = Path(directory)
    meta_path = directory / METADATA_FILE
    if not meta_path.exists():
        raise DataError(f"跟踪数据集元数据不存在: {meta_path}")
    try:
        with open(meta_path, 'r', encoding='utf-8') as f:
            metadata = json.load(f)
    except json.JSONDecodeError as e:
        raise DataError(f"元数据不是合法JSON: {meta_path}, error: {e}") from e

    splits = {}
    for name in SPLITS:
        path = directory / f"{name}.csv"
        if not path.exists():
            raise DataError(f"缺少划分文件: {path}")
        splits[name] = _read_tracking_split(path, name)

    logger.info(f"跟踪数据集已加载: dir={directory}, " + ", ".join(f"{n}={len(s)}" for n, s in splits.items()))
    return TrackingDataset(
        splits=splits,
        input_mean=float(metadata.get("input_mean", 0.0)),
        params=metadata.get("params", {}),
    )


# ========== 报价CSV ==========

def save_ticks(path: str, ticks: TickSeries, actions: Optional[Sequence[int]] = None) -> Path:
    """
    写出报价CSV

    Args:
        path: 文件路径
        ticks: 报价序列
        actions: 动作标签（可选，写为最后一列action）
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if actions is not None and len(actions) != len(ticks):
        raise DataError(f"标签数{len(actions)}与报价数{len(ticks)}不一致")

    frame = pd.DataFrame({
        "bidpx": ticks.bidpx, "bidsz": ticks.bidsz, "askpx": ticks.askpx, "asksz": ticks.asksz,
    }, dtype=np.float64)
    for i in range(ticks.n_indicators):
        frame[f"ind{i + 1}"] = ticks.indicators[:, i]
    if actions is not None:
        frame[ACTION_COLUMN] = np.asarray(actions, dtype=np.int64)
    frame.to_csv(path, index=False)
    return path


def load_labeled_ticks(path: str) -> Tuple[TickSeries, Optional[np.ndarray]]:
    """
    读取报价CSV（可带action列）

    Returns:
        (报价序列, 动作标签或None)

    Raises:
        DataError: 文件不存在、为空或没有数据行
        ParseError: 表头不符、列数不符、数值无法解析或动作越界（附行号）
    """
    raw = read_raw_csv(path, "报价文件")
    header = [str(h).strip() for h in raw.iloc[0]]
    if header[:4] != TICK_COLUMNS:
        raise ParseError(f"表头前四列应为{','.join(TICK_COLUMNS)}, 实际{','.join(header[:4])}", 1)
    if len(raw) < 2:
        raise DataError(f"报价文件没有数据行: {path}")
    labeled = header[-1] == ACTION_COLUMN
    n_indicators = len(header) - 4 - int(labeled)

    table = numeric_values(raw.iloc[1:], first_line=2)
    actions = None
    if labeled:
        labels = table[:, -1]
        bad = (labels != np.floor(labels)) | (labels < 0) | (labels >= N_ACTIONS)
        if bad.any():
            row = int(np.argmax(bad))
            raise ParseError(f"动作编号越界或非整数: {labels[row]}", row + 2)
        actions = labels.astype(np.int64)
        table = table[:, :-1]

    ticks = TickSeries(table[:, 0], table[:, 1], table[:, 2], table[:, 3], table[:, 4:])
    logger.debug(f"报价已读取: path={path}, T={len(ticks)}, 指标数={n_indicators}, 带标签={labeled}")
    return ticks, actions


def load_ticks(path: str) -> TickSeries:
    """读取报价CSV，忽略可能存在的action列"""
    ticks, _ = load_labeled_ticks(path)
    return ticks


# ========== 数据目录 ==========

class DataStore:
    """数据目录下的报价与标注文件"""

    def __init__(self, data_dir: str = "data"):
        """
        Args:
            data_dir: 数据根目录
        """
        self.data_dir = Path(data_dir)
        self.tracking_dir = self.data_dir / "tracking"
        self.ticks_dir = self.data_dir / "ticks"
        self.labeled_dir = self.data_dir / "labeled"
        self.pianoroll_dir = self.data_dir / "pianoroll"

    def tick_path(self, split: str, index: int, labeled: bool = False) -> Path:
        base = self.labeled_dir if labeled else self.ticks_dir
        return base / f"{split}_{index:03d}.csv"

    def tick_files(self, split: str, labeled: bool = False) -> List[Path]:
        """某个划分的全部报价文件（按序号排序）"""
        base = self.labeled_dir if labeled else self.ticks_dir
        return sorted(base.glob(f"{split}_*.csv"))

    def pianoroll_files(self, split: str) -> List[Path]:
        return sorted(self.pianoroll_dir.glob(f"{split}_*.csv"))

    def has_tracking(self) -> bool:
        return (self.tracking_dir / METADATA_FILE).exists()

    def summary(self) -> Dict[str, Dict[str, int]]:
        """各类文件在各划分下的数量"""
        return {
            "ticks": {s: len(self.tick_files(s)) for s in SPLITS},
            "labeled": {s: len(self.tick_files(s, labeled=True)) for s in SPLITS},
            "pianoroll": {s: len(self.pianoroll_files(s)) for s in SPLITS},
        }
