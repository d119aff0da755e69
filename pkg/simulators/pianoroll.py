#!/usr/bin/env python3
"""
钢琴卷帘（piano-roll）序列

功能：
- 合成卷帘：持续和弦 + 琶音声部，0/1 多热编码
- 读取卷帘CSV（每行一个时间步）
- 构造下一步预测样本对（输入 roll[:, :−1]，目标 roll[:, 1:]）
"""

from pathlib import Path
from typing import List, Tuple
import logging

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from core.errors import ConfigurationError, DataError, ParseError
from core.tables import numeric_values, read_raw_csv

logger = logging.getLogger(__name__)

# 大三和弦与小三和弦的音程
CHORD_SHAPES = ((0, 4, 7), (0, 3, 7))


class PianorollParams(BaseModel):
    """合成卷帘参数"""
    n_notes: int = Field(24, ge=8)
    hold: int = Field(8, ge=1)
    n_train: int = Field(20, ge=0)
    n_val: int = Field(5, ge=0)
    n_test: int = Field(5, ge=0)
    T: int = Field(128, ge=2)
    seed: int = 0


def synth_pianoroll(n_seq: int, T: int, n_notes: int = 24, seed: int = 0, hold: int = 8) -> List[np.ndarray]:
    """
    合成卷帘序列

    低半区是持续hold步的三和弦，高半区是逐步轮换的琶音单音，
    下一步的大部分音符可由当前和弦推断

    Args:
        n_seq: 序列条数
        T: 每条序列的时间步数
        n_notes: 音符数（通道数）
        seed: 随机种子
        hold: 和弦持续步数

    Returns:
        n_notes × T 的0/1数组列表
    """
    if n_notes < 8:
        raise ConfigurationError(f"音符数过少: n_notes={n_notes}")
    if T < 1:
        raise ConfigurationError(f"序列长度必须为正: T={T}")

    rng = np.random.default_rng(seed)
    half = n_notes // 2
    rolls = []
    for _ in range(n_seq):
        roll = np.zeros((n_notes, T))
        for start in range(0, T, hold):
            root = int(rng.integers(half))
            shape = CHORD_SHAPES[int(rng.integers(len(CHORD_SHAPES)))]
            tones = [(root + interval) % half for interval in shape]
            stop = min(start + hold, T)
            roll[tones, start:stop] = 1.0
            for t in range(start, stop):
                roll[half + tones[(t - start) % len(tones)], t] = 1.0
        rolls.append(roll)
    return rolls


def load_pianoroll(path: str) -> np.ndarray:
    """
    读取卷帘CSV：每行一个时间步，每列一个音符，取值0或1

    Returns:
        n_notes × T 数组

    Raises:
        ParseError: 非0/1取值或列数不一致（附行号）
        DataError: 空文件
    """
    values = numeric_values(read_raw_csv(path, "卷帘文件"), first_line=1)
    binary = np.isin(values, (0.0, 1.0)).all(axis=1)
    if not binary.all():
        raise ParseError("卷帘取值必须为0或1", int(np.argmin(binary)) + 1)

    logger.debug(f"卷帘已读取: path={path}, T={values.shape[0]}, n_notes={values.shape[1]}")
    return values.T


def save_pianoroll(path: str, roll: np.ndarray) -> Path:
    """写出卷帘CSV（load_pianoroll的逆操作）"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(np.asarray(roll).T.astype(int)).to_csv(path, header=False, index=False)
    return path


def next_step_pairs(roll: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    下一步预测样本对

    Returns:
        (roll[:, :−1], roll[:, 1:])
    """
    roll = np.asarray(roll, dtype=np.float64)
    if roll.ndim != 2 or roll.shape[1] < 2:
        raise DataError(f"卷帘至少需要2个时间步, 实际形状={roll.shape}")
    return roll[:, :-1], roll[:, 1:]
