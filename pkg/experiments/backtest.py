#!/usr/bin/env python3
"""
回测

功能：
- 对比三种策略：训练好的分类器（model）、最优动作上界（viterbi）、均匀随机（uniform）
- 指标：平均每步收益、动作准确率（相对最优动作标签）
- 报告CSV读写
"""

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence
import logging

import numpy as np

from core.config import validate_model
from core.errors import DataError
from core.tables import read_table, write_table
from network.graph import Network
from simulators.market import (
    SimParams,
    TickSeries,
    action_accuracy,
    optimal_actions,
    profit_per_step,
    simulate_pnl,
    uniform_strategy,
)
from .tasks import trading_features

logger = logging.getLogger(__name__)

STRATEGIES = ("model", "viterbi", "uniform")
REPORT_FIELDS = ["strategy", "profit_per_step", "accuracy"]


@dataclass
class BacktestRow:
    """一种策略的汇总结果"""
    strategy: str
    profit_per_step: float
    accuracy: float


def model_actions(net: Network, ticks: TickSeries, stats: Dict[str, List[float]]) -> np.ndarray:
    """分类器在每个时刻取概率最大的动作"""
    logits = net.forward(trading_features(ticks, stats))
    return np.argmax(logits.data, axis=0)


def run_backtest(
    tick_sets: Sequence[TickSeries],
    labels: Optional[Sequence[np.ndarray]],
    model: Optional[Network],
    params=None,
    seed: int = 0,
    stats: Optional[Dict[str, List[float]]] = None
) -> List[BacktestRow]:
    """
    在若干报价序列上回测

    收益按序列求每步平均后再对序列取平均；准确率按全部时刻汇总

    Args:
        tick_sets: 报价序列列表
        labels: 每条序列的最优动作标签（None时现场求解）
        model: 训练好的分类网络（None时跳过model行）
        params: 模拟器参数
        seed: 均匀策略的随机种子
        stats: 特征标准化统计量（model需要）

    Returns:
        BacktestRow列表，顺序为 model, viterbi, uniform
    """
    params = validate_model(SimParams, params or {})
    if not tick_sets:
        raise DataError("回测数据为空")

    if labels is None:
        labels = [optimal_actions(t, params)[0] for t in tick_sets]

    strategies: Dict[str, List[np.ndarray]] = {
        "viterbi": list(labels),
        "uniform": [uniform_strategy(len(t), seed + i) for i, t in enumerate(tick_sets)],
    }
    if model is not None:
        if stats is None:
            raise DataError("回测分类器需要特征统计量")
        strategies["model"] = [model_actions(model, t, stats) for t in tick_sets]

    all_labels = np.concatenate([np.asarray(l) for l in labels])
    rows = []
    for name in STRATEGIES:
        if name not in strategies:
            continue
        actions = strategies[name]
        profits = [
            profit_per_step(simulate_pnl(t, a, params), len(t))
            for t, a in zip(tick_sets, actions)
        ]
        accuracy = action_accuracy(np.concatenate(actions), all_labels)
        row = BacktestRow(name, float(np.mean(profits)), accuracy)
        rows.append(row)
        logger.info(f"回测: strategy={name}, profit_per_step={row.profit_per_step:.6g}, accuracy={accuracy:.4f}")

    return rows


def write_backtest_csv(path: str, rows: List[BacktestRow]) -> Path:
    return write_table(path, [asdict(r) for r in rows], REPORT_FIELDS)


def read_backtest_csv(path: str) -> List[BacktestRow]:
    frame = read_table(path, REPORT_FIELDS, "回测报告")
    return [
        BacktestRow(str(r.strategy), float(r.profit_per_step), float(r.accuracy))
        for r in frame.itertuples(index=False)
    ]
