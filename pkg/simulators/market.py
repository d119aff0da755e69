#!/usr/bin/env python3
"""
市场仿真

功能：
- 最优买卖报价（Tick / TickSeries）与五种交易动作
- 逐笔收益仿真（逐字复现竞赛模拟器的收益算法）
- 基于仓位状态的动态规划（Viterbi）最优动作标注，给出收益上界
- 均匀随机策略基线
- 合成报价生成器（高斯随机游走中间价）
"""

from dataclasses import dataclass, field
from enum import IntEnum
from itertools import product
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np
from pydantic import BaseModel, Field, model_validator

from core.config import validate_model
from core.errors import ConfigurationError, DataError

logger = logging.getLogger(__name__)


class Action(IntEnum):
    """交易动作（固定类别编号0..4）"""
    BUY_AT_BID = 0
    SELL_AT_BID = 1
    DO_NOTHING = 2
    BUY_AT_ASK = 3
    SELL_AT_ASK = 4


N_ACTIONS = len(Action)


class SimParams(BaseModel):
    """模拟器参数（竞赛模拟器默认值）"""
    max_position: int = Field(3, ge=1)
    cost_per_trade: float = Field(0.02, ge=0)


@dataclass(frozen=True)
class Tick:
    """一个时刻的最优报价"""
    bidpx: float
    bidsz: float
    askpx: float
    asksz: float
    indicators: Tuple[float, ...] = ()


@dataclass
class TickSeries:
    """按列存储的报价序列"""
    bidpx: np.ndarray
    bidsz: np.ndarray
    askpx: np.ndarray
    asksz: np.ndarray
    indicators: np.ndarray = field(default=None)

    def __post_init__(self):
        self.bidpx = np.asarray(self.bidpx, dtype=np.float64).reshape(-1)
        self.bidsz = np.asarray(self.bidsz, dtype=np.float64).reshape(-1)
        self.askpx = np.asarray(self.askpx, dtype=np.float64).reshape(-1)
        self.asksz = np.asarray(self.asksz, dtype=np.float64).reshape(-1)
        length = self.bidpx.size
        if length == 0:
            raise DataError("报价序列为空")
        indicators = np.asarray([] if self.indicators is None else self.indicators, dtype=np.float64)
        if indicators.size == 0:
            indicators = np.zeros((length, 0))
        self.indicators = indicators.reshape(length, -1) if indicators.size % length == 0 else indicators

        for name in ("bidsz", "askpx", "asksz"):
            if getattr(self, name).size != length:
                raise ConfigurationError(f"报价列长度不一致: {name}")
        if self.indicators.shape[0] != length:
            raise ConfigurationError("指标行数与报价长度不一致")
        if np.any(self.bidsz < 0) or np.any(self.asksz < 0):
            raise DataError("挂单量不能为负")
        if not (np.all(np.isfinite(self.bidpx)) and np.all(np.isfinite(self.askpx))):
            raise DataError("报价必须是有限值")

    def __len__(self) -> int:
        return self.bidpx.size

    @property
    def n_indicators(self) -> int:
        return self.indicators.shape[1]

    def tick(self, t: int) -> Tick:
        return Tick(
            float(self.bidpx[t]), float(self.bidsz[t]),
            float(self.askpx[t]), float(self.asksz[t]),
            tuple(float(v) for v in self.indicators[t]),
        )

    def features(self) -> np.ndarray:
        """分类器输入通道：bidpx, bidsz, askpx, asksz, 指标… （通道 × 时间）"""
        base = np.vstack([self.bidpx, self.bidsz, self.askpx, self.asksz])
        return np.vstack([base, self.indicators.T]) if self.n_indicators else base

    @classmethod
    def from_ticks(cls, ticks: Sequence[Tick]) -> 'TickSeries':
        ticks = list(ticks)
        if not ticks:
            raise DataError("报价序列为空")
        width = len(ticks[0].indicators)
        return cls(
            [t.bidpx for t in ticks], [t.bidsz for t in ticks],
            [t.askpx for t in ticks], [t.asksz for t in ticks],
            np.array([t.indicators for t in ticks], dtype=np.float64).reshape(len(ticks), width),
        )


def _as_series(ticks) -> TickSeries:
    return ticks if isinstance(ticks, TickSeries) else TickSeries.from_ticks(ticks)


# ========== 收益仿真 ==========

def mktpx(tick: Tick) -> float:
    """
    市场价格：按对手方挂单量加权，两侧挂单量都为0时取中间价
    """
    if tick.bidsz + tick.asksz > 0:
        return (tick.bidpx * tick.asksz + tick.askpx * tick.bidsz) / (tick.asksz + tick.bidsz)
    return (tick.bidpx + tick.askpx) / 2


def market_prices(ticks) -> List[float]:
    """整条序列的市场价格，运算顺序与mktpx相同，逐元素结果一致"""
    series = _as_series(ticks)
    sizes = series.asksz + series.bidsz
    weighted = series.bidpx * series.asksz + series.askpx * series.bidsz
    mid = (series.bidpx + series.askpx) / 2
    return np.divide(weighted, sizes, out=mid, where=sizes > 0).tolist()


def simulate_pnl(ticks, actions: Sequence[int], params: Optional[SimParams] = None) -> float:
    """
    逐笔收益仿真

    t = 0 … T−2：先按持仓盯市，再在仓位约束允许时执行 action[t]；
    违反仓位上限的动作直接跳过；最后一个时刻的动作不执行，期末不强制平仓

    Args:
        ticks: 报价序列
        actions: 每个时刻的动作编号
        params: 模拟器参数

    Returns:
        累计收益
    """
    series = _as_series(ticks)
    params = validate_model(SimParams, params or {})
    if len(actions) != len(series):
        raise ConfigurationError(f"动作数{len(actions)}与报价数{len(series)}不一致")

    max_position = params.max_position
    cost = params.cost_per_trade
    bidpx = series.bidpx.tolist()
    askpx = series.askpx.tolist()
    prices = market_prices(series)

    pnl = 0.0
    position = 0
    for t in range(len(series) - 1):
        mktpx0 = prices[t]
        mktpx1 = prices[t + 1]
        pnl = pnl + position * (mktpx1 - mktpx0)

        action = int(actions[t])
        if action == Action.BUY_AT_BID and position < max_position:
            position += 1
            pnl = pnl - (bidpx[t] + cost - mktpx1)
        if action == Action.BUY_AT_ASK and position < max_position:
            position += 1
            pnl = pnl - (askpx[t] + cost - mktpx1)
        if action == Action.SELL_AT_BID and position > -max_position:
            position -= 1
            pnl = pnl + bidpx[t] - cost - mktpx1
        if action == Action.SELL_AT_ASK and position > -max_position:
            position -= 1
            pnl = pnl + askpx[t] - cost - mktpx1

    return pnl


def _transition(action: int, position: int, base: float, bid: float, ask: float,
                mktpx1: float, max_position: int, cost: float) -> Tuple[int, float]:
    """单步动作后的 (新仓位, 收益)，表达式与逐笔仿真完全相同"""
    if action == Action.BUY_AT_BID and position < max_position:
        return position + 1, base - (bid + cost - mktpx1)
    if action == Action.BUY_AT_ASK and position < max_position:
        return position + 1, base - (ask + cost - mktpx1)
    if action == Action.SELL_AT_BID and position > -max_position:
        return position - 1, base + bid - cost - mktpx1
    if action == Action.SELL_AT_ASK and position > -max_position:
        return position - 1, base + ask - cost - mktpx1
    return position, base


# ========== 最优动作（Viterbi） ==========

def optimal_actions(ticks, params: Optional[SimParams] = None) -> Tuple[np.ndarray, float]:
    """
    仓位状态上的动态规划，求收益最大的动作序列

    状态为仓位 −max_position … max_position；每步收益 = 盯市项 + 交易项。
    并列时优先不动作，其次选择前一仓位绝对值更小者，再按动作编号；
    终点并列时选绝对仓位更小者。最后一个时刻标注为不动作。

    Args:
        ticks: 报价序列
        params: 模拟器参数

    Returns:
        (长度T的动作编号数组, 该路径的收益上界)
    """
    series = _as_series(ticks)
    params = validate_model(SimParams, params or {})
    length = len(series)
    max_position = params.max_position
    cost = params.cost_per_trade
    n_states = 2 * max_position + 1

    bidpx = series.bidpx.tolist()
    askpx = series.askpx.tolist()
    prices = market_prices(series)

    neg_inf = float("-inf")
    score = [neg_inf] * n_states
    score[max_position] = 0.0
    back_state = np.zeros((max(length - 1, 0), n_states), dtype=np.int64)
    back_action = np.full((max(length - 1, 0), n_states), int(Action.DO_NOTHING), dtype=np.int64)

    for t in range(length - 1):
        mktpx0, mktpx1 = prices[t], prices[t + 1]
        new_score = [neg_inf] * n_states
        best_key: List[Optional[tuple]] = [None] * n_states

        for i in range(n_states):
            if score[i] == neg_inf:
                continue
            position = i - max_position
            base = score[i] + position * (mktpx1 - mktpx0)
            for action in Action:
                new_position, value = _transition(
                    action, position, base, bidpx[t], askpx[t], mktpx1, max_position, cost
                )
                j = new_position + max_position
                key = (value, action == Action.DO_NOTHING, -abs(position), -int(action))
                if best_key[j] is None or key > best_key[j]:
                    best_key[j] = key
                    new_score[j] = value
                    back_state[t, j] = i
                    back_action[t, j] = int(action)

        score = new_score

    final = max(
        (j for j in range(n_states) if score[j] != neg_inf),
        key=lambda j: (score[j], -abs(j - max_position), -(j - max_position)),
    )
    best_pnl = score[final]

    actions = np.full(length, int(Action.DO_NOTHING), dtype=np.int64)
    state = final
    for t in range(length - 2, -1, -1):
        actions[t] = back_action[t, state]
        state = back_state[t, state]

    return actions, best_pnl


def brute_force_best(ticks, params: Optional[SimParams] = None) -> float:
    """穷举 5^(T−1) 种动作序列的最大收益（仅用于短序列核对）"""
    series = _as_series(ticks)
    if len(series) > 8:
        raise ConfigurationError(f"穷举只支持T ≤ 8, 实际T={len(series)}")
    best = float("-inf")
    for head in product(range(N_ACTIONS), repeat=len(series) - 1):
        best = max(best, simulate_pnl(series, list(head) + [int(Action.DO_NOTHING)], params))
    return best


# ========== 基线与指标 ==========

def uniform_strategy(T: int, seed: int = 0) -> np.ndarray:
    """独立同分布地从五种动作中均匀抽取"""
    rng = np.random.default_rng(seed)
    return rng.integers(0, N_ACTIONS, size=T)


def profit_per_step(pnl: float, T: int) -> float:
    """平均每步收益（收益算法执行 T−1 步）"""
    return pnl / max(T - 1, 1)


def action_accuracy(predicted: Sequence[int], labels: Sequence[int]) -> float:
    predicted = np.asarray(predicted).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if predicted.shape != labels.shape:
        raise ConfigurationError(f"预测数{predicted.size}与标签数{labels.size}不一致")
    return float(np.mean(predicted == labels))


# ========== 合成报价 ==========

class SynthQuoteParams(BaseModel):
    """合成报价参数"""
    vol: float = Field(0.02, ge=0)
    spread: float = Field(0.1, ge=0)
    start_price: float = Field(100.0, gt=0)
    min_size: float = Field(1.0, ge=0)
    max_size: float = Field(10.0, ge=0)

    @model_validator(mode="after")
    def _check(self) -> 'SynthQuoteParams':
        if self.min_size > self.max_size:
            raise ValueError(f"需要 min_size ≤ max_size, 实际 {self.min_size} > {self.max_size}")
        return self


def synth_quotes(T: int, seed: int = 0, vol: float = 0.02, spread: float = 0.1,
                 start_price: float = 100.0, min_size: float = 1.0, max_size: float = 10.0) -> TickSeries:
    """
    合成报价

    中间价为高斯随机游走（步长标准差vol），买卖价在中间价两侧各半个价差，
    挂单量在 [min_size, max_size] 上均匀

    Args:
        T: 长度
        seed: 随机种子
        vol: 随机游走步长标准差
        spread: 买卖价差
        start_price: 起始中间价
        min_size / max_size: 挂单量范围
    """
    if T < 1:
        raise ConfigurationError(f"报价长度必须为正: T={T}")
    if not 0 <= min_size <= max_size:
        raise ConfigurationError(f"挂单量范围非法: min_size={min_size}, max_size={max_size}")
    rng = np.random.default_rng(seed)
    steps = rng.normal(0.0, vol, size=T)
    steps[0] = 0.0
    mid = start_price + np.cumsum(steps)
    sizes = rng.uniform(min_size, max_size, size=(2, T))
    return TickSeries(
        bidpx=mid - spread / 2,
        bidsz=sizes[0],
        askpx=mid + spread / 2,
        asksz=sizes[1],
    )
