#!/usr/bin/env python3
"""
训练器

功能：
- TrainConfig：学习率、减半时刻、RMSProp超参、批大小、评估间隔
- 小批量随机梯度训练（有放回采样，固定种子可复现）
- 学习率在 lr_halve_at 处减半一次
- 按间隔评估验证指标，返回验证最优的参数
- 指标历史CSV读写
"""

from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple, Union
import logging

import numpy as np
from pydantic import BaseModel, Field
from tqdm import tqdm

from core.config import validate_model
from core.errors import ConfigurationError, DataError, DivergenceError
from core.losses import LossKind, loss_eval
from core.tables import read_table, write_table
from core.tensor import SeqTensor
from network.graph import Network
from .dataset import SequenceSet, TaskData
from .optim import RmsState, rmsprop_step

logger = logging.getLogger(__name__)


class TrainConfig(BaseModel):
    """训练配置"""
    base_lr: float = Field(1e-3, gt=0)
    lr_halve_at: Optional[int] = Field(None, ge=0)
    total_iters: int = Field(30000, ge=0)
    rms_rho: float = Field(0.9, gt=0, lt=1)
    rms_eps: float = Field(1e-6, ge=0)
    batch_size: int = Field(4, ge=1)
    eval_every: int = Field(100, ge=1)
    seed: int = 0

    @property
    def halve_at(self) -> int:
        """学习率减半的迭代序号（默认总迭代数的一半）"""
        return self.total_iters // 2 if self.lr_halve_at is None else self.lr_halve_at

    def learning_rate(self, iteration: int) -> float:
        """第iteration次迭代（从0开始）的学习率"""
        return self.base_lr if iteration < self.halve_at else 0.5 * self.base_lr


class Metric(str, Enum):
    """评估指标"""
    MSE_PER_STEP = "mse_per_step"
    LOGLIK_PER_STEP = "loglik_per_step"
    ACCURACY = "accuracy"

    @property
    def higher_is_better(self) -> bool:
        return self is not Metric.MSE_PER_STEP


METRIC_LOSS = {
    Metric.MSE_PER_STEP: LossKind.SQUARED_ERROR,
    Metric.LOGLIK_PER_STEP: LossKind.SIGMOID_CROSS_ENTROPY,
    Metric.ACCURACY: LossKind.SOFTMAX_CROSS_ENTROPY,
}


def default_metric(loss: LossKind) -> Metric:
    """损失类型对应的默认指标"""
    for metric, kind in METRIC_LOSS.items():
        if kind == loss:
            return metric
    raise ConfigurationError(f"未知损失类型: {loss}")


@dataclass
class HistoryRecord:
    """一次评估的记录"""
    iteration: int
    train_loss: float
    val_metric: float


# ========== 评估 ==========

def sequence_metric(metric: Metric, y: SeqTensor, target) -> float:
    """单条序列的逐时刻平均指标"""
    if metric is Metric.MSE_PER_STEP:
        loss, _ = loss_eval(LossKind.SQUARED_ERROR, y, target)
        return loss
    if metric is Metric.LOGLIK_PER_STEP:
        loss, _ = loss_eval(LossKind.SIGMOID_CROSS_ENTROPY, y, target)
        return -loss
    labels = np.asarray(target.data if isinstance(target, SeqTensor) else target).reshape(-1)
    predicted = np.argmax(y.data, axis=0)
    return float(np.mean(predicted == labels))


def evaluate(net: Network, dataset: SequenceSet, metric: Union[Metric, str]) -> float:
    """
    在数据集上计算指标

    每条序列先求逐时刻平均，再对序列取平均

    Args:
        net: 网络
        dataset: 数据集
        metric: mse_per_step / loglik_per_step / accuracy

    Returns:
        标量指标
    """
    metric = Metric(metric)
    if METRIC_LOSS[metric] != net.config.loss:
        raise ConfigurationError(f"指标{metric.value}与网络损失{net.config.loss.value}不匹配")
    if len(dataset) == 0:
        raise DataError(f"数据集为空: {dataset.name}")

    values = [sequence_metric(metric, net.forward(x), target) for x, target in dataset]
    return float(np.mean(values))


# ========== 训练 ==========

def train(
    net: Network,
    data: TaskData,
    train_config: Union[TrainConfig, dict],
    metric: Optional[Union[Metric, str]] = None,
    progress: bool = False
) -> Tuple[Network, List[HistoryRecord]]:
    """
    训练网络

    Args:
        net: 待训练网络（原地更新）
        data: 任务数据（使用train与val划分）
        train_config: 训练配置
        metric: 验证指标（默认由损失类型决定）
        progress: 是否显示进度条

    Returns:
        (载入验证最优参数的网络, 指标历史)
    """
    cfg = validate_model(TrainConfig, train_config)
    metric = Metric(metric) if metric is not None else default_metric(net.config.loss)
    history: List[HistoryRecord] = []

    if cfg.total_iters == 0:
        logger.info("迭代次数为0，直接返回初始网络")
        return net, history
    if len(data.train) == 0:
        raise DataError("训练集为空")

    val_set = data.val
    if len(val_set) == 0:
        logger.warning("验证集为空，使用训练集选择最优参数")
        val_set = data.train

    rng = np.random.default_rng(cfg.seed)
    state = RmsState()
    params = net.parameters()
    grads = net.gradients()

    best_metric: Optional[float] = None
    best_params = net.snapshot()
    window_losses: List[float] = []

    logger.info(
        f"开始训练: iters={cfg.total_iters}, batch={cfg.batch_size}, lr={cfg.base_lr}, "
        f"halve_at={cfg.halve_at}, metric={metric.value}, train={len(data.train)}, val={len(val_set)}"
    )

    bar = tqdm(range(cfg.total_iters), desc="训练", disable=not progress, leave=False)
    for iteration in bar:
        batch = rng.integers(0, len(data.train), size=cfg.batch_size)

        net.zero_grad()
        batch_loss = 0.0
        for index in batch:
            x, target = data.train[int(index)]
            y = net.forward(x)
            loss, dL_dy = loss_eval(net.config.loss, y, target)
            if not np.isfinite(loss):
                raise DivergenceError(iteration + 1, loss)
            net.backward(SeqTensor(dL_dy.data / cfg.batch_size))
            batch_loss += loss / cfg.batch_size

        rmsprop_step(params, grads, state, cfg.learning_rate(iteration), cfg.rms_rho, cfg.rms_eps)
        window_losses.append(batch_loss)

        step = iteration + 1
        if step % cfg.eval_every == 0 or step == cfg.total_iters:
            value = evaluate(net, val_set, metric)
            record = HistoryRecord(step, float(np.mean(window_losses)), value)
            history.append(record)
            window_losses = []

            if not np.isfinite(value):
                raise DivergenceError(step, value)
            improved = best_metric is None or (
                value > best_metric if metric.higher_is_better else value < best_metric
            )
            if improved:
                best_metric = value
                best_params = net.snapshot()

            bar.set_postfix(loss=f"{record.train_loss:.4g}", val=f"{value:.4g}")
            logger.debug(f"评估: iter={step}, train_loss={record.train_loss:.6g}, {metric.value}={value:.6g}")

    net.load_parameters(best_params)
    logger.info(f"训练完成: 最优{metric.value}={best_metric:.6g}, 评估次数={len(history)}")
    return net, history


# ========== 历史记录 ==========

HISTORY_FIELDS = ["iteration", "train_loss", "val_metric"]


def write_history_csv(path: str, history: List[HistoryRecord]) -> Path:
    """写出指标历史 (iteration, train_loss, val_metric)"""
    return write_table(path, [asdict(record) for record in history], HISTORY_FIELDS)


def read_history_csv(path: str) -> List[HistoryRecord]:
    """读取指标历史"""
    frame = read_table(path, HISTORY_FIELDS, "指标历史")
    return [
        HistoryRecord(int(row.iteration), float(row.train_loss), float(row.val_metric))
        for row in frame.itertuples(index=False)
    ]
