#!/usr/bin/env python3
"""
损失函数

功能：
- 平方误差（回归，跟踪任务）
- Softmax交叉熵（逐时刻分类，交易动作）
- Sigmoid交叉熵（逐通道二值，钢琴卷帘下一步预测）

所有损失都按时间步取平均，返回标量损失与解析梯度。
"""

from enum import Enum
from typing import Tuple, Union

import numpy as np

from .errors import ConfigurationError, DataError
from .tensor import SeqTensor


class LossKind(str, Enum):
    """损失类型"""
    SQUARED_ERROR = "squared_error"
    SOFTMAX_CROSS_ENTROPY = "softmax_cross_entropy"
    SIGMOID_CROSS_ENTROPY = "sigmoid_cross_entropy"


Target = Union[SeqTensor, np.ndarray]


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """沿通道轴（axis=0）的数值稳定log-softmax"""
    shifted = logits - logits.max(axis=0, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=0, keepdims=True))


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def class_targets(target: Target, length: int, n_classes: int) -> np.ndarray:
    """把分类目标规整为长度为length的整数数组并检查范围"""
    labels = np.asarray(target.data if isinstance(target, SeqTensor) else target).reshape(-1)
    if labels.shape != (length,):
        raise ConfigurationError(f"分类目标长度{labels.shape}与输出长度{length}不符")
    if not np.all(np.isfinite(labels)) or np.any(labels != np.round(labels)):
        raise DataError("分类目标必须是整数类别编号")
    labels = labels.astype(np.int64)
    if labels.min() < 0 or labels.max() >= n_classes:
        raise DataError(f"类别编号越界: 范围[{labels.min()}, {labels.max()}], 类别数={n_classes}")
    return labels


def _dense_target(target: Target, y: SeqTensor) -> np.ndarray:
    data = np.asarray(target.data if isinstance(target, SeqTensor) else target, dtype=np.float64)
    if data.ndim == 1:
        data = data[np.newaxis, :]
    if data.shape != y.shape:
        raise ConfigurationError(f"目标形状{data.shape}与输出形状{y.shape}不符")
    return data


def loss_eval(kind: LossKind, y: SeqTensor, target: Target) -> Tuple[float, SeqTensor]:
    """
    计算损失与 dL/dy

    Args:
        kind: 损失类型
        y: 网络输出（通道 × 时间）
        target: SquaredError/SigmoidCrossEntropy 为同形状数组，
                SoftmaxCrossEntropy 为逐时刻类别编号

    Returns:
        (标量损失, 与y同形状的梯度)
    """
    kind = LossKind(kind)
    length = y.length

    if kind is LossKind.SQUARED_ERROR:
        diff = y.data - _dense_target(target, y)
        loss = float(np.sum(diff * diff) / length)
        grad = 2.0 * diff / length

    elif kind is LossKind.SOFTMAX_CROSS_ENTROPY:
        labels = class_targets(target, length, y.channels)
        logp = log_softmax(y.data)
        steps = np.arange(length)
        loss = float(-np.sum(logp[labels, steps]) / length)
        grad = np.exp(logp)
        grad[labels, steps] -= 1.0
        grad /= length

    else:
        t = _dense_target(target, y)
        if np.any((t != 0.0) & (t != 1.0)):
            raise DataError("Sigmoid交叉熵的目标必须是0/1")
        z = y.data
        # −[t·log σ(z) + (1−t)·log(1−σ(z))] = log(1 + e^z) − t·z
        loss = float(np.sum(np.logaddexp(0.0, z) - t * z) / length)
        grad = (sigmoid(z) - t) / length

    return loss, SeqTensor(grad)
