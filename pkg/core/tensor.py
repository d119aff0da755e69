#!/usr/bin/env python3
"""
时序张量与无参数算子

功能：
- SeqTensor：通道 × 时间 的二维双精度信号容器
- 整流线性单元（ReLU）及其反向
- 通道拼接及其反向（切分）
- 2倍最大池化（抽取）及其反向
- 插零2倍上采样及其反向
- 因果延迟（fcn变体池化前使用）
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import ConfigurationError


@dataclass
class SeqTensor:
    """通道 × 时间 的信号，data[c, t]"""
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 1:
            data = data[np.newaxis, :]
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ConfigurationError(f"SeqTensor需要非空二维数组, 实际形状={data.shape}")
        self.data = data

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def length(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    @classmethod
    def zeros(cls, channels: int, length: int) -> 'SeqTensor':
        return cls(np.zeros((channels, length)))

    def copy(self) -> 'SeqTensor':
        return SeqTensor(self.data.copy())

    def __repr__(self) -> str:
        return f"SeqTensor(channels={self.channels}, length={self.length})"


# ========== 整流线性单元 ==========

def relu(x: SeqTensor) -> SeqTensor:
    """y = max(x, 0)"""
    return SeqTensor(np.maximum(x.data, 0.0))


def relu_backward(x: SeqTensor, dL_dy: SeqTensor) -> SeqTensor:
    """
    ReLU反向

    x == 0 处的次梯度取0

    Args:
        x: 前向输入（整流前）
        dL_dy: 上游梯度
    """
    _check_same_shape(x, dL_dy, "relu_backward")
    return SeqTensor(np.where(x.data > 0.0, dL_dy.data, 0.0))


# ========== 通道拼接 ==========

def concat_channels(a: SeqTensor, b: SeqTensor) -> SeqTensor:
    """沿通道轴拼接，a的通道在前"""
    if a.length != b.length:
        raise ConfigurationError(f"拼接长度不一致: {a.length} != {b.length}")
    return SeqTensor(np.concatenate([a.data, b.data], axis=0))


def concat_backward(dL_dy: SeqTensor, split: int) -> Tuple[SeqTensor, SeqTensor]:
    """
    拼接反向：按前向的通道划分切回两份

    Args:
        dL_dy: 上游梯度
        split: 第一个操作数的通道数
    """
    if not 0 < split < dL_dy.channels:
        raise ConfigurationError(f"切分位置越界: split={split}, channels={dL_dy.channels}")
    return SeqTensor(dL_dy.data[:split]), SeqTensor(dL_dy.data[split:])


# ========== 抽取与插值（仅fcn变体） ==========

def maxpool2(x: SeqTensor) -> Tuple[SeqTensor, np.ndarray]:
    """
    2倍最大池化

    y[c, i] = max(x[c, 2i], x[c, 2i+1])，相等时取较早下标；
    奇数长度时末尾单独样本直接通过。

    Returns:
        (池化结果, 每个输出对应的输入下标)
    """
    channels, length = x.shape
    half = length // 2
    out_len = (length + 1) // 2

    argmax = np.empty((channels, out_len), dtype=np.int64)
    if half:
        even = x.data[:, 0:2 * half:2]
        odd = x.data[:, 1:2 * half:2]
        base = 2 * np.arange(half)
        argmax[:, :half] = np.where(odd > even, base + 1, base)
    if out_len > half:
        argmax[:, -1] = length - 1

    y = np.take_along_axis(x.data, argmax, axis=1)
    return SeqTensor(y), argmax


def maxpool2_backward(dL_dy: SeqTensor, argmax: np.ndarray, input_len: int) -> SeqTensor:
    """把梯度送回前向时取到最大值的位置"""
    if argmax.shape != dL_dy.shape:
        raise ConfigurationError(f"池化反向形状不一致: {argmax.shape} != {dL_dy.shape}")
    dx = np.zeros((dL_dy.channels, input_len))
    np.put_along_axis(dx, argmax, dL_dy.data, axis=1)
    return SeqTensor(dx)


def upsample2_zeros(x: SeqTensor, target_len: int) -> SeqTensor:
    """
    插零2倍上采样

    y[c, 2i] = x[c, i]，奇数位置为0，截断到target_len

    Args:
        x: 低速率信号
        target_len: 目标长度，只能是 2·len−1 或 2·len
    """
    if target_len not in (2 * x.length - 1, 2 * x.length):
        raise ConfigurationError(
            f"上采样目标长度非法: target_len={target_len}, 输入长度={x.length}"
        )
    y = np.zeros((x.channels, target_len))
    y[:, 0::2] = x.data
    return SeqTensor(y)


def upsample2_zeros_backward(dL_dy: SeqTensor) -> SeqTensor:
    """上采样反向：读取偶数位置"""
    return SeqTensor(dL_dy.data[:, 0::2])


# ========== 因果延迟 ==========

def delay(x: SeqTensor, steps: int = 1) -> SeqTensor:
    """y[c, t] = x[c, t − steps]，头部补零，长度不变"""
    if steps < 0:
        raise ConfigurationError(f"延迟步数不能为负: {steps}")
    y = np.zeros_like(x.data)
    if steps < x.length:
        y[:, steps:] = x.data[:, :x.length - steps]
    return SeqTensor(y)


def delay_backward(dL_dy: SeqTensor, steps: int = 1) -> SeqTensor:
    """延迟反向：dx[c, t] = dy[c, t + steps]，越界项丢弃"""
    dx = np.zeros_like(dL_dy.data)
    if steps < dL_dy.length:
        dx[:, :dL_dy.length - steps] = dL_dy.data[:, steps:]
    return SeqTensor(dx)


def _check_same_shape(a: SeqTensor, b: SeqTensor, where: str):
    if a.shape != b.shape:
        raise ConfigurationError(f"{where}: 形状不一致 {a.shape} != {b.shape}")
