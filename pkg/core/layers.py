#!/usr/bin/env python3
"""
因果空洞卷积层

功能：
- ConvLayer：权重、偏置、空洞率及梯度缓冲
- 因果卷积前向（左侧补零，输出长度等于输入长度）
- 因果卷积反向（输入梯度 + 累加参数梯度）
"""

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .errors import ConfigurationError
from .tensor import SeqTensor


def is_power_of_two(value: int) -> bool:
    return value >= 1 and (value & (value - 1)) == 0


@dataclass
class ConvLayer:
    """
    一维因果卷积层

    weights形状为 (out_channels, in_channels, kernel_len)，
    第k个抽头作用于 t − k·dilation 时刻的输入
    """
    weights: np.ndarray
    bias: np.ndarray
    dilation: int = 1
    name: str = ""
    grad_weights: Optional[np.ndarray] = field(default=None, repr=False)
    grad_bias: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)

        if self.weights.ndim != 3:
            raise ConfigurationError(f"{self.name or '卷积层'}: 权重必须是三维数组, 实际={self.weights.shape}")
        if self.bias.shape != (self.out_channels,):
            raise ConfigurationError(
                f"{self.name or '卷积层'}: 偏置形状{self.bias.shape}与输出通道数{self.out_channels}不符"
            )
        if not is_power_of_two(int(self.dilation)):
            raise ConfigurationError(f"{self.name or '卷积层'}: 空洞率必须是2的幂, 实际={self.dilation}")
        self.dilation = int(self.dilation)

        if self.grad_weights is None:
            self.grad_weights = np.zeros_like(self.weights)
        if self.grad_bias is None:
            self.grad_bias = np.zeros_like(self.bias)

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def kernel_len(self) -> int:
        return self.weights.shape[2]

    @property
    def span(self) -> int:
        """该层向过去看的步数 (K−1)·d"""
        return (self.kernel_len - 1) * self.dilation

    def zero_grad(self):
        self.grad_weights.fill(0.0)
        self.grad_bias.fill(0.0)

    def parameters(self) -> Dict[str, np.ndarray]:
        return {f"{self.name}.weights": self.weights, f"{self.name}.bias": self.bias}

    def gradients(self) -> Dict[str, np.ndarray]:
        return {f"{self.name}.weights": self.grad_weights, f"{self.name}.bias": self.grad_bias}

    def parameter_count(self) -> int:
        return self.weights.size + self.bias.size


def _padded(x: np.ndarray, pad: int) -> np.ndarray:
    if pad == 0:
        return x
    return np.concatenate([np.zeros((x.shape[0], pad)), x], axis=1)


def causal_conv_forward(x: SeqTensor, layer: ConvLayer) -> SeqTensor:
    """
    因果卷积前向

    y[o, t] = bias[o] + Σ_c Σ_k w[o, c, k] · x[c, t − k·d]，t < 0 时输入视为0

    Args:
        x: 输入信号
        layer: 卷积层

    Returns:
        与输入等长的输出信号
    """
    if x.channels != layer.in_channels:
        raise ConfigurationError(
            f"{layer.name or '卷积层'}: 输入通道数{x.channels}与层定义{layer.in_channels}不符"
        )

    length = x.length
    pad = layer.span
    xp = _padded(x.data, pad)

    y = np.repeat(layer.bias[:, np.newaxis], length, axis=1)
    for k in range(layer.kernel_len):
        # 抽头k读取 x[:, t − k·d]，在补零数组中起点为 pad − k·d
        start = pad - k * layer.dilation
        y += layer.weights[:, :, k] @ xp[:, start:start + length]

    return SeqTensor(y)


def causal_conv_backward(x: SeqTensor, layer: ConvLayer, dL_dy: SeqTensor) -> SeqTensor:
    """
    因果卷积反向

    参数梯度累加进layer的梯度缓冲，不清零

    Args:
        x: 前向输入
        layer: 卷积层
        dL_dy: 上游梯度

    Returns:
        dL/dx
    """
    if x.channels != layer.in_channels or dL_dy.channels != layer.out_channels:
        raise ConfigurationError(
            f"{layer.name or '卷积层'}: 反向通道数不匹配 x={x.shape}, dL_dy={dL_dy.shape}"
        )
    if x.length != dL_dy.length:
        raise ConfigurationError(
            f"{layer.name or '卷积层'}: 反向长度不匹配 {x.length} != {dL_dy.length}"
        )

    length = x.length
    pad = layer.span
    xp = _padded(x.data, pad)
    dy = dL_dy.data
    dxp = np.zeros_like(xp)

    for k in range(layer.kernel_len):
        start = pad - k * layer.dilation
        layer.grad_weights[:, :, k] += dy @ xp[:, start:start + length].T
        dxp[:, start:start + length] += layer.weights[:, :, k].T @ dy
    layer.grad_bias += dy.sum(axis=1)

    # 补零区域（t < 0）的梯度丢弃
    return SeqTensor(dxp[:, pad:])
