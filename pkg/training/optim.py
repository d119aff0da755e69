#!/usr/bin/env python3
"""
RMSProp优化器

cache ← ρ·cache + (1−ρ)·g²
param ← param − lr·g / √(cache + ε)
"""

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from core.errors import ConfigurationError


@dataclass
class RmsState:
    """每个参数的梯度平方滑动平均，初值为0"""
    cache: Dict[str, np.ndarray] = field(default_factory=dict)

    def slot(self, name: str, like: np.ndarray) -> np.ndarray:
        if name not in self.cache:
            self.cache[name] = np.zeros_like(like, dtype=np.float64)
        return self.cache[name]


def rmsprop_step(
    params: Dict[str, np.ndarray],
    grads: Dict[str, np.ndarray],
    state: RmsState,
    lr: float,
    rho: float = 0.9,
    eps: float = 1e-6
) -> RmsState:
    """
    原地执行一步RMSProp更新

    Args:
        params: 参数名 → 数组（原地修改）
        grads: 参数名 → 梯度
        state: 滑动平均状态（原地修改）
        lr: 学习率
        rho: 衰减系数
        eps: 数值稳定项（在开方内）

    Returns:
        更新后的state
    """
    for name, param in params.items():
        if name not in grads:
            raise ConfigurationError(f"缺少参数梯度: {name}")
        grad = grads[name]
        if grad.shape != param.shape:
            raise ConfigurationError(f"梯度形状不符: {name} {grad.shape} != {param.shape}")

        cache = state.slot(name, param)
        cache *= rho
        cache += (1.0 - rho) * grad * grad
        denom = np.sqrt(cache + eps)
        # eps=0 且从未出现过梯度的坐标保持不动
        step = np.divide(grad, denom, out=np.zeros_like(grad, dtype=np.float64), where=denom > 0)
        param -= lr * step

    return state
