"""
测试公共夹具
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# 与main.py一样把项目根目录放进路径
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from core.tensor import SeqTensor  # noqa: E402
from network.graph import NetworkConfig, build_network  # noqa: E402


@pytest.fixture
def rng():
    """固定种子的随机数发生器"""
    return np.random.default_rng(42)


@pytest.fixture
def small_config():
    """梯度检验规模的小网络"""
    return NetworkConfig(variant="ufcnn", levels=2, filters_per_level=3, kernel_len=2,
                         in_channels=1, out_channels=2)


@pytest.fixture
def make_net():
    def _make(variant="ufcnn", levels=2, filters=4, kernel_len=3, in_channels=1, out_channels=1,
              seed=0, random_bias=True, **kwargs):
        config = NetworkConfig(variant=variant, levels=levels, filters_per_level=filters,
                               kernel_len=kernel_len, in_channels=in_channels,
                               out_channels=out_channels, **kwargs)
        net = build_network(config, seed=seed)
        if random_bias:
            bias_rng = np.random.default_rng(seed + 1000)
            for layer in net.layers:
                layer.bias[...] = bias_rng.normal(scale=0.1, size=layer.bias.shape)
        return net
    return _make


def seq(values) -> SeqTensor:
    """单通道序列的简写"""
    return SeqTensor(np.asarray(values, dtype=np.float64))
