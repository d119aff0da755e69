#!/usr/bin/env python3
"""
核心模块初始化：时序张量、卷积层、损失函数与异常
"""

from .errors import (
    ToolkitError,
    ConfigurationError,
    DataError,
    ParseError,
    DomainError,
    StateError,
    DivergenceError,
)
from .tensor import (
    SeqTensor,
    relu,
    relu_backward,
    concat_channels,
    concat_backward,
    maxpool2,
    maxpool2_backward,
    upsample2_zeros,
    upsample2_zeros_backward,
    delay,
    delay_backward,
)
from .layers import ConvLayer, causal_conv_forward, causal_conv_backward
from .losses import LossKind, loss_eval

__all__ = [
    'ToolkitError', 'ConfigurationError', 'DataError', 'ParseError',
    'DomainError', 'StateError', 'DivergenceError',
    'SeqTensor', 'relu', 'relu_backward', 'concat_channels', 'concat_backward',
    'maxpool2', 'maxpool2_backward', 'upsample2_zeros', 'upsample2_zeros_backward',
    'delay', 'delay_backward',
    'ConvLayer', 'causal_conv_forward', 'causal_conv_backward',
    'LossKind', 'loss_eval',
]
