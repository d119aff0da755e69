#!/usr/bin/env python3
"""
网络模块初始化
"""

from .graph import (
    NetworkConfig,
    Network,
    build_network,
    forward,
    backward,
    receptive_field,
    parameter_count,
)
from .checkpoint import CHECKPOINT_VERSION, CheckpointManager, save_checkpoint, load_checkpoint

__all__ = [
    'NetworkConfig', 'Network', 'build_network', 'forward', 'backward',
    'receptive_field', 'parameter_count',
    'CHECKPOINT_VERSION', 'CheckpointManager', 'save_checkpoint', 'load_checkpoint',
]
