#!/usr/bin/env python3
"""
检查点管理

功能：
- 网络参数持久化（JSON文本容器，版本标记 ufcnn-ckpt-v1）
- 按名称保存 / 加载检查点（initial、best …）
- 列出输出目录中的检查点

文件结构：
    {
      "version": "ufcnn-ckpt-v1",
      "config": {...NetworkConfig字段...},
      "shapes": {"H1.weights": [F, C, K], ...},
      "params": {"H1.weights": [行主序展平的浮点数], ...},
      "metadata": {...任务与预处理信息...},
      "saved_at": "..."
    }
"""

from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Tuple
import json
import logging

import numpy as np

from core.config import validate_model
from core.errors import DataError
from .graph import Network, NetworkConfig, build_network

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = "ufcnn-ckpt-v1"


def save_checkpoint(net: Network, path: str, metadata: Dict[str, Any] = None) -> Path:
    """
    保存网络到检查点文件

    Args:
        net: 网络
        path: 文件路径
        metadata: 附加元数据（任务、预处理统计量等）
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    params = net.parameters()
    payload = {
        "version": CHECKPOINT_VERSION,
        "config": net.config.model_dump(mode="json"),
        "shapes": {name: list(value.shape) for name, value in params.items()},
        # float()的repr可精确往返
        "params": {name: [float(v) for v in value.ravel()] for name, value in params.items()},
        "metadata": metadata or {},
        "saved_at": datetime.now().isoformat(),
    }

    with open(path, 'w', encoding='utf-8') as f:
        json.dump(payload, f, ensure_ascii=False)

    logger.info(f"检查点已保存: path={path}, 参数量={net.parameter_count()}")
    return path


def load_checkpoint(path: str) -> Tuple[Network, Dict[str, Any]]:
    """
    从检查点文件恢复网络

    Returns:
        (网络, 元数据)
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"检查点不存在: {path}")

    try:
        with open(path, 'r', encoding='utf-8') as f:
            payload = json.load(f)
    except json.JSONDecodeError as e:
        raise DataError(f"检查点不是合法JSON: {path}, error: {e}") from e

    version = payload.get("version")
    if version != CHECKPOINT_VERSION:
        raise DataError(f"不支持的检查点版本: {version}")

    config = validate_model(NetworkConfig, payload.get("config", {}))
    net = build_network(config, seed=0)

    shapes = payload.get("shapes", {})
    values = {}
    for name, flat in payload.get("params", {}).items():
        array = np.asarray(flat, dtype=np.float64)
        if name in shapes:
            array = array.reshape(shapes[name])
        values[name] = array
    try:
        net.load_parameters(values)
    except ValueError as e:
        raise DataError(f"检查点参数与配置不符: {path}, error: {e}") from e

    logger.info(f"检查点已加载: path={path}, {net}")
    return net, payload.get("metadata", {})


class CheckpointManager:
    """输出目录下的命名检查点"""

    SUFFIX = ".ckpt.json"

    def __init__(self, out_dir: str = "checkpoints"):
        """
        Args:
            out_dir: 检查点目录
        """
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def path_for(self, name: str) -> Path:
        return self.out_dir / f"{name}{self.SUFFIX}"

    def save(self, net: Network, name: str, metadata: Dict[str, Any] = None) -> Path:
        return save_checkpoint(net, self.path_for(name), metadata)

    def load(self, name: str) -> Tuple[Network, Dict[str, Any]]:
        return load_checkpoint(self.path_for(name))

    def exists(self, name: str) -> bool:
        return self.path_for(name).exists()

    def list_checkpoints(self) -> List[Dict[str, Any]]:
        """
        列出所有检查点

        Returns:
            检查点信息列表（按保存时间倒序）
        """
        entries = []
        for ckpt_file in self.out_dir.glob(f"*{self.SUFFIX}"):
            try:
                with open(ckpt_file, 'r', encoding='utf-8') as f:
                    payload = json.load(f)
                entries.append({
                    "name": ckpt_file.name[:-len(self.SUFFIX)],
                    "saved_at": payload.get("saved_at", ""),
                    "config": payload.get("config", {}),
                    "metadata": payload.get("metadata", {}),
                })
            except Exception as e:
                logger.error(f"读取检查点信息失败: {ckpt_file}, error: {e}")

        entries.sort(key=lambda x: x["saved_at"], reverse=True)
        return entries
