#!/usr/bin/env python3
"""
训练数据容器

功能：
- SequenceSet：一组 (输入序列, 目标) 对
- TaskData：train / val / test 三个划分 + 预处理元数据
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Tuple, Union

import numpy as np

from core.errors import ConfigurationError
from core.tensor import SeqTensor

Target = Union[SeqTensor, np.ndarray]


@dataclass
class SequenceSet:
    """输入序列与对应目标"""
    inputs: List[SeqTensor] = field(default_factory=list)
    targets: List[Target] = field(default_factory=list)
    name: str = ""

    def __post_init__(self):
        if len(self.inputs) != len(self.targets):
            raise ConfigurationError(
                f"{self.name or '数据集'}: 输入数{len(self.inputs)}与目标数{len(self.targets)}不一致"
            )

    def __len__(self) -> int:
        return len(self.inputs)

    def __iter__(self) -> Iterator[Tuple[SeqTensor, Target]]:
        return iter(zip(self.inputs, self.targets))

    def __getitem__(self, index: int) -> Tuple[SeqTensor, Target]:
        return self.inputs[index], self.targets[index]


@dataclass
class TaskData:
    """一个任务的全部划分"""
    train: SequenceSet
    val: SequenceSet
    test: SequenceSet
    metadata: Dict[str, Any] = field(default_factory=dict)
    # 原始序列（如报价），不写入检查点
    sources: Dict[str, List[Any]] = field(default_factory=dict)

    def split(self, name: str) -> SequenceSet:
        if name not in ("train", "val", "test"):
            raise ConfigurationError(f"未知数据划分: {name}")
        return getattr(self, name)
