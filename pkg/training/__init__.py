#!/usr/bin/env python3
"""
训练模块初始化
"""

from .dataset import SequenceSet, TaskData
from .optim import RmsState, rmsprop_step
from .trainer import (
    TrainConfig,
    Metric,
    HistoryRecord,
    train,
    evaluate,
    default_metric,
    write_history_csv,
    read_history_csv,
)
from .gradcheck import GradCheckReport, SuiteResult, run_gradcheck

__all__ = [
    'SequenceSet', 'TaskData', 'RmsState', 'rmsprop_step',
    'TrainConfig', 'Metric', 'HistoryRecord', 'train', 'evaluate', 'default_metric',
    'write_history_csv', 'read_history_csv',
    'GradCheckReport', 'SuiteResult', 'run_gradcheck',
]
