#!/usr/bin/env python3
"""
实验模块初始化：配置、任务装配、消融与回测
"""

from .settings import AppConfig, ArchSettings, DeskScalePreset, LoggingSettings, TASKS, load_app_config
from .tasks import build_task, network_config_for, checkpoint_metadata, label_splits, trading_features
from .ablation import AblationResult, AblationRow, run_ablation, format_ablation_table, write_ablation_csv
from .backtest import BacktestRow, run_backtest, write_backtest_csv, read_backtest_csv

__all__ = [
    'AppConfig', 'ArchSettings', 'DeskScalePreset', 'LoggingSettings', 'TASKS', 'load_app_config',
    'build_task', 'network_config_for', 'checkpoint_metadata', 'label_splits', 'trading_features',
    'AblationResult', 'AblationRow', 'run_ablation', 'format_ablation_table', 'write_ablation_csv',
    'BacktestRow', 'run_backtest', 'write_backtest_csv', 'read_backtest_csv',
]
