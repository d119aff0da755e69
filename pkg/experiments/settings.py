#!/usr/bin/env python3
"""
应用配置模型

功能：
- 汇总 config.json 各节：tracking / trading / pianoroll / network / train / desk_scale / logging
- 每个任务的默认网络结构
- 桌面规模（desk-scale）预设
"""

from typing import Dict, List, Literal

from pydantic import BaseModel, Field, field_validator

from core.config import load_config_dict, validate_model
from core.errors import ConfigurationError
from simulators.market import SimParams, SynthQuoteParams
from simulators.pianoroll import PianorollParams
from simulators.tracking import TrackingParams
from training.trainer import TrainConfig

TASKS = ("tracking", "trading", "pianoroll")


class TrackingTaskSettings(TrackingParams):
    """跟踪任务：状态空间参数 + 数据集规模"""
    n_train: int = Field(100, ge=0)
    n_val: int = Field(20, ge=0)
    n_test: int = Field(20, ge=0)
    T: int = Field(1000, ge=1)


class TradingTaskSettings(SimParams):
    """交易任务：模拟器参数 + 合成报价 + 数据集规模"""
    quotes: SynthQuoteParams = Field(default_factory=SynthQuoteParams)
    n_train: int = Field(20, ge=0)
    n_val: int = Field(5, ge=0)
    n_test: int = Field(5, ge=0)
    T: int = Field(1000, ge=2)
    scale_features: bool = False
    seed: int = 0


class ArchSettings(BaseModel):
    """网络结构（输入输出通道与损失由任务决定）"""
    variant: Literal["ufcnn", "fcn"] = "ufcnn"
    levels: int = Field(3, ge=1)
    filters_per_level: int = Field(16, ge=1)
    kernel_len: int = Field(5, ge=1)


def _default_arch() -> Dict[str, ArchSettings]:
    return {
        "tracking": ArchSettings(),
        "trading": ArchSettings(),
        "pianoroll": ArchSettings(levels=5, filters_per_level=50, kernel_len=2),
    }


class DeskScalePreset(BaseModel):
    """桌面规模消融实验预设"""
    n_train: int = Field(100, ge=1)
    n_val: int = Field(20, ge=1)
    T: int = Field(1000, ge=1)
    total_iters: int = Field(5000, ge=1)
    levels: List[int] = Field(default_factory=lambda: [1, 2, 3])
    filters: List[int] = Field(default_factory=lambda: [16, 32])


class LoggingSettings(BaseModel):
    """日志配置"""
    level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    file: str = "logs/app.log"
    progress: bool = True

    @field_validator("level", mode="before")
    @classmethod
    def _upper(cls, value):
        return value.upper() if isinstance(value, str) else value


class AppConfig(BaseModel):
    """全部配置"""
    out_dir: str = "output"
    data_dir: str = "data"
    tracking: TrackingTaskSettings = Field(default_factory=TrackingTaskSettings)
    trading: TradingTaskSettings = Field(default_factory=TradingTaskSettings)
    pianoroll: PianorollParams = Field(default_factory=PianorollParams)
    network: Dict[str, ArchSettings] = Field(default_factory=_default_arch)
    train: TrainConfig = Field(default_factory=TrainConfig)
    desk_scale: DeskScalePreset = Field(default_factory=DeskScalePreset)
    logging: LoggingSettings = Field(default_factory=LoggingSettings)

    def arch(self, task: str) -> ArchSettings:
        if task not in TASKS:
            raise ConfigurationError(f"未知任务: {task}")
        return self.network.get(task, _default_arch()[task])


def load_app_config(user_path: str = None) -> AppConfig:
    """读取默认配置、合并用户配置并校验"""
    return validate_model(AppConfig, load_config_dict(user_path))
