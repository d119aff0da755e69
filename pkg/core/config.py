#!/usr/bin/env python3
"""
配置加载

功能：
- 读取仓库根目录的 config.json 默认配置
- 合并用户指定的配置文件（深度合并）
- pydantic 校验错误统一转换为 ConfigurationError
"""

from pathlib import Path
from typing import Any, Dict, Optional, Type, TypeVar
import copy
import json
import logging

from pydantic import BaseModel, ValidationError

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / "config.json"

ModelT = TypeVar("ModelT", bound=BaseModel)


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """
    深度合并两个字典，override中的值优先

    Args:
        base: 基础配置
        override: 覆盖配置

    Returns:
        新字典（不修改输入）
    """
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def read_json(path: Path) -> Dict[str, Any]:
    """读取JSON配置文件"""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"配置文件不存在: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"配置文件不是合法JSON: {path}, error: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"配置文件顶层必须是对象: {path}")
    return data


def load_config_dict(user_path: Optional[str] = None) -> Dict[str, Any]:
    """
    加载默认配置并合并用户配置

    Args:
        user_path: 用户配置文件路径（可选）
    """
    config = read_json(DEFAULT_CONFIG_PATH) if DEFAULT_CONFIG_PATH.exists() else {}
    if user_path:
        config = deep_merge(config, read_json(Path(user_path)))
        logger.info(f"已合并用户配置: {user_path}")
    return config


def validate_model(model_cls: Type[ModelT], data: Any) -> ModelT:
    """
    用pydantic模型校验配置

    Args:
        model_cls: 目标模型类
        data: 字典或已构造的模型

    Returns:
        校验后的模型实例
    """
    if isinstance(data, model_cls):
        return data
    if isinstance(data, BaseModel):
        data = data.model_dump()
    try:
        return model_cls.model_validate(data or {})
    except ValidationError as e:
        fields = ", ".join(".".join(str(p) for p in err["loc"]) or "<root>" for err in e.errors())
        raise ConfigurationError(f"{model_cls.__name__} 配置非法 ({fields}): {e}") from e
