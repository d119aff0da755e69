#!/usr/bin/env python3
"""
结构消融实验

功能：
- 在跟踪任务上遍历 (变体 × 分辨率层数 × 每层滤波器数)
- 每个组合独立训练，记录验证集逐步均方误差
- 按 层数 × 滤波器数 排版结果表；CSV读写
"""

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence
import logging

from tqdm import tqdm

from core.errors import ConfigurationError, DataError
from core.tables import read_table, write_table
from network.graph import build_network
from training.trainer import Metric, TrainConfig, evaluate, train
from .settings import AppConfig, DeskScalePreset
from .tasks import build_task, network_config_for

logger = logging.getLogger(__name__)

ABLATION_FIELDS = ["variant", "levels", "filters", "val_mse"]


@dataclass
class AblationRow:
    variant: str
    levels: int
    filters: int
    val_mse: float


@dataclass
class AblationResult:
    """消融实验的全部结果"""
    rows: List[AblationRow] = field(default_factory=list)

    def lookup(self, variant: str, levels: int, filters: int) -> float:
        for row in self.rows:
            if (row.variant, row.levels, row.filters) == (variant, levels, filters):
                return row.val_mse
        raise KeyError((variant, levels, filters))

    @property
    def variants(self) -> List[str]:
        return list(dict.fromkeys(r.variant for r in self.rows))


def run_ablation(
    levels: Sequence[int],
    filters: Sequence[int],
    variants: Sequence[str],
    preset: Optional[DeskScalePreset] = None,
    seed: int = 0,
    app_config: Optional[AppConfig] = None,
    progress: bool = False
) -> AblationResult:
    """
    运行消融网格

    所有组合共享同一份数据集与同一个初始化种子

    Args:
        levels: 分辨率层数列表
        filters: 每层滤波器数列表
        variants: ufcnn / fcn
        preset: 数据规模与迭代数（默认取配置中的desk_scale）
        seed: 随机种子
        app_config: 应用配置
        progress: 是否显示进度条
    """
    app = app_config or AppConfig()
    preset = preset or app.desk_scale
    for variant in variants:
        if variant not in ("ufcnn", "fcn"):
            raise ConfigurationError(f"未知网络变体: {variant}")
    if not levels or not filters:
        raise ConfigurationError("层数与滤波器数列表不能为空")

    scaled = app.model_copy(update={
        "tracking": app.tracking.model_copy(update={
            "n_train": preset.n_train, "n_val": preset.n_val, "n_test": 0, "T": preset.T,
        }),
    })
    data = build_task("tracking", scaled, seed=seed, progress=progress)
    train_config = TrainConfig(**{
        **app.train.model_dump(), "total_iters": preset.total_iters, "lr_halve_at": None, "seed": seed,
    })

    grid = [(v, l, f) for v in variants for l in levels for f in filters]
    logger.info(f"消融实验开始: 组合数={len(grid)}, iters={preset.total_iters}, T={preset.T}")

    result = AblationResult()
    for variant, n_levels, n_filters in tqdm(grid, desc="消融", disable=not progress):
        config = network_config_for(data, scaled, variant=variant, levels=n_levels, filters_per_level=n_filters)
        net = build_network(config, seed=seed)
        net, _ = train(net, data, train_config, Metric.MSE_PER_STEP, progress=False)
        val_mse = evaluate(net, data.val, Metric.MSE_PER_STEP)
        result.rows.append(AblationRow(variant, n_levels, n_filters, val_mse))
        logger.info(f"消融组合完成: variant={variant}, levels={n_levels}, filters={n_filters}, val_mse={val_mse:.6g}")

    return result


def format_ablation_table(result: AblationResult, variant: str) -> str:
    """
    排版一个变体的结果表：行为层数，列为滤波器数
    """
    rows = [r for r in result.rows if r.variant == variant]
    if not rows:
        raise DataError(f"没有变体{variant}的结果")
    levels = sorted({r.levels for r in rows})
    filters = sorted({r.filters for r in rows})

    lines = [f"{variant.upper()} validation MSE", "levels" + "".join(f"{'F=' + str(f):>12}" for f in filters)]
    for n_levels in levels:
        cells = []
        for n_filters in filters:
            try:
                cells.append(f"{result.lookup(variant, n_levels, n_filters):>12.4f}")
            except KeyError:
                cells.append(f"{'-':>12}")
        lines.append(f"{n_levels:<6}" + "".join(cells))
    return "\n".join(lines)


def write_ablation_csv(path: str, result: AblationResult) -> Path:
    return write_table(path, [asdict(row) for row in result.rows], ABLATION_FIELDS)


def read_ablation_csv(path: str) -> AblationResult:
    frame = read_table(path, ABLATION_FIELDS, "消融结果")
    return AblationResult([
        AblationRow(str(r.variant), int(r.levels), int(r.filters), float(r.val_mse))
        for r in frame.itertuples(index=False)
    ])
