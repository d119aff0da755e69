#!/usr/bin/env python3
"""
任务装配

功能：
- tracking：方位角 → (x, y) 回归，输入减训练均值
- trading：报价特征 → 五类动作分类，标签来自最优动作动态规划
- pianoroll：下一步多音符预测（逐音符sigmoid交叉熵）
- 按任务生成网络配置、检查点元数据
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple
import logging

import numpy as np
from tqdm import tqdm

from core.errors import ConfigurationError, DataError
from core.losses import LossKind
from core.tensor import SeqTensor
from network.graph import NetworkConfig
from simulators.market import N_ACTIONS, TickSeries, optimal_actions, synth_quotes
from simulators.pianoroll import load_pianoroll, next_step_pairs, synth_pianoroll
from simulators.store import DataStore, load_labeled_ticks, load_tracking
from simulators.tracking import SPLITS, generate_dataset
from training.dataset import SequenceSet, TaskData
from .settings import TASKS, AppConfig

logger = logging.getLogger(__name__)


def build_task(
    task: str,
    app_config: AppConfig,
    seed: Optional[int] = None,
    data_dir: Optional[str] = None,
    preprocessing: Optional[Dict[str, Any]] = None,
    progress: bool = False
) -> TaskData:
    """
    构造训练形式的任务数据

    data_dir 中已有对应文件时读取文件，否则按配置合成

    Args:
        task: tracking / trading / pianoroll
        app_config: 应用配置
        seed: 随机种子（默认取各任务配置中的seed）
        data_dir: 数据目录（可选）
        preprocessing: 已保存的预处理统计量（评估检查点时沿用训练时的值）
        progress: 是否显示进度条

    Returns:
        TaskData，metadata 含 task、通道数、损失类型与预处理统计量
    """
    if task not in TASKS:
        raise ConfigurationError(f"未知任务: {task}, 可选 {', '.join(TASKS)}")
    store = DataStore(data_dir) if data_dir else None

    if task == "tracking":
        data = _tracking_task(app_config, seed, store, preprocessing, progress)
    elif task == "trading":
        data = _trading_task(app_config, seed, store, preprocessing, progress)
    else:
        data = _pianoroll_task(app_config, seed, store)

    data.metadata["task"] = task
    logger.info(
        f"任务数据已就绪: task={task}, train={len(data.train)}, val={len(data.val)}, test={len(data.test)}"
    )
    return data


def network_config_for(data: TaskData, app_config: AppConfig, **overrides) -> NetworkConfig:
    """
    任务对应的网络配置：结构取自配置文件（可被overrides覆盖），通道数与损失取自任务
    """
    arch = app_config.arch(data.metadata["task"]).model_dump()
    arch.update({k: v for k, v in overrides.items() if v is not None})
    return NetworkConfig(
        **arch,
        in_channels=data.metadata["in_channels"],
        out_channels=data.metadata["out_channels"],
        loss=LossKind(data.metadata["loss"]),
    )


def checkpoint_metadata(data: TaskData, seed: int) -> Dict[str, Any]:
    """写入检查点的任务元数据（JSON可序列化部分）"""
    return {**data.metadata, "seed": seed}


# ========== tracking ==========

def _tracking_task(
    app: AppConfig,
    seed,
    store: Optional[DataStore],
    preprocessing: Optional[Dict[str, Any]],
    progress: bool
) -> TaskData:
    settings = app.tracking
    if store is not None and store.has_tracking():
        dataset = load_tracking(store.tracking_dir)
    else:
        dataset = generate_dataset(
            settings, settings.n_train, settings.n_val, settings.n_test, settings.T,
            seed=settings.seed if seed is None else seed, progress=progress,
        )

    input_mean = dataset.input_mean
    splits = {name: dataset.split(name) for name in SPLITS}
    stored = (preprocessing or {}).get("input_mean")
    if stored is not None and float(stored) != input_mean:
        # 沿用检查点里的训练均值：输入先加回本次均值再减去保存的均值
        shift = input_mean - float(stored)
        splits = {
            name: SequenceSet(
                inputs=[SeqTensor(x.data + shift) for x in split.inputs],
                targets=split.targets,
                name=name,
            )
            for name, split in splits.items()
        }
        logger.info(f"沿用保存的输入均值: stored={float(stored):.6f}, current={input_mean:.6f}")
        input_mean = float(stored)

    return TaskData(
        train=splits["train"],
        val=splits["val"],
        test=splits["test"],
        metadata={
            "in_channels": 1,
            "out_channels": 2,
            "loss": LossKind.SQUARED_ERROR.value,
            "input_mean": input_mean,
        },
    )


# ========== trading ==========

def synth_splits(app: AppConfig, seed: int) -> Dict[str, List[TickSeries]]:
    settings = app.trading
    counts = {"train": settings.n_train, "val": settings.n_val, "test": settings.n_test}
    children = np.random.SeedSequence(seed).spawn(sum(counts.values()))
    quotes = settings.quotes

    splits, cursor = {}, 0
    for name in SPLITS:
        splits[name] = []
        for _ in range(counts[name]):
            child_seed = int(children[cursor].generate_state(1)[0])
            cursor += 1
            splits[name].append(
                synth_quotes(settings.T, seed=child_seed, vol=quotes.vol, spread=quotes.spread,
                             start_price=quotes.start_price, min_size=quotes.min_size, max_size=quotes.max_size)
            )
    return splits


def label_splits(
    splits: Dict[str, List[TickSeries]],
    app: AppConfig,
    progress: bool = False
) -> Dict[str, List[np.ndarray]]:
    """对每条报价序列求最优动作标签"""
    sim = app.trading
    params = {"max_position": sim.max_position, "cost_per_trade": sim.cost_per_trade}
    total = sum(len(v) for v in splits.values())
    labels: Dict[str, List[np.ndarray]] = {}
    with tqdm(total=total, desc="最优动作标注", disable=not progress, leave=False) as bar:
        for name, series_list in splits.items():
            labels[name] = []
            for ticks in series_list:
                actions, _ = optimal_actions(ticks, params)
                labels[name].append(actions)
                bar.update(1)
    return labels


def feature_stats(train_ticks: List[TickSeries], scale: bool) -> Dict[str, List[float]]:
    """训练集逐通道均值（与可选的标准差）"""
    if not train_ticks:
        raise DataError("交易任务训练集为空，无法计算特征统计量")
    stacked = np.hstack([t.features() for t in train_ticks])
    mean = stacked.mean(axis=1)
    std = stacked.std(axis=1) if scale else np.ones_like(mean)
    std = np.where(std > 0, std, 1.0)
    return {"feature_mean": mean.tolist(), "feature_std": std.tolist()}


def trading_features(ticks: TickSeries, stats: Dict[str, List[float]]) -> SeqTensor:
    """分类器输入：按训练统计量标准化的报价特征"""
    mean = np.asarray(stats["feature_mean"])[:, np.newaxis]
    std = np.asarray(stats["feature_std"])[:, np.newaxis]
    features = ticks.features()
    if features.shape[0] != mean.shape[0]:
        raise DataError(f"特征通道数{features.shape[0]}与统计量{mean.shape[0]}不一致")
    return SeqTensor((features - mean) / std)


def _load_tick_splits(store: DataStore) -> Tuple[Dict[str, List[TickSeries]], Optional[Dict[str, List[np.ndarray]]]]:
    labeled = any(store.tick_files(s, labeled=True) for s in SPLITS)
    splits: Dict[str, List[TickSeries]] = {}
    labels: Dict[str, List[np.ndarray]] = {}
    for name in SPLITS:
        splits[name], labels[name] = [], []
        for path in store.tick_files(name, labeled=labeled):
            ticks, actions = load_labeled_ticks(path)
            splits[name].append(ticks)
            labels[name].append(actions)
    if not labeled:
        return splits, None
    return splits, labels


def _trading_task(app: AppConfig, seed, store: Optional[DataStore],
                  preprocessing: Optional[Dict[str, Any]], progress: bool) -> TaskData:
    settings = app.trading
    seed = settings.seed if seed is None else seed

    labels = None
    if store is not None and any(store.tick_files(s) or store.tick_files(s, labeled=True) for s in SPLITS):
        splits, labels = _load_tick_splits(store)
        logger.info(f"已读取报价文件: dir={store.data_dir}")
    else:
        splits = synth_splits(app, seed)
    if labels is None:
        labels = label_splits(splits, app, progress)

    stats = preprocessing if preprocessing and "feature_mean" in preprocessing else \
        feature_stats(splits["train"], settings.scale_features)

    sets = {}
    for name in SPLITS:
        sets[name] = SequenceSet(
            inputs=[trading_features(t, stats) for t in splits[name]],
            targets=list(labels[name]),
            name=name,
        )

    in_channels = len(stats["feature_mean"])
    return TaskData(
        train=sets["train"],
        val=sets["val"],
        test=sets["test"],
        metadata={
            "in_channels": in_channels,
            "out_channels": N_ACTIONS,
            "loss": LossKind.SOFTMAX_CROSS_ENTROPY.value,
            "scale_features": settings.scale_features,
            "max_position": settings.max_position,
            "cost_per_trade": settings.cost_per_trade,
            **stats,
        },
        sources={name: splits[name] for name in SPLITS},
    )


# ========== pianoroll ==========

def _pianoroll_task(app: AppConfig, seed, store: Optional[DataStore]) -> TaskData:
    params = app.pianoroll
    seed = params.seed if seed is None else seed

    rolls: Dict[str, List[np.ndarray]] = {}
    if store is not None and any(store.pianoroll_files(s) for s in SPLITS):
        for name in SPLITS:
            rolls[name] = [load_pianoroll(p) for p in store.pianoroll_files(name)]
    else:
        counts = {"train": params.n_train, "val": params.n_val, "test": params.n_test}
        for offset, name in enumerate(SPLITS):
            rolls[name] = synth_pianoroll(counts[name], params.T, params.n_notes, seed + offset, params.hold)

    widths = {r.shape[0] for split in rolls.values() for r in split}
    if len(widths) != 1:
        raise DataError(f"卷帘音符数不一致: {sorted(widths)}")
    n_notes = widths.pop()

    sets = {}
    for name in SPLITS:
        pairs = [next_step_pairs(r) for r in rolls[name]]
        sets[name] = SequenceSet(
            inputs=[SeqTensor(x) for x, _ in pairs],
            targets=[SeqTensor(y) for _, y in pairs],
            name=name,
        )

    return TaskData(
        train=sets["train"],
        val=sets["val"],
        test=sets["test"],
        metadata={
            "in_channels": n_notes,
            "out_channels": n_notes,
            "loss": LossKind.SIGMOID_CROSS_ENTROPY.value,
        },
    )
