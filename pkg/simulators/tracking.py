#!/usr/bin/env python3
"""
纯方位角目标跟踪仿真

功能：
- 正方形场地内匀速运动、碰壁反弹的目标状态方程
- 带噪声的方位角观测（全象限反正切）
- 生成 train / val / test 数据集，输入减去训练集均值

状态 z = [x, ẋ, y, ẏ]：
    z_t = A·g(z_{t−1}) + w_t，w_t ~ N(0, diag(0.5σ_w, 0, 0.5σ_w, 0))
    θ_t = atan2(y_t, x_t) + ν_t，ν_t ~ N(0, σ_ν)
"""

from dataclasses import dataclass, field
from typing import Dict, Tuple
import logging
import math

import numpy as np
from pydantic import BaseModel, Field, model_validator
from tqdm import tqdm

from core.config import validate_model
from core.errors import DomainError
from core.tensor import SeqTensor
from training.dataset import SequenceSet

logger = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")


class TrackingParams(BaseModel):
    """状态空间模型参数"""
    D: float = Field(10.0, gt=0)
    delta: float = Field(0.3, gt=0)
    sigma_w: float = Field(0.005, ge=0)
    sigma_nu: float = Field(0.005, ge=0)
    min_speed: float = Field(0.045, ge=0)
    max_speed: float = Field(0.05, ge=0)
    seed: int = 0

    @model_validator(mode="after")
    def _check(self) -> 'TrackingParams':
        if not self.D > self.delta:
            raise ValueError(f"需要 D > delta, 实际 D={self.D}, delta={self.delta}")
        if self.min_speed > self.max_speed:
            raise ValueError(f"需要 min_speed ≤ max_speed, 实际 {self.min_speed} > {self.max_speed}")
        return self

    @property
    def wall(self) -> float:
        """反弹带的内边界 D − δ"""
        return self.D - self.delta


@dataclass(frozen=True)
class TrackingState:
    """目标状态（位置单位，单位/步）"""
    x: float
    x_dot: float
    y: float
    y_dot: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.x_dot, self.y, self.y_dot])


def _reflect(position: float, velocity: float, wall: float) -> float:
    if position >= wall:
        return -abs(velocity)
    if position <= -wall:
        return abs(velocity)
    return velocity


def bounce(z: TrackingState, params: TrackingParams) -> TrackingState:
    """
    碰壁翻转速度分量

    x ≥ D−δ 时 ẋ ← −|ẋ|，x ≤ −(D−δ) 时 ẋ ← +|ẋ|，y 同理；位置不变
    """
    wall = params.wall
    return TrackingState(
        x=z.x,
        x_dot=_reflect(z.x, z.x_dot, wall),
        y=z.y,
        y_dot=_reflect(z.y, z.y_dot, wall),
    )


def step_state(z: TrackingState, params: TrackingParams, rng: np.random.Generator) -> TrackingState:
    """
    状态转移 z′ = A·bounce(z) + w

    A 把速度加到位置上；噪声只作用于位置分量
    """
    b = bounce(z, params)
    std = math.sqrt(0.5 * params.sigma_w)
    noise_x, noise_y = rng.normal(0.0, std, size=2)
    return TrackingState(
        x=b.x + b.x_dot + noise_x,
        x_dot=b.x_dot,
        y=b.y + b.y_dot + noise_y,
        y_dot=b.y_dot,
    )


def observe(z: TrackingState, params: TrackingParams, rng: np.random.Generator) -> float:
    """
    方位角观测 θ = atan2(y, x) + ν，范围(−π, π]加噪声

    Raises:
        DomainError: 目标恰好位于原点
    """
    if z.x == 0.0 and z.y == 0.0:
        raise DomainError("目标位于原点，方位角无定义")
    return math.atan2(z.y, z.x) + rng.normal(0.0, math.sqrt(params.sigma_nu))


def initial_state(params: TrackingParams, rng: np.random.Generator) -> TrackingState:
    """
    初始状态：位置在 [−D/2, D/2]² 上均匀，
    每轴速度大小在 [min_speed, max_speed] 上均匀、符号随机
    """
    half = 0.5 * params.D
    x, y = rng.uniform(-half, half, size=2)
    speeds = rng.uniform(params.min_speed, params.max_speed, size=2)
    signs = rng.choice([-1.0, 1.0], size=2)
    return TrackingState(x=x, x_dot=signs[0] * speeds[0], y=y, y_dot=signs[1] * speeds[1])


def simulate_trajectory(
    params: TrackingParams,
    T: int,
    rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """
    仿真一条轨迹

    Args:
        params: 模型参数
        T: 时间步数
        rng: 随机数发生器

    Returns:
        (4 × T 状态数组 [x; ẋ; y; ẏ], 长度T的方位角)
    """
    z = initial_state(params, rng)
    states = np.empty((4, T))
    bearings = np.empty(T)
    for t in range(T):
        z = step_state(z, params, rng)
        states[:, t] = z.as_array()
        bearings[t] = observe(z, params, rng)
    return states, bearings


@dataclass
class TrackingDataset:
    """跟踪数据集：各划分的 (1×T 方位角, 2×T 位置) 序列与训练输入均值"""
    splits: Dict[str, SequenceSet] = field(default_factory=dict)
    input_mean: float = 0.0
    params: Dict = field(default_factory=dict)

    def split(self, name: str) -> SequenceSet:
        return self.splits[name]

    @property
    def T(self) -> int:
        for name in SPLITS:
            if self.splits.get(name) and len(self.splits[name]):
                return self.splits[name].inputs[0].length
        return 0


def generate_dataset(
    params: TrackingParams,
    n_train: int,
    n_val: int,
    n_test: int,
    T: int,
    seed: int = None,
    progress: bool = False
) -> TrackingDataset:
    """
    生成跟踪数据集

    每条序列使用由seed派生的独立种子；输入为方位角，目标为原始 (x, y)；
    训练集输入的全局均值从所有划分的输入中减去

    Args:
        params: 模型参数
        n_train / n_val / n_test: 各划分序列数
        T: 序列长度
        seed: 随机种子（默认取params.seed）
        progress: 是否显示进度条
    """
    params = validate_model(TrackingParams, params)
    if T < 1:
        raise DomainError(f"序列长度必须为正: T={T}")
    seed = params.seed if seed is None else seed

    counts = {"train": n_train, "val": n_val, "test": n_test}
    children = np.random.SeedSequence(seed).spawn(n_train + n_val + n_test)

    raw: Dict[str, list] = {name: [] for name in SPLITS}
    cursor = 0
    bar = tqdm(total=len(children), desc="生成轨迹", disable=not progress, leave=False)
    for name in SPLITS:
        for _ in range(counts[name]):
            rng = np.random.default_rng(children[cursor])
            cursor += 1
            states, bearings = simulate_trajectory(params, T, rng)
            raw[name].append((bearings, states[[0, 2], :]))
            bar.update(1)
    bar.close()

    if raw["train"]:
        input_mean = float(np.mean(np.concatenate([b for b, _ in raw["train"]])))
    else:
        input_mean = 0.0

    splits = {}
    for name in SPLITS:
        splits[name] = SequenceSet(
            inputs=[SeqTensor((b - input_mean)[np.newaxis, :]) for b, _ in raw[name]],
            targets=[SeqTensor(pos) for _, pos in raw[name]],
            name=name,
        )

    logger.info(
        f"跟踪数据集已生成: train={n_train}, val={n_val}, test={n_test}, T={T}, "
        f"seed={seed}, input_mean={input_mean:.6f}"
    )
    return TrackingDataset(splits=splits, input_mean=input_mean, params=params.model_dump())
