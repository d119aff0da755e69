#!/usr/bin/env python3
"""
有限差分梯度检验

功能：
- 中心差分（h = 1e−5）对比解析梯度
- 每个原语一个检验套件，外加随机小网络（L=2, F=3, K=2, T=12）整网检验
- 汇总报告：每个套件的采样坐标数与最大相对误差
"""

from dataclasses import dataclass, field
from typing import Callable, List, Sequence
import logging

import numpy as np

from core.layers import ConvLayer, causal_conv_backward, causal_conv_forward
from core.losses import LossKind, loss_eval
from core.tensor import (
    SeqTensor,
    concat_backward,
    concat_channels,
    delay,
    delay_backward,
    maxpool2,
    maxpool2_backward,
    relu,
    relu_backward,
    upsample2_zeros,
    upsample2_zeros_backward,
)
from network.graph import NetworkConfig, build_network

logger = logging.getLogger(__name__)

STEP = 1e-5
TOLERANCE = 1e-4
MIN_COORDINATES = 100
# 两侧梯度都接近0时退化为绝对误差
ERROR_FLOOR = 1e-5


@dataclass
class SuiteResult:
    """单个检验套件的结果"""
    name: str
    coordinates: int
    max_rel_err: float

    @property
    def passed(self) -> bool:
        return self.max_rel_err < TOLERANCE


@dataclass
class GradCheckReport:
    """全部套件汇总"""
    results: List[SuiteResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def max_rel_err(self) -> float:
        return max((r.max_rel_err for r in self.results), default=0.0)

    def lines(self) -> List[str]:
        rows = [f"{'suite':<18}{'coords':>8}{'max_rel_err':>14}  status"]
        for r in self.results:
            rows.append(f"{r.name:<18}{r.coordinates:>8}{r.max_rel_err:>14.3e}  {'PASS' if r.passed else 'FAIL'}")
        rows.append(f"overall: {'PASS' if self.passed else 'FAIL'} (max_rel_err={self.max_rel_err:.3e})")
        return rows


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), ERROR_FLOOR)


def check_gradients(
    objective: Callable[[], float],
    arrays: Sequence[np.ndarray],
    analytic: Sequence[np.ndarray],
    rng: np.random.Generator,
    coordinates: int = MIN_COORDINATES,
    h: float = STEP
) -> float:
    """
    随机抽取坐标做中心差分

    Args:
        objective: 读取arrays当前值计算标量目标的闭包
        arrays: 被扰动的数组（原地修改后复原）
        analytic: 与arrays一一对应的解析梯度
        rng: 随机数发生器
        coordinates: 抽样坐标数（有放回）
        h: 差分步长

    Returns:
        最大相对误差
    """
    sizes = np.array([a.size for a in arrays], dtype=np.float64)
    worst = 0.0
    for _ in range(coordinates):
        which = int(rng.choice(len(arrays), p=sizes / sizes.sum()))
        index = int(rng.integers(arrays[which].size))
        target = arrays[which].reshape(-1)

        original = target[index]
        target[index] = original + h
        plus = objective()
        target[index] = original - h
        minus = objective()
        target[index] = original

        numeric = (plus - minus) / (2.0 * h)
        worst = max(worst, relative_error(float(analytic[which].reshape(-1)[index]), numeric))
    return worst


# ========== 检验套件 ==========

def _random_layer(rng, in_ch, out_ch, kernel_len, dilation, name) -> ConvLayer:
    return ConvLayer(
        weights=rng.normal(size=(out_ch, in_ch, kernel_len)),
        bias=rng.normal(size=out_ch),
        dilation=dilation,
        name=name,
    )


def _suite_conv(rng, dilation: int) -> float:
    x = SeqTensor(rng.normal(size=(3, 20)))
    layer = _random_layer(rng, 3, 2, 3, dilation, "conv")
    proj = rng.normal(size=(2, 20))

    dx = causal_conv_backward(x, layer, SeqTensor(proj))
    analytic = [dx.data, layer.grad_weights.copy(), layer.grad_bias.copy()]

    def objective():
        return float(np.sum(proj * causal_conv_forward(x, layer).data))

    return check_gradients(objective, [x.data, layer.weights, layer.bias], analytic, rng)


def _suite_relu(rng) -> float:
    x = SeqTensor(rng.normal(size=(4, 30)))
    proj = rng.normal(size=(4, 30))
    dx = relu_backward(x, SeqTensor(proj))

    def objective():
        return float(np.sum(proj * relu(x).data))

    return check_gradients(objective, [x.data], [dx.data], rng)


def _suite_concat_net(rng) -> float:
    """两条卷积支路拼接后再卷积：验证拼接反向把梯度送回正确的支路"""
    x = SeqTensor(rng.normal(size=(2, 16)))
    left = _random_layer(rng, 2, 2, 2, 1, "left")
    right = _random_layer(rng, 2, 3, 3, 2, "right")
    head = _random_layer(rng, 5, 2, 2, 1, "head")
    proj = rng.normal(size=(2, 16))

    def run():
        a = causal_conv_forward(x, left)
        zb = causal_conv_forward(x, right)
        c = concat_channels(a, relu(zb))
        return a, zb, c, causal_conv_forward(c, head)

    _, zb, c, _ = run()
    dc = causal_conv_backward(c, head, SeqTensor(proj))
    da, db = concat_backward(dc, 2)
    dx = causal_conv_backward(x, left, da)
    dx_right = causal_conv_backward(x, right, relu_backward(zb, db))
    analytic = [
        dx.data + dx_right.data,
        left.grad_weights.copy(), right.grad_weights.copy(), head.grad_weights.copy(),
    ]

    def objective():
        return float(np.sum(proj * run()[3].data))

    return check_gradients(objective, [x.data, left.weights, right.weights, head.weights], analytic, rng)


def _suite_pool_upsample(rng) -> float:
    x = SeqTensor(rng.normal(size=(2, 15)))
    proj = rng.normal(size=(2, 15))

    pooled, argmax = maxpool2(x)
    grad_pooled = upsample2_zeros_backward(SeqTensor(proj))
    dx = maxpool2_backward(grad_pooled, argmax, x.length)

    def objective():
        return float(np.sum(proj * upsample2_zeros(maxpool2(x)[0], x.length).data))

    return check_gradients(objective, [x.data], [dx.data], rng)


def _suite_delay(rng) -> float:
    x = SeqTensor(rng.normal(size=(2, 12)))
    proj = rng.normal(size=(2, 12))
    dx = delay_backward(SeqTensor(proj))

    def objective():
        return float(np.sum(proj * delay(x).data))

    return check_gradients(objective, [x.data], [dx.data], rng)


def _suite_loss(rng, kind: LossKind) -> float:
    y = SeqTensor(rng.normal(size=(4, 10)))
    if kind is LossKind.SQUARED_ERROR:
        target = rng.normal(size=(4, 10))
    elif kind is LossKind.SOFTMAX_CROSS_ENTROPY:
        target = rng.integers(0, 4, size=10)
    else:
        target = rng.integers(0, 2, size=(4, 10)).astype(np.float64)

    _, grad = loss_eval(kind, y, target)

    def objective():
        return loss_eval(kind, y, target)[0]

    return check_gradients(objective, [y.data], [grad.data], rng)


def _suite_network(rng, variant: str, seed: int) -> float:
    config = NetworkConfig(
        variant=variant, levels=2, filters_per_level=3, kernel_len=2,
        in_channels=1, out_channels=2, loss=LossKind.SQUARED_ERROR,
    )
    net = build_network(config, seed=seed)
    # 随机偏置，避免大量单元恰好停在整流拐点
    for layer in net.layers:
        layer.bias[...] = rng.normal(scale=0.1, size=layer.bias.shape)

    x = SeqTensor(rng.normal(size=(1, 12)))
    target = rng.normal(size=(2, 12))

    net.zero_grad()
    _, grad_y = loss_eval(config.loss, net.forward(x), target)
    net.backward(grad_y)

    params = net.parameters()
    names = list(params)
    analytic = [net.gradients()[name].copy() for name in names]

    def objective():
        return loss_eval(config.loss, net.forward(x), target)[0]

    return check_gradients(objective, [params[n] for n in names], analytic, rng)


def run_gradcheck(seed: int = 0) -> GradCheckReport:
    """
    运行全部检验套件

    Args:
        seed: 随机种子

    Returns:
        GradCheckReport
    """
    rng = np.random.default_rng(seed)
    suites = [
        ("conv", lambda: _suite_conv(rng, 1)),
        ("conv_dilated", lambda: _suite_conv(rng, 4)),
        ("relu", lambda: _suite_relu(rng)),
        ("concat_net", lambda: _suite_concat_net(rng)),
        ("maxpool_upsample", lambda: _suite_pool_upsample(rng)),
        ("delay", lambda: _suite_delay(rng)),
        ("loss_squared", lambda: _suite_loss(rng, LossKind.SQUARED_ERROR)),
        ("loss_softmax", lambda: _suite_loss(rng, LossKind.SOFTMAX_CROSS_ENTROPY)),
        ("loss_sigmoid", lambda: _suite_loss(rng, LossKind.SIGMOID_CROSS_ENTROPY)),
        ("net_ufcnn", lambda: _suite_network(rng, "ufcnn", seed)),
        ("net_fcn", lambda: _suite_network(rng, "fcn", seed)),
    ]

    report = GradCheckReport()
    for name, suite in suites:
        err = suite()
        report.results.append(SuiteResult(name, MIN_COORDINATES, err))
        logger.info(f"梯度检验: suite={name}, max_rel_err={err:.3e}")

    return report
