#!/usr/bin/env python3
"""
网络拓扑

功能：
- NetworkConfig：架构描述（变体、分辨率层数、每层滤波器数、卷积核长度）
- 组装UFCNN（非抽取，滤波器按 2^(ℓ−1) 空洞化）与FCN（最大池化 + 插零上采样）
- 整网前向 / 反向
- 感受野与参数量公式

连线：
    e₁ = relu(H₁ x)，e_ℓ = relu(H_ℓ e_{ℓ−1})
    d_L = relu(G_L e_L)，d_ℓ = relu(G_ℓ [e_ℓ ; d_{ℓ+1}])，ℓ = L−1 … 1
    y = G₀ d₁（线性输出，核长1）
fcn变体在每个 H_ℓ（ℓ>1）前做 延迟1步 + 2倍池化，
在每次拼接前把 d_{ℓ+1} 插零上采样到 e_ℓ 的长度。
"""

from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Tuple, Union
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from core.config import validate_model
from core.errors import ConfigurationError, StateError
from core.layers import ConvLayer, causal_conv_backward, causal_conv_forward
from core.losses import LossKind
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

logger = logging.getLogger(__name__)

OUTPUT_KERNEL_LEN = 1


class NetworkConfig(BaseModel):
    """网络架构配置"""
    model_config = ConfigDict(frozen=True, use_enum_values=False)

    variant: Literal["ufcnn", "fcn"] = "ufcnn"
    levels: int = Field(3, ge=1)
    filters_per_level: int = Field(16, ge=1)
    kernel_len: int = Field(5, ge=1)
    in_channels: int = Field(1, ge=1)
    out_channels: int = Field(1, ge=1)
    loss: LossKind = LossKind.SQUARED_ERROR

    def dilation(self, level: int) -> int:
        """第level层（从1开始）的空洞率"""
        return 2 ** (level - 1) if self.variant == "ufcnn" else 1

    def min_length(self) -> int:
        """fcn变体要经受 L−1 次减半所需的最短输入长度"""
        return 2 ** (self.levels - 1) if self.variant == "fcn" else 1


def receptive_field(config: Union[NetworkConfig, dict]) -> int:
    """
    UFCNN感受野：1 + 2(K−1)(2^L − 1)

    编码器与解码器各贡献 Σ_ℓ (K−1)·2^(ℓ−1)，G₀ 核长为1不贡献
    """
    config = validate_model(NetworkConfig, config)
    if config.variant != "ufcnn":
        raise ConfigurationError("感受野公式只适用于ufcnn变体")
    k = config.kernel_len
    return 1 + 2 * (k - 1) * (2 ** config.levels - 1) + (OUTPUT_KERNEL_LEN - 1)


def parameter_count(config: Union[NetworkConfig, dict]) -> int:
    """参数总数（随层数线性增长）"""
    config = validate_model(NetworkConfig, config)
    f, k, levels = config.filters_per_level, config.kernel_len, config.levels
    encoder = (config.in_channels * f * k + f) + (levels - 1) * (f * f * k + f)
    decoder = (f * f * k + f) + (levels - 1) * (2 * f * f * k + f)
    output = f * config.out_channels * OUTPUT_KERNEL_LEN + config.out_channels
    return encoder + decoder + output


@dataclass
class _ForwardCache:
    """反向传播所需的前向中间量"""
    enc_inputs: List[SeqTensor] = field(default_factory=list)
    enc_pre: List[SeqTensor] = field(default_factory=list)
    pools: Dict[int, Tuple[np.ndarray, int]] = field(default_factory=dict)
    dec_inputs: Dict[int, SeqTensor] = field(default_factory=dict)
    dec_pre: Dict[int, SeqTensor] = field(default_factory=dict)
    out_input: Optional[SeqTensor] = None


class Network:
    """组装好的UFCNN / FCN"""

    def __init__(
        self,
        config: NetworkConfig,
        encoder: List[ConvLayer],
        decoder: Dict[int, ConvLayer],
        output: ConvLayer
    ):
        """
        Args:
            config: 架构配置
            encoder: H₁ … H_L
            decoder: 层号 → G_ℓ
            output: G₀
        """
        self.config = config
        self.encoder = encoder
        self.decoder = decoder
        self.output = output
        self.input_grad: Optional[SeqTensor] = None
        self._cache: Optional[_ForwardCache] = None

    @property
    def layers(self) -> List[ConvLayer]:
        """按 H₁…H_L, G_L…G₁, G₀ 顺序排列的所有层"""
        levels = self.config.levels
        return self.encoder + [self.decoder[ell] for ell in range(levels, 0, -1)] + [self.output]

    def parameters(self) -> Dict[str, np.ndarray]:
        params: Dict[str, np.ndarray] = {}
        for layer in self.layers:
            params.update(layer.parameters())
        return params

    def gradients(self) -> Dict[str, np.ndarray]:
        grads: Dict[str, np.ndarray] = {}
        for layer in self.layers:
            grads.update(layer.gradients())
        return grads

    def zero_grad(self):
        for layer in self.layers:
            layer.zero_grad()

    def parameter_count(self) -> int:
        return sum(layer.parameter_count() for layer in self.layers)

    def receptive_field(self) -> int:
        """由各层跨度求得的感受野（最长路径经过所有层）"""
        return 1 + sum(layer.span for layer in self.layers)

    def snapshot(self) -> Dict[str, np.ndarray]:
        return {name: value.copy() for name, value in self.parameters().items()}

    def load_parameters(self, values: Dict[str, np.ndarray]):
        """按名称原地写入参数"""
        params = self.parameters()
        missing = set(params) - set(values)
        if missing:
            raise ConfigurationError(f"缺少参数: {sorted(missing)}")
        for name, target in params.items():
            source = np.asarray(values[name], dtype=np.float64)
            if source.size != target.size:
                raise ConfigurationError(f"参数{name}大小不符: {source.size} != {target.size}")
            target[...] = source.reshape(target.shape)

    # ========== 前向 ==========

    def forward(self, x: SeqTensor) -> SeqTensor:
        """
        整网前向

        Args:
            x: in_channels × T 输入

        Returns:
            out_channels × T 输出
        """
        config = self.config
        if x.channels != config.in_channels:
            raise ConfigurationError(f"输入通道数{x.channels}与网络定义{config.in_channels}不符")
        if x.length < config.min_length():
            raise ConfigurationError(
                f"输入长度{x.length}不足以经受{config.levels - 1}次池化 (至少{config.min_length()})"
            )

        decimated = config.variant == "fcn"
        cache = _ForwardCache()

        # 1. 编码器
        h = x
        encoded: List[SeqTensor] = []
        for ell, layer in enumerate(self.encoder, start=1):
            if decimated and ell > 1:
                pooled, argmax = maxpool2(delay(h))
                cache.pools[ell] = (argmax, h.length)
                h = pooled
            z = causal_conv_forward(h, layer)
            cache.enc_inputs.append(h)
            cache.enc_pre.append(z)
            h = relu(z)
            encoded.append(h)

        # 2. 解码器（从最深层向上）
        d: Optional[SeqTensor] = None
        for ell in range(config.levels, 0, -1):
            skip = encoded[ell - 1]
            if ell == config.levels:
                inp = skip
            else:
                up = upsample2_zeros(d, skip.length) if decimated else d
                inp = concat_channels(skip, up)
            z = causal_conv_forward(inp, self.decoder[ell])
            cache.dec_inputs[ell] = inp
            cache.dec_pre[ell] = z
            d = relu(z)

        # 3. 线性输出层
        cache.out_input = d
        self._cache = cache
        return causal_conv_forward(d, self.output)

    # ========== 反向 ==========

    def backward(self, dL_dy: SeqTensor):
        """
        整网反向，参数梯度累加到各层缓冲；输入梯度存入 input_grad

        Args:
            dL_dy: 对网络输出的梯度
        """
        cache = self._cache
        if cache is None:
            raise StateError("backward之前必须先调用forward")

        config = self.config
        levels = config.levels
        decimated = config.variant == "fcn"
        width = config.filters_per_level

        grad_d = causal_conv_backward(cache.out_input, self.output, dL_dy)

        # 解码器：G₁ → G_L，沿途得到 e_ℓ 与 d_{ℓ+1} 的梯度
        grad_enc: List[Optional[np.ndarray]] = [None] * levels
        for ell in range(1, levels + 1):
            grad_z = relu_backward(cache.dec_pre[ell], grad_d)
            grad_in = causal_conv_backward(cache.dec_inputs[ell], self.decoder[ell], grad_z)
            if ell == levels:
                grad_enc[ell - 1] = _accumulate(grad_enc[ell - 1], grad_in.data)
            else:
                grad_skip, grad_up = concat_backward(grad_in, width)
                grad_enc[ell - 1] = _accumulate(grad_enc[ell - 1], grad_skip.data)
                grad_d = upsample2_zeros_backward(grad_up) if decimated else grad_up

        # 编码器：H_L → H₁
        grad_h = SeqTensor(grad_enc[levels - 1])
        for ell in range(levels, 0, -1):
            grad_z = relu_backward(cache.enc_pre[ell - 1], grad_h)
            grad_in = causal_conv_backward(cache.enc_inputs[ell - 1], self.encoder[ell - 1], grad_z)
            if ell == 1:
                self.input_grad = grad_in
                break
            if decimated:
                argmax, pre_len = cache.pools[ell]
                grad_in = delay_backward(maxpool2_backward(grad_in, argmax, pre_len))
            grad_h = SeqTensor(grad_enc[ell - 2] + grad_in.data)

    def __repr__(self) -> str:
        c = self.config
        return (f"Network(variant={c.variant}, levels={c.levels}, "
                f"filters={c.filters_per_level}, kernel_len={c.kernel_len})")


def _accumulate(total: Optional[np.ndarray], value: np.ndarray) -> np.ndarray:
    return value.copy() if total is None else total + value


def build_network(config: Union[NetworkConfig, dict], seed: int = 0) -> Network:
    """
    按配置组装网络并初始化参数

    权重 ~ N(0, 2 / (输入通道数 × 核长))，偏置为0；给定seed结果确定

    Args:
        config: 架构配置
        seed: 随机种子

    Returns:
        Network实例
    """
    config = validate_model(NetworkConfig, config)
    rng = np.random.default_rng(seed)
    f, k = config.filters_per_level, config.kernel_len

    def make(name: str, in_ch: int, out_ch: int, kernel_len: int, dilation: int) -> ConvLayer:
        std = np.sqrt(2.0 / (in_ch * kernel_len))
        return ConvLayer(
            weights=rng.normal(0.0, std, size=(out_ch, in_ch, kernel_len)),
            bias=np.zeros(out_ch),
            dilation=dilation,
            name=name,
        )

    encoder = []
    for ell in range(1, config.levels + 1):
        in_ch = config.in_channels if ell == 1 else f
        encoder.append(make(f"H{ell}", in_ch, f, k, config.dilation(ell)))

    decoder = {}
    for ell in range(config.levels, 0, -1):
        in_ch = f if ell == config.levels else 2 * f
        decoder[ell] = make(f"G{ell}", in_ch, f, k, config.dilation(ell))

    output = make("G0", f, config.out_channels, OUTPUT_KERNEL_LEN, 1)

    net = Network(config, encoder, decoder, output)
    logger.info(f"网络已构建: {net}, 参数量={net.parameter_count()}, seed={seed}")
    return net


def forward(net: Network, x: SeqTensor) -> SeqTensor:
    """整网前向"""
    return net.forward(x)


def backward(net: Network, dL_dy: SeqTensor):
    """整网反向"""
    net.backward(dL_dy)
