"""
时序张量、卷积层与损失函数测试
"""

import math

import numpy as np
import pytest

from core.errors import ConfigurationError, DataError
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
from conftest import seq


def conv(weights, dilation=1, bias=0.0):
    w = np.asarray(weights, dtype=np.float64).reshape(1, 1, -1)
    return ConvLayer(weights=w, bias=np.array([bias]), dilation=dilation)


class TestSeqTensor:

    def test_promotes_1d(self):
        x = SeqTensor(np.array([1.0, 2.0, 3.0]))
        assert x.shape == (1, 3)
        assert x.channels == 1 and x.length == 3

    def test_rejects_empty(self):
        with pytest.raises(ConfigurationError):
            SeqTensor(np.zeros((2, 0)))

    def test_copy_is_independent(self):
        x = seq([1, 2])
        y = x.copy()
        y.data[0, 0] = 9
        assert x.data[0, 0] == 1


class TestCausalConv:

    def test_identity_kernel(self):
        y = causal_conv_forward(seq([1, 2, 3, 4]), conv([1]))
        np.testing.assert_array_equal(y.data, [[1, 2, 3, 4]])

    def test_two_tap_kernel(self):
        y = causal_conv_forward(seq([1, 2, 3, 4]), conv([1, 1]))
        np.testing.assert_array_equal(y.data, [[1, 3, 5, 7]])

    def test_dilated_kernel(self):
        y = causal_conv_forward(seq([1, 2, 3, 4]), conv([1, 1], dilation=2))
        np.testing.assert_array_equal(y.data, [[1, 2, 4, 6]])

    def test_rejects_non_power_of_two_dilation(self):
        with pytest.raises(ConfigurationError):
            conv([1, 1], dilation=3)

    def test_rejects_channel_mismatch(self):
        with pytest.raises(ConfigurationError):
            causal_conv_forward(SeqTensor(np.ones((2, 4))), conv([1]))

    def test_output_length_preserved(self, rng):
        layer = ConvLayer(rng.normal(size=(3, 2, 5)), rng.normal(size=3), dilation=8)
        y = causal_conv_forward(SeqTensor(rng.normal(size=(2, 7))), layer)
        assert y.shape == (3, 7)

    def test_causal(self, rng):
        layer = ConvLayer(rng.normal(size=(2, 2, 3)), rng.normal(size=2), dilation=2)
        x = SeqTensor(rng.normal(size=(2, 20)))
        x2 = x.copy()
        x2.data[:, 10] += 1.0
        y, y2 = causal_conv_forward(x, layer), causal_conv_forward(x2, layer)
        np.testing.assert_array_equal(y.data[:, :10], y2.data[:, :10])
        assert not np.array_equal(y.data[:, 10:], y2.data[:, 10:])

    def test_backward_zero_upstream(self, rng):
        layer = ConvLayer(rng.normal(size=(2, 3, 3)), rng.normal(size=2))
        x = SeqTensor(rng.normal(size=(3, 8)))
        dx = causal_conv_backward(x, layer, SeqTensor.zeros(2, 8))
        assert not dx.data.any()
        assert not layer.grad_weights.any()
        assert not layer.grad_bias.any()

    def test_backward_hand_case(self):
        layer = conv([2])
        dx = causal_conv_backward(seq([3, 4]), layer, seq([1, 1]))
        np.testing.assert_array_equal(dx.data, [[2, 2]])
        np.testing.assert_array_equal(layer.grad_weights.reshape(-1), [7])
        np.testing.assert_array_equal(layer.grad_bias, [2])

    def test_backward_accumulates(self, rng):
        layer = ConvLayer(rng.normal(size=(2, 2, 2)), rng.normal(size=2), dilation=2)
        x = SeqTensor(rng.normal(size=(2, 6)))
        dy = SeqTensor(rng.normal(size=(2, 6)))
        causal_conv_backward(x, layer, dy)
        once = layer.grad_weights.copy()
        causal_conv_backward(x, layer, dy)
        np.testing.assert_allclose(layer.grad_weights, 2 * once)
        layer.zero_grad()
        assert not layer.grad_weights.any()


class TestRelu:

    def test_forward(self):
        np.testing.assert_array_equal(relu(seq([-1, 0, 2])).data, [[0, 0, 2]])

    def test_nonnegative_identity(self):
        x = seq([0.5, 3, 0])
        np.testing.assert_array_equal(relu(x).data, x.data)

    def test_backward_gate(self):
        np.testing.assert_array_equal(relu_backward(seq([-1, 2]), seq([5, 5])).data, [[0, 5]])

    def test_backward_zero_at_kink(self):
        np.testing.assert_array_equal(relu_backward(seq([0.0]), seq([3.0])).data, [[0.0]])


class TestConcat:

    def test_rows_order(self, rng):
        a = SeqTensor(rng.normal(size=(2, 5)))
        b = SeqTensor(rng.normal(size=(3, 5)))
        c = concat_channels(a, b)
        assert c.shape == (5, 5)
        np.testing.assert_array_equal(c.data[:2], a.data)
        np.testing.assert_array_equal(c.data[2:], b.data)

    def test_backward_splits(self, rng):
        a = SeqTensor(rng.normal(size=(2, 5)))
        b = SeqTensor(rng.normal(size=(3, 5)))
        da, db = concat_backward(concat_channels(a, b), 2)
        np.testing.assert_array_equal(da.data, a.data)
        np.testing.assert_array_equal(db.data, b.data)

    def test_length_mismatch(self):
        with pytest.raises(ConfigurationError):
            concat_channels(seq([1, 2]), seq([1, 2, 3]))


class TestPoolingAndUpsampling:

    def test_maxpool_tie_takes_earlier(self):
        y, argmax = maxpool2(seq([1, 3, 2, 2]))
        np.testing.assert_array_equal(y.data, [[3, 2]])
        np.testing.assert_array_equal(argmax, [[1, 2]])

    def test_maxpool_constant(self):
        y, _ = maxpool2(seq([4, 4, 4, 4, 4, 4]))
        np.testing.assert_array_equal(y.data, [[4, 4, 4]])

    def test_maxpool_odd_tail(self):
        y, argmax = maxpool2(seq([5, 1, 4]))
        np.testing.assert_array_equal(y.data, [[5, 4]])
        np.testing.assert_array_equal(argmax, [[0, 2]])

    def test_maxpool_backward_routes_to_argmax(self):
        _, argmax = maxpool2(seq([1, 3, 2, 2, 7]))
        dx = maxpool2_backward(seq([10, 20, 30]), argmax, 5)
        np.testing.assert_array_equal(dx.data, [[0, 10, 20, 0, 30]])

    def test_upsample_even_target(self):
        np.testing.assert_array_equal(upsample2_zeros(seq([1, 2]), 4).data, [[1, 0, 2, 0]])

    def test_upsample_odd_target(self):
        np.testing.assert_array_equal(upsample2_zeros(seq([1, 2]), 3).data, [[1, 0, 2]])

    def test_upsample_rejects_bad_target(self):
        with pytest.raises(ConfigurationError):
            upsample2_zeros(seq([1, 2]), 6)

    def test_upsample_backward_reads_even(self):
        np.testing.assert_array_equal(upsample2_zeros_backward(seq([1, 2, 3, 4, 5])).data, [[1, 3, 5]])

    def test_delay(self):
        np.testing.assert_array_equal(delay(seq([1, 2, 3])).data, [[0, 1, 2]])
        np.testing.assert_array_equal(delay_backward(seq([1, 2, 3])).data, [[2, 3, 0]])


class TestLosses:

    def test_squared_error_perfect(self, rng):
        y = SeqTensor(rng.normal(size=(2, 6)))
        loss, grad = loss_eval(LossKind.SQUARED_ERROR, y, y.data.copy())
        assert loss == 0.0
        assert not grad.data.any()

    def test_squared_error_per_step(self):
        loss, grad = loss_eval(LossKind.SQUARED_ERROR, SeqTensor(np.array([[1.0, 3.0], [0.0, 0.0]])),
                               np.array([[0.0, 1.0], [2.0, 0.0]]))
        assert loss == pytest.approx((1 + 4 + 4) / 2)
        np.testing.assert_allclose(grad.data, [[1.0, 2.0], [-2.0, 0.0]])

    def test_softmax_two_classes(self):
        loss, grad = loss_eval(LossKind.SOFTMAX_CROSS_ENTROPY, SeqTensor(np.zeros((2, 1))), np.array([0]))
        assert loss == pytest.approx(math.log(2))
        np.testing.assert_allclose(grad.data, [[-0.5], [0.5]])

    def test_softmax_large_logits_stable(self):
        y = SeqTensor(np.array([[1000.0], [0.0]]))
        loss, _ = loss_eval(LossKind.SOFTMAX_CROSS_ENTROPY, y, np.array([0]))
        assert loss == pytest.approx(0.0, abs=1e-12)

    def test_softmax_class_out_of_range(self):
        with pytest.raises(DataError):
            loss_eval(LossKind.SOFTMAX_CROSS_ENTROPY, SeqTensor(np.zeros((3, 2))), np.array([0, 3]))

    def test_sigmoid_logit_zero(self):
        loss, grad = loss_eval(LossKind.SIGMOID_CROSS_ENTROPY, SeqTensor(np.zeros((1, 1))), np.ones((1, 1)))
        assert loss == pytest.approx(math.log(2))
        np.testing.assert_allclose(grad.data, [[-0.5]])

    def test_sigmoid_rejects_soft_targets(self):
        with pytest.raises(DataError):
            loss_eval(LossKind.SIGMOID_CROSS_ENTROPY, SeqTensor(np.zeros((1, 2))), np.array([[0.5, 1.0]]))

    def test_shape_mismatch(self):
        with pytest.raises(ConfigurationError):
            loss_eval(LossKind.SQUARED_ERROR, SeqTensor(np.zeros((2, 3))), np.zeros((2, 4)))
