"""
网络拓扑、检查点与梯度检验测试
"""

import numpy as np
import pytest

from core.errors import ConfigurationError, DataError, StateError
from core.losses import LossKind, loss_eval
from core.tensor import SeqTensor
from network.checkpoint import CheckpointManager, load_checkpoint, save_checkpoint
from network.graph import NetworkConfig, build_network, parameter_count, receptive_field
from training.gradcheck import TOLERANCE, run_gradcheck


class TestConfig:

    @pytest.mark.parametrize("levels,expected", [(1, 9), (2, 25), (3, 57), (4, 121)])
    def test_receptive_field_law(self, levels, expected):
        assert receptive_field(NetworkConfig(levels=levels, kernel_len=5)) == expected

    @pytest.mark.parametrize("levels", [1, 3, 6])
    def test_pointwise_filters_have_no_memory(self, levels):
        assert receptive_field(NetworkConfig(levels=levels, kernel_len=1)) == 1

    def test_receptive_field_matches_layer_spans(self):
        config = NetworkConfig(levels=3, kernel_len=5, filters_per_level=2)
        assert build_network(config).receptive_field() == receptive_field(config)

    def test_receptive_field_rejects_fcn(self):
        with pytest.raises(ConfigurationError):
            receptive_field(NetworkConfig(variant="fcn"))

    def test_parameter_count_affine_in_levels(self):
        counts = [parameter_count(NetworkConfig(levels=l, filters_per_level=8, kernel_len=5)) for l in range(1, 6)]
        steps = np.diff(counts)
        assert np.all(steps == steps[0])

    @pytest.mark.parametrize("variant", ["ufcnn", "fcn"])
    def test_parameter_count_matches_arrays(self, variant):
        config = NetworkConfig(variant=variant, levels=3, filters_per_level=5, kernel_len=3,
                               in_channels=4, out_channels=2)
        assert build_network(config).parameter_count() == parameter_count(config)

    def test_invalid_levels(self):
        with pytest.raises(ConfigurationError):
            build_network({"levels": 0})


class TestBuild:

    def test_dilations(self):
        net = build_network(NetworkConfig(levels=3, filters_per_level=2))
        assert [l.dilation for l in net.encoder] == [1, 2, 4]
        assert [net.decoder[ell].dilation for ell in (3, 2, 1)] == [4, 2, 1]
        assert net.output.dilation == 1 and net.output.kernel_len == 1

    def test_fcn_filters_undilated(self):
        net = build_network(NetworkConfig(variant="fcn", levels=3, filters_per_level=2))
        assert all(layer.dilation == 1 for layer in net.layers)

    def test_same_seed_same_parameters(self):
        config = NetworkConfig(levels=2, filters_per_level=4)
        a, b = build_network(config, seed=7).parameters(), build_network(config, seed=7).parameters()
        for name in a:
            np.testing.assert_array_equal(a[name], b[name])

    def test_he_initialization_variance(self):
        net = build_network(NetworkConfig(levels=2, filters_per_level=100, kernel_len=5), seed=3)
        layer = net.encoder[1]
        expected = 2.0 / (100 * 5)
        assert layer.weights.var() == pytest.approx(expected, rel=0.1)
        assert not net.encoder[0].bias.any()


class TestForward:

    @pytest.mark.parametrize("variant", ["ufcnn", "fcn"])
    def test_zero_network_outputs_zero(self, variant, rng):
        net = build_network(NetworkConfig(variant=variant, levels=2, filters_per_level=3))
        for layer in net.layers:
            layer.weights[...] = 0.0
        y = net.forward(SeqTensor(rng.normal(size=(1, 16))))
        assert not y.data.any()

    @pytest.mark.parametrize("variant", ["ufcnn", "fcn"])
    @pytest.mark.parametrize("levels", [1, 2, 3])
    @pytest.mark.parametrize("length", [7, 64, 5000])
    def test_rate_preserved(self, make_net, variant, levels, length, rng):
        net = make_net(variant=variant, levels=levels, filters=3)
        y = net.forward(SeqTensor(rng.normal(size=(1, length))))
        assert y.shape == (1, length)

    @pytest.mark.parametrize("variant", ["ufcnn", "fcn"])
    @pytest.mark.parametrize("levels", [1, 2, 3])
    def test_causality(self, make_net, variant, levels, rng):
        net = make_net(variant=variant, levels=levels, filters=3)
        x = SeqTensor(rng.normal(size=(1, 64)))
        for t0 in (0, 17, 31, 63):
            perturbed = x.copy()
            perturbed.data[0, t0] += 1.0
            y, y2 = net.forward(x), net.forward(perturbed)
            np.testing.assert_array_equal(y.data[:, :t0], y2.data[:, :t0])

    def test_identity_single_level(self):
        net = build_network(NetworkConfig(levels=1, filters_per_level=1, kernel_len=1))
        for layer in net.layers:
            layer.weights[...] = 1.0
        net.output.weights[...] = 3.0
        y = net.forward(SeqTensor(np.array([[-1.0, 2.0, 0.5]])))
        np.testing.assert_array_equal(y.data, [[0.0, 6.0, 1.5]])

    def test_channel_mismatch(self, make_net):
        with pytest.raises(ConfigurationError):
            make_net(in_channels=2).forward(SeqTensor(np.ones((1, 8))))

    def test_fcn_too_short(self, make_net):
        with pytest.raises(ConfigurationError):
            make_net(variant="fcn", levels=4).forward(SeqTensor(np.ones((1, 7))))

    def test_deterministic(self, make_net, rng):
        x = SeqTensor(rng.normal(size=(1, 50)))
        np.testing.assert_array_equal(make_net(seed=5).forward(x).data, make_net(seed=5).forward(x).data)


class TestShiftEquivariance:

    @pytest.mark.parametrize("levels", [1, 2, 3])
    @pytest.mark.parametrize("shift", [1, 3, 8])
    def test_ufcnn_equivariant(self, make_net, levels, shift, rng):
        net = make_net(levels=levels, filters=3, kernel_len=3)
        x = rng.normal(size=(1, 120))
        shifted = np.zeros_like(x)
        shifted[:, shift:] = x[:, :-shift]
        y = net.forward(SeqTensor(x)).data
        y2 = net.forward(SeqTensor(shifted)).data
        start = shift + net.receptive_field()
        np.testing.assert_allclose(y2[:, start:], y[:, start - shift:-shift], rtol=0, atol=1e-12)

    def test_fcn_not_equivariant(self, make_net):
        broken = False
        for seed in range(5):
            net = make_net(variant="fcn", levels=2, filters=3, kernel_len=3, seed=seed)
            x = np.random.default_rng(seed).normal(size=(1, 120))
            shifted = np.zeros_like(x)
            shifted[:, 1:] = x[:, :-1]
            y = net.forward(SeqTensor(x)).data
            y2 = net.forward(SeqTensor(shifted)).data
            if np.max(np.abs(y2[:, 40:] - y[:, 39:-1])) > 1e-9:
                broken = True
                break
        assert broken

    def test_single_level_variants_identical(self, rng):
        x = SeqTensor(rng.normal(size=(1, 40)))
        outputs = []
        for variant in ("ufcnn", "fcn"):
            config = NetworkConfig(variant=variant, levels=1, filters_per_level=4, kernel_len=5)
            outputs.append(build_network(config, seed=11).forward(x).data)
        np.testing.assert_array_equal(outputs[0], outputs[1])


class TestBackward:

    def test_requires_forward(self, make_net):
        with pytest.raises(StateError):
            make_net().backward(SeqTensor(np.ones((1, 4))))

    @pytest.mark.parametrize("variant", ["ufcnn", "fcn"])
    def test_zero_upstream(self, make_net, variant, rng):
        net = make_net(variant=variant)
        net.forward(SeqTensor(rng.normal(size=(1, 16))))
        net.zero_grad()
        net.backward(SeqTensor.zeros(1, 16))
        assert all(not g.any() for g in net.gradients().values())

    @pytest.mark.parametrize("variant", ["ufcnn", "fcn"])
    def test_two_calls_accumulate(self, make_net, variant, rng):
        net = make_net(variant=variant)
        y = net.forward(SeqTensor(rng.normal(size=(1, 16))))
        _, grad = loss_eval(LossKind.SQUARED_ERROR, y, rng.normal(size=(1, 16)))
        net.zero_grad()
        net.backward(grad)
        once = {k: v.copy() for k, v in net.gradients().items()}
        net.backward(grad)
        for name, value in net.gradients().items():
            np.testing.assert_allclose(value, 2 * once[name])

    @pytest.mark.parametrize("variant", ["ufcnn", "fcn"])
    def test_input_gradient_causal(self, make_net, variant, rng):
        net = make_net(variant=variant, levels=3, filters=3)
        net.forward(SeqTensor(rng.normal(size=(1, 32))))
        upstream = np.zeros((1, 32))
        upstream[0, 10] = 1.0
        net.backward(SeqTensor(upstream))
        assert not net.input_grad.data[:, 11:].any()


class TestGradcheck:

    def test_all_suites_pass(self):
        report = run_gradcheck(seed=1)
        failed = [r.name for r in report.results if not r.passed]
        assert not failed, "\n".join(report.lines())
        assert report.max_rel_err < TOLERANCE
        assert all(r.coordinates >= 100 for r in report.results)

    def test_report_lines(self):
        lines = run_gradcheck(seed=0).lines()
        assert lines[-1].startswith("overall: PASS")
        assert any(line.startswith("net_fcn") for line in lines)


class TestCheckpoint:

    def test_round_trip_bit_exact(self, make_net, tmp_path, rng):
        net = make_net(variant="fcn", levels=3)
        path = save_checkpoint(net, tmp_path / "a.ckpt.json", {"task": "tracking", "input_mean": 0.25})
        loaded, metadata = load_checkpoint(path)
        assert metadata["input_mean"] == 0.25
        assert loaded.config == net.config
        for name, value in net.parameters().items():
            np.testing.assert_array_equal(loaded.parameters()[name], value)
        x = SeqTensor(rng.normal(size=(1, 30)))
        np.testing.assert_array_equal(loaded.forward(x).data, net.forward(x).data)

    def test_bad_version(self, make_net, tmp_path):
        path = save_checkpoint(make_net(), tmp_path / "b.json")
        path.write_text(path.read_text(encoding="utf-8").replace("ufcnn-ckpt-v1", "other"), encoding="utf-8")
        with pytest.raises(DataError):
            load_checkpoint(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_checkpoint(tmp_path / "none.json")

    def test_manager(self, make_net, tmp_path):
        manager = CheckpointManager(tmp_path / "ckpt")
        manager.save(make_net(), "initial", {"task": "tracking"})
        manager.save(make_net(seed=1), "best", {"task": "tracking"})
        assert manager.exists("initial") and manager.exists("best")
        assert {e["name"] for e in manager.list_checkpoints()} == {"initial", "best"}
        net, meta = manager.load("best")
        assert meta["task"] == "tracking"
