import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opident.errors import InvalidInputError, ShapeError
from opident.mlp import (
    Activation,
    Network,
    NetworkConfig,
    activation,
    activation_derivative,
    forward,
    init_weights,
    predict,
)

TANH_1 = 0.7615941559557649  # tanh(1) to double precision


def toy_net():
    # 1 input -> 1 tansig hidden (weight 2, bias -1) -> 1 linear output (weight 3, bias 0.5)
    cfg = NetworkConfig(1, [(1, "tansig")])
    return Network(cfg, (np.array([[-1.0, 2.0]]), np.array([[0.5, 3.0]])))


class TestActivation:
    def test_values(self):
        assert activation("tansig", 0.0) == 0.0
        assert activation("logsig", 0.0) == 0.5
        assert activation("tansig", 1.0) == pytest.approx(TANH_1, abs=1e-15)
        assert activation("linear", -3.25) == -3.25

    def test_derivatives(self):
        assert activation_derivative("logsig", 0.0, 0.5) == 0.25
        assert activation_derivative("tansig", 0.0, 0.0) == 1.0
        assert activation_derivative("linear", 7.3, 7.3) == 1.0

    @pytest.mark.parametrize("kind", ["tansig", "logsig", "linear"])
    def test_non_finite_rejected(self, kind):
        with pytest.raises(InvalidInputError):
            activation(kind, math.nan)
        with pytest.raises(InvalidInputError):
            activation(kind, math.inf)

    @given(st.floats(-30, 30))
    def test_codomains(self, v):
        assert -1.0 <= activation("tansig", v) <= 1.0
        assert 0.0 <= activation("logsig", v) <= 1.0

    @given(st.floats(-5, 5))
    def test_derivative_matches_central_difference(self, v):
        h = 1e-6
        for kind in ("tansig", "logsig"):
            y = activation(kind, v)
            fd = (activation(kind, v + h) - activation(kind, v - h)) / (2 * h)
            assert activation_derivative(kind, v, y) == pytest.approx(fd, abs=1e-8)

    def test_parse_rejects_unknown(self):
        with pytest.raises(InvalidInputError):
            Activation.parse("relu")


class TestConfig:
    def test_shapes(self):
        cfg = NetworkConfig(4, [(5, "tansig")])
        assert cfg.weight_shapes == [(5, 5), (1, 6)]
        assert cfg.n_weights == 31

    def test_linear_hidden_rejected(self):
        with pytest.raises(InvalidInputError):
            NetworkConfig(2, [(3, "linear")])

    def test_no_hidden_rejected(self):
        with pytest.raises(InvalidInputError):
            NetworkConfig(2, [])

    def test_dict_round_trip(self):
        cfg = NetworkConfig(3, [(5, "tansig"), (5, "logsig")], output_activation="logsig")
        assert NetworkConfig.from_dict(cfg.to_dict()) == cfg


class TestInit:
    def test_determinism(self):
        cfg = NetworkConfig(4, [(15, "tansig"), (15, "logsig")])
        assert init_weights(cfg, 7) == init_weights(cfg, 7)
        assert init_weights(cfg, 7) != init_weights(cfg, 8)

    def test_range(self):
        cfg = NetworkConfig(4, [(25, "tansig"), (10, "logsig")])
        net = init_weights(cfg, (3, 1, 4))
        for w in net.weights:
            bound = 1.0 / math.sqrt(w.shape[1])
            assert np.all(np.abs(w) <= bound)

    def test_weights_read_only(self):
        net = init_weights(NetworkConfig(2, [(3, "tansig")]), 0)
        with pytest.raises(ValueError):
            net.weights[0][0, 0] = 1.0

    def test_bad_shape_rejected(self):
        cfg = NetworkConfig(1, [(1, "tansig")])
        with pytest.raises(ShapeError):
            Network(cfg, (np.zeros((1, 3)), np.zeros((1, 2))))


class TestForward:
    def test_collapsed_example(self):
        trace = forward(toy_net(), [0.5])
        assert trace.fields[0][0] == 0.0
        assert trace.outputs[1][1] == 0.0
        assert abs(trace.output[0] - 0.5) <= 1e-12

    def test_hand_computed_example(self):
        trace = forward(toy_net(), [1.0])
        assert trace.fields[0][0] == 1.0
        assert trace.outputs[1][1] == pytest.approx(0.761594, abs=1e-6)
        oracle = 0.5 + 3.0 * math.tanh(1.0)
        assert abs(trace.output[0] - oracle) <= 1e-15
        assert abs(trace.output[0] - 2.784782) <= 1e-6

    def test_zero_weights_logsig_output(self):
        cfg = NetworkConfig(3, [(4, "tansig")], output_activation="logsig")
        net = Network(cfg, tuple(np.zeros(s) for s in cfg.weight_shapes))
        assert predict(net, [0.3, 0.1, 0.9]) == 0.5

    def test_predict_matches_forward(self):
        net = toy_net()
        for x in (0.5, 1.0, -0.2):
            assert predict(net, [x]) == forward(net, [x]).output[0]

    def test_batch_equals_rowwise(self, rng):
        net = init_weights(NetworkConfig(4, [(5, "tansig"), (5, "logsig")]), 3)
        x = rng.uniform(0, 1, (20, 4))
        batch = predict(net, x)
        assert batch.shape == (20,)
        np.testing.assert_allclose(batch, [predict(net, row) for row in x], rtol=1e-14, atol=1e-16)

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            forward(toy_net(), [1.0, 2.0])

    def test_bias_column_equivalence(self, rng):
        # dropping the bias column and feeding an explicit constant-1 input gives the same output
        cfg = NetworkConfig(3, [(6, "tansig")])
        net = init_weights(cfg, 11)
        w1, w2 = net.weights
        cfg_nb = NetworkConfig(4, [(6, "tansig")])
        w1_nb = np.hstack([np.zeros((6, 1)), w1[:, 1:], w1[:, :1]])
        alt = Network(cfg_nb, (w1_nb, w2))
        for _ in range(20):
            x = rng.uniform(-1, 1, 3)
            assert predict(alt, np.append(x, 1.0)) == pytest.approx(predict(net, x), rel=1e-14, abs=1e-15)

    def test_hidden_outputs_in_codomain(self, rng):
        net = init_weights(NetworkConfig(2, [(8, "tansig"), (8, "logsig")]), 5)
        trace = forward(net, rng.uniform(-3, 3, 2))
        assert np.all(np.abs(trace.outputs[1][1:]) < 1)
        assert np.all((trace.outputs[2][1:] > 0) & (trace.outputs[2][1:] < 1))
        assert np.all(trace.outputs[1][0] == 1.0)


class TestSerialization:
    def test_json_round_trip_bit_exact(self, tmp_path):
        net = init_weights(NetworkConfig(4, [(15, "tansig"), (15, "logsig")]), 99)
        path = tmp_path / "net.json"
        net.save(path)
        again = Network.load(path)
        assert again == net
        for a, b in zip(net.weights, again.weights):
            assert a.tobytes() == b.tobytes()
        doc = json.loads(path.read_text())
        assert doc["config"] == net.config.to_dict()

    @settings(max_examples=50)
    @given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=9, max_size=9))
    def test_flat_round_trip(self, values):
        cfg = NetworkConfig(2, [(2, "logsig")])
        vec = np.array(values)
        net = Network.from_flat(cfg, vec)
        assert Network.from_dict(json.loads(json.dumps(net.to_dict()))) == net
