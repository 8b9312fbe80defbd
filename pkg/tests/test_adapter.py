import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from deixis.errors import ConfigInvalid, GateClosed, ShapeMismatch
from deixis.hint import (
    ABSENT,
    AdapterParams,
    GateConfig,
    adapter_backward,
    adapter_forward,
    flatten_keypoints,
    layer_norm,
)
from deixis.hint.adapter import gelu, gelu_grad
from deixis.hint.checks import random_case
from oracles import central_difference, layer_norm_loop

ONES, ZEROS = np.ones(63), np.zeros(63)


def test_layer_norm_zero_input():
    np.testing.assert_array_equal(layer_norm(np.zeros(63), ONES, ZEROS), np.zeros(63))


def test_layer_norm_standardizes():
    x = np.random.default_rng(0).normal(3.0, 2.0, 63)
    y = layer_norm(x, ONES, ZEROS)
    assert y.mean() == pytest.approx(0.0, abs=1e-12)
    assert y.var() == pytest.approx(1.0, abs=1e-5)


@settings(max_examples=100, deadline=None)
@given(x=arrays(np.float64, 63, elements=st.floats(-10, 10)),
       gain=arrays(np.float64, 63, elements=st.floats(-2, 2)),
       bias=arrays(np.float64, 63, elements=st.floats(-2, 2)))
def test_layer_norm_matches_loop(x, gain, bias):
    np.testing.assert_allclose(layer_norm(x, gain, bias), layer_norm_loop(list(x), list(gain), list(bias)), atol=1e-9)


def test_gelu_known_values():
    assert gelu(np.array(0.0)) == 0.0
    assert gelu(np.array(10.0)) == pytest.approx(10.0)
    assert gelu(np.array(-10.0)) == pytest.approx(0.0, abs=1e-12)


def test_gelu_grad_matches_difference():
    x = np.linspace(-4, 4, 81)
    fd = (gelu(x + 1e-6) - gelu(x - 1e-6)) / 2e-6
    np.testing.assert_allclose(gelu_grad(x), fd, atol=1e-8)


def test_flatten_is_keypoint_major():
    K = np.arange(63.0).reshape(21, 3)
    np.testing.assert_array_equal(flatten_keypoints(K), np.arange(63.0))
    with pytest.raises(ShapeMismatch):
        flatten_keypoints(np.zeros((20, 3)))
    centered = flatten_keypoints(K, normalize=True)
    assert tuple(centered[:3]) == (0, 0, 0)


def test_gate_closed_gives_absent_token():
    params = AdapterParams.init(8, 16)
    tok = adapter_forward(params, np.ones((21, 3)), 0.3, GateConfig(0.5))
    assert tok is ABSENT and not tok.present


def test_gate_boundary_is_inclusive():
    params = AdapterParams.init(8, 16)
    tok = adapter_forward(params, np.random.default_rng(0).normal(size=(21, 3)), 0.5, GateConfig(0.5))
    assert tok.present and tok.value.shape == (16,)


def test_zero_keypoints_give_zero_vector():
    params = AdapterParams.init(8, 16, seed=3)
    tok = adapter_forward(params, np.zeros((21, 3)), 1.0)
    np.testing.assert_array_equal(tok.value, np.zeros(16))


def test_token_records_keypoints():
    K = np.random.default_rng(1).normal(size=(21, 3))
    tok = adapter_forward(AdapterParams.init(4, 8), K, 0.9)
    np.testing.assert_array_equal(tok.keypoints, K)


def test_forward_rejects_bad_input():
    params = AdapterParams.init(4, 8)
    with pytest.raises(ValueError):
        adapter_forward(params, np.zeros((21, 3)), 1.5)
    bad = np.zeros((21, 3))
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        adapter_forward(params, bad, 0.9)
    with pytest.raises(ConfigInvalid):
        GateConfig(tau=1.2)


def test_params_shape_checks():
    with pytest.raises(ShapeMismatch):
        AdapterParams(np.zeros((4, 62)), np.zeros((8, 4)), ONES, ZEROS)
    with pytest.raises(ShapeMismatch):
        AdapterParams(np.zeros((4, 63)), np.zeros((8, 5)), ONES, ZEROS)


def test_zero_upstream_gradient():
    params, K = random_case(np.random.default_rng(0))
    g = adapter_backward(params, K, np.zeros(params.d))
    for a in (g.W1, g.W2, g.ln_gain, g.ln_bias, g.K):
        assert not np.any(a)


def test_backward_refuses_closed_gate_and_bad_shape():
    params, K = random_case(np.random.default_rng(0))
    with pytest.raises(GateClosed):
        adapter_backward(params, K, np.ones(params.d), c=0.2, gate=GateConfig(0.5))
    with pytest.raises(ShapeMismatch):
        adapter_backward(params, K, np.ones(params.d + 1))


@pytest.mark.parametrize("seed", range(5))
def test_backward_matches_central_differences(seed):
    rng = np.random.default_rng(seed)
    params, K = random_case(rng)
    up = rng.normal(size=params.d)

    def f_of(name):
        def f(x):
            p = params.replace(**{name: x}) if name != "K" else params
            k = x if name == "K" else K
            return float(up @ adapter_forward(p, k, 1.0).value)
        return f

    grads = adapter_backward(params, K, up)
    for name, base in (("W1", params.W1), ("W2", params.W2), ("ln_gain", params.ln_gain),
                       ("ln_bias", params.ln_bias), ("K", K)):
        fd = central_difference(f_of(name), base)
        np.testing.assert_allclose(getattr(grads, name), fd, rtol=1e-4, atol=1e-9, err_msg=name)


def test_checkpoint_round_trip():
    params = AdapterParams.init(8, 16, seed=5)
    again = AdapterParams.from_dict(params.to_dict())
    K = np.random.default_rng(2).normal(size=(21, 3))
    np.testing.assert_array_equal(adapter_forward(params, K, 1.0).value, adapter_forward(again, K, 1.0).value)
    bad = params.to_dict()
    bad["format_version"] = 99
    with pytest.raises(ValueError):
        AdapterParams.from_dict(bad)
