import numpy as np
import pytest

from src.blocks import (
    BatchNorm,
    ConvolutionModule,
    DepthwiseConv1d,
    LEFeedForward,
    Linear,
    MSAConfig,
    MultiHeadSelfAttention,
    SEBlock,
)
from src.errors import CheckpointMismatchError, ShapeMismatchError
from src.tensor import Tensor


def f64(module):
    return module.to(np.float64)


def test_linear_rejects_wrong_feature_axis():
    with pytest.raises(ShapeMismatchError, match="axis -1"):
        Linear(4, 3)(Tensor(np.ones((2, 5), dtype=np.float32)))


def test_state_dict_restores_into_a_fresh_module(rng):
    source = f64(LEFeedForward(8, 16, se_reduction=4, rng=rng))
    target = f64(LEFeedForward(8, 16, se_reduction=4, rng=np.random.default_rng(99)))
    target.load_state_dict(source.state_dict())
    x = Tensor(rng.standard_normal((2, 5, 8)))
    np.testing.assert_array_equal(source(x).data, target(x).data)


def test_state_dict_with_missing_entry_is_rejected(rng):
    module = LEFeedForward(8, 16, se_reduction=4, rng=rng)
    state = module.state_dict()
    state.pop("fc2.bias")
    with pytest.raises(CheckpointMismatchError, match="fc2.bias"):
        module.load_state_dict(state)


def test_state_dict_with_wrong_shape_is_rejected(rng):
    module = LEFeedForward(8, 16, se_reduction=4, rng=rng)
    state = module.state_dict()
    state["fc1.weight"] = np.zeros((8, 17))
    with pytest.raises(CheckpointMismatchError, match="fc1.weight"):
        module.load_state_dict(state)


def test_disabled_ffn_stages_leave_no_parameters(rng):
    full = {name for name, _ in LEFeedForward(8, 16, se_reduction=4, rng=rng).named_parameters()}
    no_se = {name for name, _ in LEFeedForward(8, 16, enable_se=False, rng=rng).named_parameters()}
    no_dw = {name for name, _ in LEFeedForward(8, 16, enable_dwconv=False, se_reduction=4, rng=rng).named_parameters()}
    assert full - no_se == {"se.fc1.weight", "se.fc1.bias", "se.fc2.weight", "se.fc2.bias"}
    assert full - no_dw == {"dwconv.weight", "dwconv.bias"}
    assert no_se < full and no_dw < full


def test_se_gates_lie_in_unit_interval(rng):
    se = f64(SEBlock(8, reduction=4, rng=rng))
    gates = se.gates(Tensor(rng.standard_normal((3, 6, 8)))).data
    assert gates.shape == (3, 8)
    assert np.all((gates > 0.0) & (gates < 1.0))


def test_se_channel_count_must_divide():
    with pytest.raises(ShapeMismatchError):
        SEBlock(10, reduction=4)


def test_depthwise_kernel_must_be_odd():
    with pytest.raises(ShapeMismatchError):
        DepthwiseConv1d(4, 4)


def test_depthwise_conv_keeps_length_and_mixes_no_channels(rng):
    conv = f64(DepthwiseConv1d(3, 5, rng=rng))
    x = np.zeros((1, 9, 3))
    x[0, :, 1] = rng.standard_normal(9)
    out = conv(Tensor(x)).data
    assert out.shape == (1, 9, 3)
    np.testing.assert_array_equal(out[0, :, 0], conv.bias.data[0])
    np.testing.assert_array_equal(out[0, :, 2], conv.bias.data[2])


def test_batch_norm_running_statistics_use_unbiased_variance(rng):
    norm = f64(BatchNorm(2))
    x = rng.standard_normal((4, 5, 2))
    norm(Tensor(x))
    flat = x.reshape(-1, 2)
    np.testing.assert_allclose(norm.running_mean, 0.1 * flat.mean(axis=0))
    np.testing.assert_allclose(norm.running_var, 0.9 + 0.1 * flat.var(axis=0, ddof=1))


def test_batch_norm_eval_uses_running_statistics(rng):
    norm = f64(BatchNorm(2)).eval()
    x = rng.standard_normal((1, 3, 2))
    np.testing.assert_allclose(norm(Tensor(x)).data, x / np.sqrt(1.0 + norm.eps))


def test_to_float64_casts_buffers():
    module = f64(ConvolutionModule(4, kernel_size=3))
    assert module.batch_norm.running_var.dtype == np.float64
    assert all(p.dtype == np.float64 for p in module.parameters())


def test_train_and_eval_reach_every_child():
    module = ConvolutionModule(4, kernel_size=3).eval()
    assert not module.batch_norm.training
    module.train()
    assert module.batch_norm.training


def test_attention_probabilities_are_row_stochastic(rng):
    attn = f64(MultiHeadSelfAttention(MSAConfig(8, 2), rng=rng))
    _, probs = attn(Tensor(rng.standard_normal((2, 6, 8))), return_attention=True)
    assert probs.shape == (2, 2, 6, 6)
    np.testing.assert_allclose(probs.data.sum(axis=-1), 1.0)


def test_attention_without_positions_is_permutation_equivariant(rng):
    attn = f64(MultiHeadSelfAttention(MSAConfig(8, 2), rng=rng))
    x = rng.standard_normal((1, 7, 8))
    order = rng.permutation(7)
    np.testing.assert_allclose(attn(Tensor(x[:, order])).data, attn(Tensor(x)).data[:, order], atol=1e-12)


def test_relative_positions_break_permutation_equivariance(rng):
    attn = f64(MultiHeadSelfAttention(MSAConfig(8, 2, "conformer_rel"), rng=rng))
    attn.pos_bias_v.data = rng.standard_normal(attn.pos_bias_v.shape)
    x = rng.standard_normal((1, 5, 8))
    order = np.array([4, 3, 2, 1, 0])
    assert not np.allclose(attn(Tensor(x[:, order])).data, attn(Tensor(x)).data[:, order])


def test_attention_mask_forbids_keys(rng):
    attn = f64(MultiHeadSelfAttention(MSAConfig(4, 1), rng=rng))
    mask = np.zeros((1, 1, 4, 4))
    mask[..., 3] = -np.inf
    _, probs = attn(Tensor(rng.standard_normal((1, 4, 4))), mask=mask, return_attention=True)
    np.testing.assert_array_equal(probs.data[..., 3], 0.0)


def test_window_bias_attention_checks_token_count(rng):
    attn = MultiHeadSelfAttention(MSAConfig(4, 1, "window_bias", window=3), rng=rng)
    with pytest.raises(ShapeMismatchError):
        attn(Tensor(np.ones((1, 8, 4), dtype=np.float32)))


def test_invalid_attention_configs():
    with pytest.raises(ShapeMismatchError):
        MSAConfig(10, 3)
    with pytest.raises(ShapeMismatchError):
        MSAConfig(8, 2, "window_bias")
