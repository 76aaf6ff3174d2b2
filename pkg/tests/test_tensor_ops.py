"""Kernel library vs hand-rolled oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    attention_ref,
    bilinear_ref,
    blur_ref,
    deconv_ref,
    gauss_kernel_ref,
    layer_norm_ref,
    mm_ref,
    patch_embed_ref,
    sigmoid_ref,
    softmax_ref,
)
from reuseg import ConfigError, ConstantPool, DimensionError, F16, F32
from reuseg.tensor import (
    AttentionWeights,
    bilinear_resize,
    cast,
    gaussian_blur,
    gaussian_kernel,
    layer_norm,
    matmul,
    multi_head_attention,
    patch_embed,
    quick_gelu,
    relu,
    sigmoid,
    softmax_lastdim,
    transposed_conv2d,
)

RNG = np.random.default_rng(1234)


def rand(*shape, dtype=F32, scale=1.0):
    return (RNG.standard_normal(shape) * scale).astype(dtype)


# --- matmul ---------------------------------------------------------------


def test_matmul_identity():
    a = np.array([[1, 2], [3, 4]], dtype=F32)
    assert np.array_equal(matmul(np.eye(2, dtype=F32), a), a)


def test_matmul_zeros():
    out = matmul(np.zeros((3, 4), dtype=F32), rand(4, 2))
    assert np.array_equal(out, np.zeros((3, 2), dtype=F32))


def test_matmul_against_triple_loop():
    a, b = rand(3, 3), rand(3, 3)
    assert np.max(np.abs(matmul(a, b) - mm_ref(a, b))) <= 1e-6


def test_matmul_shape_and_dtype_errors():
    with pytest.raises(DimensionError):
        matmul(rand(2, 3), rand(2, 3))
    with pytest.raises(DimensionError):
        matmul(rand(2, 3), rand(3, 2).astype(F16))
    with pytest.raises(DimensionError):
        matmul(rand(2, 3, 1), rand(3, 2))


# --- layer_norm -----------------------------------------------------------


def test_layer_norm_constant_row_is_zero():
    x = np.full((4,), 3.25, dtype=F32)
    out = layer_norm(x, np.ones(4, dtype=F32), np.zeros(4, dtype=F32))
    assert np.allclose(out, 0.0)


def test_layer_norm_shift_invariance():
    g, b = np.ones(2, dtype=F32), np.zeros(2, dtype=F32)
    a = layer_norm(np.array([1.0, 2.0], dtype=F32), g, b)
    c = layer_norm(np.array([11.0, 12.0], dtype=F32), g, b)
    assert np.max(np.abs(a - c)) <= 1e-6


def test_layer_norm_against_scalar_loop():
    x, g, b = rand(3, 6), rand(6), rand(6)
    assert np.max(np.abs(layer_norm(x, g, b) - layer_norm_ref(x, g, b))) <= 1e-6


def test_layer_norm_dim_error():
    with pytest.raises(DimensionError):
        layer_norm(rand(3, 6), rand(5), rand(6))
    with pytest.raises(ConfigError):
        layer_norm(rand(3, 6), rand(6), rand(6), eps=0.0)


# --- activations ----------------------------------------------------------


def test_quick_gelu_origin_and_asymptote():
    assert quick_gelu(np.array([0.0], dtype=F32))[0] == 0.0
    assert abs(quick_gelu(np.array([100.0], dtype=F32))[0] - 100.0) < 1e-4


def test_quick_gelu_at_one():
    # x * sigmoid(1.702 x) at x=1 is sigmoid(1.702)
    expected = sigmoid_ref(1.702)
    got = float(quick_gelu(np.array([1.0], dtype=F32))[0])
    assert abs(got - expected) <= 1e-6
    assert abs(expected - 0.8457957659328212) <= 1e-12


def test_relu_and_sigmoid_basics():
    assert np.array_equal(relu(np.array([-1.0, 2.0], dtype=F32)), [0.0, 2.0])
    assert sigmoid(np.array([0.0], dtype=F32))[0] == 0.5
    big = sigmoid(np.array([-1000.0, 1000.0], dtype=F32))
    assert np.all(np.isfinite(big))


# --- softmax ----------------------------------------------------------------


def test_softmax_uniform():
    out = softmax_lastdim(np.zeros(3, dtype=F32))
    assert np.allclose(out, 1 / 3)


def test_softmax_saturation():
    out = softmax_lastdim(np.array([30.0, 0.0], dtype=F32))
    assert out[0] > 0.9999999 and out[1] < 1e-7


def test_softmax_against_scalar_oracle():
    v = rand(5)
    assert np.max(np.abs(softmax_lastdim(v) - softmax_ref(v))) <= 1e-6


@given(st.lists(st.integers(-256, 256), min_size=1, max_size=8), st.integers(-128, 128))
def test_softmax_shift_invariance_and_normalization(vals, shift):
    # eighths are exactly representable, so the shifted input carries no
    # rounding of its own and the invariance is softmax's alone
    v = np.array(vals, dtype=F32) / np.float32(8)
    a = softmax_lastdim(v)
    b = softmax_lastdim(v + np.float32(shift) / np.float32(8))
    assert abs(float(a.sum()) - 1.0) <= 1e-6
    assert np.max(np.abs(a - b)) <= 1e-6


# --- attention --------------------------------------------------------------


def _identity_attention(d):
    eye, zero = np.eye(d, dtype=F32), np.zeros(d, dtype=F32)
    return AttentionWeights(eye, zero, eye, zero, eye, zero, eye, zero)


def test_attention_single_token_identity_projections():
    x = rand(1, 4)
    out = multi_head_attention(x, _identity_attention(4), heads=2)
    assert np.max(np.abs(out - x)) <= 1e-6


def test_attention_causal_token0_independent_of_token1():
    w = AttentionWeights(*(rand(4, 4) if i % 2 == 0 else rand(4) for i in range(8)))
    x1 = rand(2, 4)
    x2 = x1.copy()
    x2[1] += 1.0
    a = multi_head_attention(x1, w, heads=2, causal=True)
    b = multi_head_attention(x2, w, heads=2, causal=True)
    assert np.array_equal(a[0], b[0])
    assert not np.array_equal(a[1], b[1])


@pytest.mark.parametrize("causal", [False, True])
def test_attention_against_per_head_loops(causal):
    w = AttentionWeights(*(rand(4, 4) if i % 2 == 0 else rand(4) for i in range(8)))
    x = rand(3, 4)
    got = multi_head_attention(x, w, heads=2, causal=causal)
    want = attention_ref(x, w, heads=2, causal=causal)
    assert np.max(np.abs(got - want)) <= 1e-5


def test_attention_indivisible_heads():
    with pytest.raises(ConfigError):
        multi_head_attention(rand(2, 5), _identity_attention(5), heads=2)


# --- patch embedding --------------------------------------------------------


def test_patch_embed_352_grid():
    img = np.zeros((3, 352, 352), dtype=F32)
    k, b = rand(8, 3, 16, 16), rand(8)
    tokens = patch_embed(img, k, b, 16)
    assert tokens.shape == (484, 8)  # 22 x 22 grid


def test_patch_embed_zero_image_gives_bias_rows():
    k, b = rand(5, 3, 16, 16), rand(5)
    out = patch_embed(np.zeros((3, 32, 32), dtype=F32), k, b, 16)
    assert np.allclose(out, np.broadcast_to(b, (4, 5)))


def test_patch_embed_against_patch_loop():
    # weight-scale kernels keep the 768-term dot products at O(1), where the
    # 1e-6 absolute tolerance is meaningful
    img, k, b = rand(3, 32, 32), rand(6, 3, 16, 16, scale=0.05), rand(6)
    got = patch_embed(img, k, b, 16)
    want = patch_embed_ref(img, k, b, 16)
    assert np.max(np.abs(got - want)) <= 1e-6


def test_patch_embed_indivisible_error():
    with pytest.raises(DimensionError):
        patch_embed(rand(3, 33, 32), rand(4, 3, 16, 16), rand(4), 16)


# --- transposed convolution --------------------------------------------------


def test_deconv_zero_input():
    k, b = rand(2, 3, 4, 4), np.zeros(3, dtype=F32)
    out = transposed_conv2d(np.zeros((2, 2, 2), dtype=F32), k, b, stride=4)
    assert np.array_equal(out, np.zeros((3, 8, 8), dtype=F32))


def test_deconv_single_pixel_paints_kernel():
    v = np.float32(1.75)
    x = np.full((1, 1, 1), v, dtype=F32)
    k, b = rand(1, 2, 4, 4), rand(2)
    got = transposed_conv2d(x, k, b, stride=4)
    want = v * k[0].astype(np.float64) + b[:, None, None].astype(np.float64)
    assert np.max(np.abs(got - want)) <= 1e-6


def test_deconv_against_pixel_loop():
    x, k, b = rand(2, 3, 3), rand(2, 3, 4, 4), rand(3)
    got = transposed_conv2d(x, k, b, stride=4)
    assert np.max(np.abs(got - deconv_ref(x, k, b, 4))) <= 1e-6


def test_deconv_shape_arithmetic_to_native_size():
    x = rand(4, 22, 22)
    y = transposed_conv2d(x, rand(4, 2, 4, 4), rand(2), stride=4)
    z = transposed_conv2d(y, rand(2, 1, 4, 4), rand(1), stride=4)
    assert z.shape == (1, 352, 352)


def test_deconv_kernel_stride_mismatch():
    with pytest.raises(ConfigError):
        transposed_conv2d(rand(2, 2, 2), rand(2, 3, 3, 3), rand(3), stride=4)
    with pytest.raises(DimensionError):
        transposed_conv2d(rand(2, 2, 2), rand(3, 3, 4, 4), rand(3), stride=4)


# --- bilinear resize --------------------------------------------------------


def test_bilinear_identity_is_bitwise():
    x = rand(2, 5, 7)
    assert np.array_equal(bilinear_resize(x, 5, 7), x)


def test_bilinear_constant_stays_constant():
    x = np.full((1, 3, 3), 0.7, dtype=F32)
    out = bilinear_resize(x, 9, 5)
    assert np.array_equal(out, np.full((1, 9, 5), 0.7, dtype=F32))


def test_bilinear_2x2_ramp_against_scalar_formula():
    x = np.array([[[0.0, 1.0], [2.0, 3.0]]], dtype=F32)
    got = bilinear_resize(x, 4, 4)
    assert np.max(np.abs(got - bilinear_ref(x, 4, 4))) <= 1e-6


def test_bilinear_random_against_scalar_formula():
    x = rand(2, 6, 5)
    got = bilinear_resize(x, 3, 8)
    assert np.max(np.abs(got - bilinear_ref(x, 3, 8))) <= 1e-6


def test_bilinear_bad_target():
    with pytest.raises(DimensionError):
        bilinear_resize(rand(1, 2, 2), 0, 2)


# --- gaussian blur ----------------------------------------------------------


def test_blur_constant_unchanged():
    x = np.full((20, 20), 0.25, dtype=F32)
    assert np.array_equal(gaussian_blur(x, 5, 1.5), x)


def test_blur_delta_matches_sampled_kernel():
    x = np.zeros((31, 31), dtype=F32)
    x[15, 15] = 1.0
    out = gaussian_blur(x, 5, 1.0)
    k = gauss_kernel_ref(5, 1.0)
    for dy in range(-2, 3):
        for dx in range(-2, 3):
            assert abs(out[15 + dy, 15 + dx] - k[dy + 2] * k[dx + 2]) <= 1e-6


def test_blur_range_bounded_by_input():
    x = rand(16, 16)
    out = gaussian_blur(x, 7, 2.0)
    assert out.min() >= x.min() - 1e-6 and out.max() <= x.max() + 1e-6


def test_blur_against_direct_convolution():
    x = rand(10, 10)
    got = gaussian_blur(x, 5, 1.3)
    assert np.max(np.abs(got - blur_ref(x, 5, 1.3))) <= 1e-6


def test_blur_preserves_mean_on_large_maps():
    x = rand(48, 48) + 2.0
    out = gaussian_blur(x, 5, 1.5)
    assert abs(out.mean() - x.mean()) / abs(x.mean()) <= 1e-3


def test_blur_even_kernel_rejected():
    with pytest.raises(ConfigError):
        gaussian_blur(rand(8, 8), 4, 1.0)
    with pytest.raises(ConfigError):
        gaussian_kernel(5, 0.0)


def test_gaussian_kernel_normalized():
    k = gaussian_kernel(15, 7.0)
    assert abs(k.sum() - 1.0) <= 1e-6


# --- casts ------------------------------------------------------------------


def test_cast_exact_value_roundtrip():
    x = np.array([1.0], dtype=F32)
    assert cast(cast(x, F16), F32)[0] == 1.0


def test_cast_roundtrip_relative_error_within_half_ulp():
    x = np.array([0.1], dtype=F32)
    rt = cast(cast(x, F16), F32)[0]
    assert abs(rt - 0.1) / 0.1 <= 2.0**-11


def test_cast_f16_overflow_to_inf():
    out = cast(np.array([70000.0, -70000.0], dtype=F32), F16)
    assert out[0] == np.inf and out[1] == -np.inf


# --- constant pool ----------------------------------------------------------


def test_pool_returns_same_object_and_counts_allocations():
    pool = ConstantPool()
    a = pool.get("zeros", (3, 4))
    b = pool.get("zeros", (3, 4))
    assert a is b
    assert pool.allocations == 1
    pool.get("zeros", (3, 5))
    assert pool.allocations == 2
    assert not a.flags.writeable


def test_pool_causal_mask_contents():
    pool = ConstantPool()
    m = pool.get("causal_mask", (3, 3))
    assert np.array_equal(np.isneginf(m), np.triu(np.ones((3, 3), bool), k=1))
    assert np.all(m[np.tril_indices(3)] == 0)


def test_pool_unknown_kind_and_bad_mask_shape():
    pool = ConstantPool()
    with pytest.raises(ConfigError):
        pool.get("mystery", (2, 2))
    with pytest.raises(ConfigError):
        pool.get("causal_mask", (2, 3))


@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 10))
def test_pool_allocates_once_per_key(h, w, repeats):
    pool = ConstantPool()
    for _ in range(repeats):
        pool.get("zeros", (h, w))
    assert pool.allocations == 1
    assert len(pool) == 1


# --- F16 consistency ---------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_f16_matmul_tracks_f32_within_2pow9(seed):
    r = np.random.default_rng(seed)
    x32 = np.clip(r.standard_normal((4, 8)) * 3, -10, 10).astype(F32)
    w32 = np.clip(r.standard_normal((8, 8)), -10, 10).astype(F32)
    y32 = matmul(x32, w32)
    y16 = matmul(cast(x32, F16), cast(w32, F16))
    # error scale is the cancellation-free magnitude |x| @ |w|, since the F16
    # rounding happens on the operands before any summation
    scale = np.abs(x32) @ np.abs(w32)
    assert np.max(np.abs(y16.astype(F32) - y32) / np.maximum(scale, 1e-6)) <= 2.0**-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_f16_elementwise_tracks_f32_within_2pow9(seed):
    r = np.random.default_rng(seed)
    x32 = np.clip(r.standard_normal(64) * 4, -10, 10).astype(F32)
    for op in (quick_gelu, relu, sigmoid):
        y32 = op(x32)
        y16 = op(cast(x32, F16)).astype(F32)
        # normalized by the output scale: deep in the sigmoid tails the input
        # quantization alone exceeds any per-element relative bound
        denom = np.maximum(np.abs(y32), 1.0)
        assert np.max(np.abs(y16 - y32) / denom) <= 2.0**-9
