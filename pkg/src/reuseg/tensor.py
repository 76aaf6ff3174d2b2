"""Deterministic dense-tensor kernels the rest of the engine is built on.

Tensors are plain numpy arrays in float32 or float16. Every reduction
(matmul, attention scores, normalization statistics) accumulates in
float32 regardless of the storage dtype; results are cast back to the
input dtype, so float16 only changes what gets stored between ops.
"""

from __future__ import annotations

import threading
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DimensionError

F32 = np.dtype(np.float32)
F16 = np.dtype(np.float16)

_DTYPES = {"f32": F32, "f16": F16, "float32": F32, "float16": F16}


def as_dtype(precision) -> np.dtype:
    """Map a precision name ("f32"/"f16") or numpy dtype to the dtype object."""
    if isinstance(precision, str):
        try:
            return _DTYPES[precision.lower()]
        except KeyError:
            raise ConfigError(f"unknown precision {precision!r}, expected 'f32' or 'f16'") from None
    dt = np.dtype(precision)
    if dt not in (F32, F16):
        raise ConfigError(f"unsupported dtype {dt}, expected float32 or float16")
    return dt


def _f32(x: np.ndarray) -> np.ndarray:
    return x if x.dtype == F32 else x.astype(F32)


def _out(x: np.ndarray, dtype: np.dtype) -> np.ndarray:
    if x.dtype == dtype:
        return x
    with np.errstate(over="ignore"):
        return x.astype(dtype)


class ConstantPool:
    """Process-wide store of reusable constant tensors keyed by (kind, shape).

    A pooled constant is allocated at most once per key and handed out as the
    same read-only array on every request. Lookups may race; insertion takes
    the lock and is idempotent.
    """

    KINDS = ("zeros", "causal_mask")

    def __init__(self):
        self._store: dict[tuple[str, tuple[int, ...]], np.ndarray] = {}
        self._lock = threading.Lock()
        self.allocations = 0

    def get(self, kind: str, shape) -> np.ndarray:
        shape = tuple(int(s) for s in (shape if np.iterable(shape) else (shape,)))
        key = (kind, shape)
        arr = self._store.get(key)
        if arr is not None:
            return arr
        with self._lock:
            arr = self._store.get(key)
            if arr is None:
                arr = self._build(kind, shape)
                arr.flags.writeable = False
                self._store[key] = arr
                self.allocations += 1
        return arr

    @staticmethod
    def _build(kind: str, shape: tuple[int, ...]) -> np.ndarray:
        if kind == "zeros":
            return np.zeros(shape, dtype=F32)
        if kind == "causal_mask":
            if len(shape) != 2 or shape[0] != shape[1]:
                raise ConfigError(f"causal mask shape must be square, got {shape}")
            # Additive mask: 0 on/below the diagonal, -inf above.
            mask = np.zeros(shape, dtype=F32)
            mask[np.triu_indices(shape[0], k=1)] = -np.inf
            return mask
        raise ConfigError(f"unknown constant kind {kind!r}")

    def __len__(self) -> int:
        return len(self._store)


_default_pool = ConstantPool()


def default_pool() -> ConstantPool:
    return _default_pool


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with float32 accumulation, result in the input dtype."""
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul inner dims differ: {a.shape} x {b.shape}")
    if a.dtype != b.dtype:
        raise DimensionError(f"matmul dtypes differ: {a.dtype} vs {b.dtype}")
    return _out(_f32(a) @ _f32(b), a.dtype)


def linear(x: np.ndarray, weight: np.ndarray, bias: np.ndarray | None = None) -> np.ndarray:
    """x @ weight.T + bias with a single downcast at the end. weight is (out, in)."""
    if x.shape[-1] != weight.shape[1]:
        raise DimensionError(f"linear: input dim {x.shape[-1]} != weight in-dim {weight.shape[1]}")
    y = _f32(x) @ _f32(weight).T
    if bias is not None:
        y += _f32(bias)
    return _out(y, x.dtype)


def layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Standardize the last dim then apply the affine pair; float32 internally."""
    if eps <= 0:
        raise ConfigError(f"layer_norm eps must be > 0, got {eps}")
    d = x.shape[-1]
    if gamma.shape != (d,) or beta.shape != (d,):
        raise DimensionError(f"layer_norm affine dims {gamma.shape}/{beta.shape} != ({d},)")
    x32 = _f32(x)
    mean = x32.mean(axis=-1, keepdims=True)
    centered = x32 - mean
    var = np.mean(centered * centered, axis=-1, keepdims=True)
    y = centered / np.sqrt(var + np.float32(eps)) * _f32(gamma) + _f32(beta)
    return _out(y, x.dtype)


def _sigmoid32(x32: np.ndarray) -> np.ndarray:
    # Branching keeps exp() off large positive arguments.
    out = np.empty_like(x32)
    pos = x32 >= 0
    with np.errstate(over="ignore"):
        out[pos] = 1.0 / (1.0 + np.exp(-x32[pos]))
        e = np.exp(x32[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def quick_gelu(x: np.ndarray) -> np.ndarray:
    """Elementwise x * sigmoid(1.702 x)."""
    x32 = _f32(x)
    return _out(x32 * _sigmoid32(np.float32(1.702) * x32), x.dtype)


def relu(x: np.ndarray) -> np.ndarray:
    return _out(np.maximum(_f32(x), np.float32(0)), x.dtype)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    return _out(_sigmoid32(_f32(x)), x.dtype)


def softmax_lastdim(x: np.ndarray) -> np.ndarray:
    """Max-subtracted exponential normalization over the last dim."""
    if x.shape[-1] < 1:
        raise DimensionError("softmax_lastdim needs a non-empty last dim")
    x32 = _f32(x)
    shifted = x32 - x32.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return _out(e / e.sum(axis=-1, keepdims=True), x.dtype)


class AttentionWeights(NamedTuple):
    wq: np.ndarray
    bq: np.ndarray
    wk: np.ndarray
    bk: np.ndarray
    wv: np.ndarray
    bv: np.ndarray
    wo: np.ndarray
    bo: np.ndarray


def multi_head_attention(
    x: np.ndarray,
    weights: AttentionWeights,
    heads: int,
    causal: bool = False,
    pool: ConstantPool | None = None,
) -> np.ndarray:
    """Scaled dot-product attention over a (T, D) sequence, batch size one.

    The causal mask is fetched from the ConstantPool so repeated sequence
    lengths never reallocate it. Scores and the softmax run in float32.
    """
    t, d = x.shape
    if d % heads != 0:
        raise ConfigError(f"model dim {d} not divisible by {heads} heads")
    dh = d // heads
    x32 = _f32(x)
    q = (x32 @ _f32(weights.wq).T + _f32(weights.bq)).reshape(t, heads, dh).transpose(1, 0, 2)
    k = (x32 @ _f32(weights.wk).T + _f32(weights.bk)).reshape(t, heads, dh).transpose(1, 0, 2)
    v = (x32 @ _f32(weights.wv).T + _f32(weights.bv)).reshape(t, heads, dh).transpose(1, 0, 2)
    scores = q @ k.transpose(0, 2, 1) * np.float32(1.0 / np.sqrt(dh))
    if causal:
        mask = (pool or _default_pool).get("causal_mask", (t, t))
        scores = scores + mask
    att = softmax_lastdim(scores)
    ctx = (att @ v).transpose(1, 0, 2).reshape(t, d)
    out = ctx @ _f32(weights.wo).T + _f32(weights.bo)
    return _out(out, x.dtype)


def patch_embed(image: np.ndarray, kernel: np.ndarray, bias: np.ndarray, patch: int) -> np.ndarray:
    """Flatten non-overlapping patches and project them to the model dim.

    image is (C, H, W), kernel is (D, C, patch, patch). Tokens come out
    row-major over the patch grid, shape (H/patch * W/patch, D).
    """
    c, h, w = image.shape
    if h % patch != 0 or w % patch != 0:
        raise DimensionError(f"image {h}x{w} not divisible by patch {patch}")
    if kernel.ndim != 4 or kernel.shape[1:] != (c, patch, patch):
        raise DimensionError(f"patch kernel shape {kernel.shape} != (D, {c}, {patch}, {patch})")
    gh, gw = h // patch, w // patch
    patches = (
        image.reshape(c, gh, patch, gw, patch)
        .transpose(1, 3, 0, 2, 4)
        .reshape(gh * gw, c * patch * patch)
    )
    return linear(patches, kernel.reshape(kernel.shape[0], -1), bias)


def transposed_conv2d(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray, stride: int) -> np.ndarray:
    """Non-overlapping transposed convolution: kernel size equals stride.

    x is (C, H, W), kernel is (C, C', k, k); every input pixel paints one
    kernel-weighted k x k output block, so the output is (C', H*k, W*k).
    """
    c, h, w = x.shape
    if kernel.ndim != 4 or kernel.shape[0] != c:
        raise DimensionError(f"deconv kernel {kernel.shape} incompatible with {c} input channels")
    if kernel.shape[2] != stride or kernel.shape[3] != stride:
        raise ConfigError(f"deconv kernel size {kernel.shape[2:]} must equal stride {stride}")
    y = np.einsum("chw,cokl->ohkwl", _f32(x), _f32(kernel), optimize=True)
    y = y.reshape(kernel.shape[1], h * stride, w * stride)
    y += _f32(bias)[:, None, None]
    return _out(y, x.dtype)


def bilinear_resize(x: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel-center (align-corners-false) bilinear resampling of (C, H, W)."""
    if out_h < 1 or out_w < 1:
        raise DimensionError(f"resize target {out_h}x{out_w} must be >= 1")
    c, h, w = x.shape
    if (out_h, out_w) == (h, w):
        return x.copy()
    x32 = _f32(x)
    y = _resize_axis(x32, out_h, axis=1)
    y = _resize_axis(y, out_w, axis=2)
    return _out(y, x.dtype)


def _resize_axis(x32: np.ndarray, out_n: int, axis: int) -> np.ndarray:
    in_n = x32.shape[axis]
    src = (np.arange(out_n, dtype=np.float32) + np.float32(0.5)) * np.float32(in_n / out_n) - np.float32(0.5)
    src = np.clip(src, 0.0, in_n - 1)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, in_n - 1)
    frac = (src - lo.astype(np.float32)).astype(np.float32)
    a = np.take(x32, lo, axis=axis)
    b = np.take(x32, hi, axis=axis)
    shape = [1, 1, 1]
    shape[axis] = out_n
    f = frac.reshape(shape)
    # lerp as a + f*(b-a): exact for a == b, which keeps constant inputs bit-stable
    return a + f * (b - a)


def gaussian_kernel(kernel_size: int, sigma: float) -> np.ndarray:
    """1-D Gaussian taps, float64, normalized to sum 1."""
    if kernel_size % 2 == 0 or kernel_size < 1:
        raise ConfigError(f"blur kernel size must be odd and positive, got {kernel_size}")
    if sigma <= 0:
        raise ConfigError(f"blur sigma must be > 0, got {sigma}")
    r = kernel_size // 2
    t = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(t * t) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(x: np.ndarray, kernel_size: int, sigma: float) -> np.ndarray:
    """Separable Gaussian blur of an (H, W) map with edge replication.

    Accumulates in float64 so a constant map stays bit-identical after the
    final downcast.
    """
    if x.ndim != 2:
        raise DimensionError(f"gaussian_blur expects an (H, W) map, got shape {x.shape}")
    k = gaussian_kernel(kernel_size, sigma)
    r = kernel_size // 2
    y = x.astype(np.float64)
    for axis in (0, 1):
        pad = [(0, 0), (0, 0)]
        pad[axis] = (r, r)
        padded = np.pad(y, pad, mode="edge")
        windows = np.lib.stride_tricks.sliding_window_view(padded, kernel_size, axis=axis)
        y = windows @ k
    return _out(y, x.dtype)


def cast(x: np.ndarray, to) -> np.ndarray:
    """Round-to-nearest-even dtype conversion; F16 overflow saturates to +-inf."""
    dt = as_dtype(to)
    with np.errstate(over="ignore"):
        return x.astype(dt)
