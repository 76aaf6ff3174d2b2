"""Pre-norm transformer block shared by the vision, text, and decoder stacks.

A block is a pure function of its input and a ``BlockWeights`` view; it owns no
state, so the same code path serves every stack and keeps the naive and the
optimized engines numerically identical.
"""

from __future__ import annotations

from typing import Callable, Mapping, NamedTuple

import numpy as np

from .tensor import (
    AttentionWeights,
    ConstantPool,
    layer_norm,
    linear,
    multi_head_attention,
    quick_gelu,
)


class BlockWeights(NamedTuple):
    """Named view over one block's tensors (no copies)."""

    ln1_gamma: np.ndarray
    ln1_beta: np.ndarray
    attn: AttentionWeights
    ln2_gamma: np.ndarray
    ln2_beta: np.ndarray
    fc1_weight: np.ndarray
    fc1_bias: np.ndarray
    fc2_weight: np.ndarray
    fc2_bias: np.ndarray


def block_weights(tensors: Mapping[str, np.ndarray], prefix: str) -> BlockWeights:
    """Collect one block's tensors from a flat store under ``prefix``."""
    g = lambda name: tensors[f"{prefix}.{name}"]  # noqa: E731
    return BlockWeights(
        ln1_gamma=g("ln1.gamma"),
        ln1_beta=g("ln1.beta"),
        attn=AttentionWeights(
            wq=g("attn.q.weight"),
            bq=g("attn.q.bias"),
            wk=g("attn.k.weight"),
            bk=g("attn.k.bias"),
            wv=g("attn.v.weight"),
            bv=g("attn.v.bias"),
            wo=g("attn.out.weight"),
            bo=g("attn.out.bias"),
        ),
        ln2_gamma=g("ln2.gamma"),
        ln2_beta=g("ln2.beta"),
        fc1_weight=g("mlp.fc1.weight"),
        fc1_bias=g("mlp.fc1.bias"),
        fc2_weight=g("mlp.fc2.weight"),
        fc2_bias=g("mlp.fc2.bias"),
    )


def block_forward(
    x: np.ndarray,
    w: BlockWeights,
    heads: int,
    causal: bool = False,
    activation: Callable[[np.ndarray], np.ndarray] = quick_gelu,
    pool: ConstantPool | None = None,
) -> np.ndarray:
    """One pre-norm residual block: attention then MLP, each behind a LayerNorm."""
    x = x + multi_head_attention(
        layer_norm(x, w.ln1_gamma, w.ln1_beta), w.attn, heads, causal=causal, pool=pool
    )
    h = linear(layer_norm(x, w.ln2_gamma, w.ln2_beta), w.fc1_weight, w.fc1_bias)
    return x + linear(activation(h), w.fc2_weight, w.fc2_bias)
