"""FiLM-conditioned segmentation decoder.

Extracted vision activations are consumed deepest-first: the deepest one is
linearly reduced, modulated by the prompt's FiLM pair, and pushed through the
first decoder block; each shallower activation is reduced and added before the
next block. After the last block the CLS token is dropped, the grid tokens are
reshaped to a feature map, and two stride-4 transposed convolutions (rectifier
between) upsample back to the input resolution as a single-channel logit map.

reduce index i belongs to stage i, so decoder.reduce.0 always pairs with the
deepest extract layer regardless of how many stages a config has.
"""

from __future__ import annotations

from typing import Mapping, NamedTuple

import numpy as np

from .blocks import BlockWeights, block_forward, block_weights
from .config import ModelConfig
from .encoders import ActivationSet
from .errors import ConfigError, DimensionError
from .tensor import ConstantPool, linear, relu, transposed_conv2d


class DecoderWeights(NamedTuple):
    reduces: tuple[tuple[np.ndarray, np.ndarray], ...]
    blocks: tuple[BlockWeights, ...]
    deconv1: tuple[np.ndarray, np.ndarray]
    deconv2: tuple[np.ndarray, np.ndarray]


def decoder_weights(tensors: Mapping[str, np.ndarray], config: ModelConfig) -> DecoderWeights:
    return DecoderWeights(
        reduces=tuple(
            (tensors[f"decoder.reduce.{i}.weight"], tensors[f"decoder.reduce.{i}.bias"])
            for i in range(config.decoder_blocks)
        ),
        blocks=tuple(
            block_weights(tensors, f"decoder.blocks.{i}") for i in range(config.decoder_blocks)
        ),
        deconv1=(tensors["decoder.head.deconv1.weight"], tensors["decoder.head.deconv1.bias"]),
        deconv2=(tensors["decoder.head.deconv2.weight"], tensors["decoder.head.deconv2.bias"]),
    )


def film(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Per-token feature-wise affine: gamma * x + beta broadcast over tokens.

    The parameters are cast to the activation dtype first (they are cached in
    float32), then the product runs with float32 accumulation like every
    other kernel.
    """
    d = x.shape[-1]
    if gamma.shape != (d,) or beta.shape != (d,):
        raise DimensionError(f"film params {gamma.shape}/{beta.shape} do not match feature dim {d}")
    g = gamma.astype(x.dtype).astype(np.float32)
    b = beta.astype(x.dtype).astype(np.float32)
    y = g * x.astype(np.float32) + b
    return y.astype(x.dtype)


def decode(
    acts: ActivationSet,
    gamma: np.ndarray,
    beta: np.ndarray,
    weights: DecoderWeights,
    config: ModelConfig,
    pool: ConstantPool | None = None,
) -> np.ndarray:
    """ActivationSet + one prompt's FiLM pair -> (S, S) logit map."""
    if len(acts.layers) != len(weights.blocks):
        raise ConfigError(
            f"{len(acts.layers)} extracted activations for {len(weights.blocks)} decoder stages"
        )
    x: np.ndarray | None = None
    for stage, act in enumerate(reversed(acts.layers)):
        rw, rb = weights.reduces[stage]
        reduced = linear(act, rw, rb)
        if stage == 0:
            x = film(reduced, gamma, beta)
        else:
            x = x + reduced
        x = block_forward(
            x, weights.blocks[stage], config.decoder_heads, activation=relu, pool=pool
        )
    g = acts.grid
    fmap = x[1:].reshape(g, g, -1).transpose(2, 0, 1)
    k1, b1 = weights.deconv1
    k2, b2 = weights.deconv2
    y = relu(transposed_conv2d(fmap, k1, b1, stride=k1.shape[2]))
    y = transposed_conv2d(y, k2, b2, stride=k2.shape[2])
    return y[0]
