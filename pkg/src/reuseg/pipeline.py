"""Frame orchestration: the naive oracle path and the optimized path.

The two paths share every numeric kernel; the optimized one only changes
*when* things are computed (cached conditionals, cached positional embedding,
one shared image encoding per frame, truncated encoder), never *what*. That
is why, at equal precision, their outputs are bitwise identical and the naive
path can serve as ground truth exactly the way the unoptimized model does in
the benchmark tables.

Everything after the decoder (probability, fusion, blur) runs in float32
regardless of the engine precision: a float16 probability grid near 0.5 only
resolves ~5e-4 steps, which would turn threshold comparisons into coin flips.
Precision therefore governs the encoders and decoder, where the actual
compute lives.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .cache import CachedConditional, CacheStats, ReuseCache, film_params
from .config import ModelConfig
from .decoder import decode, decoder_weights, film
from .encoders import TokenSequence, encode_image, encode_text, interpolate_pos_embed
from .errors import ConfigError, InputError
from .tensor import (
    ConstantPool,
    F16,
    F32,
    as_dtype,
    bilinear_resize,
    cast,
    gaussian_blur,
    sigmoid,
)
from .validation import check_prompts, check_rgb_image
from .weights import WeightStore

# CLIP-convention channel statistics; the normalization constants are
# configurable on the Engine.
IMAGE_MEAN = (0.48145466, 0.4578275, 0.40821073)
IMAGE_STD = (0.26862954, 0.26130258, 0.27577711)

BLUR_KERNEL = 15
BLUR_SIGMA_AT_352 = 7.0


class OptimizationFlags(NamedTuple):
    """Which reuse tricks are on, and at what precision the model runs."""

    precision: np.dtype = F32
    reuse_prompt: bool = False
    reuse_pos_embed: bool = False
    share_activations: bool = False
    truncate_encoder: bool = False


PRESETS: dict[str, OptimizationFlags] = {
    "original": OptimizationFlags(F32, False, False, False, False),
    "fp": OptimizationFlags(F16, False, False, False, False),
    "rpe": OptimizationFlags(F32, True, False, False, False),
    "fp-rpe": OptimizationFlags(F16, True, False, False, False),
    "fp-rppe": OptimizationFlags(F16, True, True, False, False),
    "blabberseg": OptimizationFlags(F16, True, True, True, True),
}


def resolve_preset(name: str) -> OptimizationFlags:
    try:
        return PRESETS[name]
    except KeyError:
        raise InputError(f"unknown preset {name!r}, expected one of {sorted(PRESETS)}") from None


@dataclass
class StageTiming:
    """Per-frame wall-clock breakdown, seconds.

    pos_embed_s is the interpolation work inside transform_s; it is exactly
    0.0 on frames where the cached embedding was reused, so reuse is visible
    as a timing fact rather than a wall-clock comparison.
    """

    transform_s: float = 0.0
    pos_embed_s: float = 0.0
    encode_s: float = 0.0
    decode_s: float = 0.0
    fuse_s: float = 0.0
    total_s: float = 0.0


class FusedHeatmap(NamedTuple):
    prompt_maps: np.ndarray
    fused: np.ndarray
    timing: StageTiming


def preprocess(
    image: np.ndarray,
    size: int,
    mean: Sequence[float] = IMAGE_MEAN,
    std: Sequence[float] = IMAGE_STD,
) -> np.ndarray:
    """uint8 (H, W, 3) -> float32 (3, S, S): scale, bilinear resize, standardize."""
    arr = check_rgb_image(image)
    x = arr.astype(F32).transpose(2, 0, 1) / np.float32(255.0)
    x = bilinear_resize(x, size, size)
    m = np.asarray(mean, dtype=F32)[:, None, None]
    s = np.asarray(std, dtype=F32)[:, None, None]
    return (x - m) / s


def prompt_probability(logits: np.ndarray) -> np.ndarray:
    """Two-way softmax over {logit, 0} per pixel == the logistic function."""
    return sigmoid(logits.astype(F32))


def fuse(maps: np.ndarray, mode: str = "mean") -> np.ndarray:
    """Reduce (P, S, S) probability maps to one (S, S) map per pixel."""
    if maps.ndim != 3 or maps.shape[0] < 1:
        raise InputError(f"fuse expects (P, S, S) with P >= 1, got {maps.shape}")
    if mode == "mean":
        return maps.mean(axis=0)
    if mode == "min":
        return maps.min(axis=0)
    if mode == "max":
        return maps.max(axis=0)
    raise InputError(f"unknown fusion mode {mode!r}, expected mean, min, or max")


def postprocess(fused: np.ndarray, kernel_size: int, sigma: float) -> np.ndarray:
    return gaussian_blur(fused, kernel_size, sigma)


class Engine:
    """One model instance: weights, caches, counters, and both segment paths.

    The store is kept in float32 as loaded; a float16 twin of the vision and
    decoder tensors is materialized lazily the first time a half-precision
    frame runs. Text tensors stay float32 (conditionals and FiLM parameters
    are cached in float32 and cast at use).
    """

    def __init__(
        self,
        store: WeightStore,
        fusion: str = "mean",
        blur_kernel: int = BLUR_KERNEL,
        blur_sigma: float | None = None,
        mean: Sequence[float] = IMAGE_MEAN,
        std: Sequence[float] = IMAGE_STD,
    ):
        if fusion not in ("mean", "min", "max"):
            raise ConfigError(f"unknown fusion mode {fusion!r}")
        self.store = store
        self.config: ModelConfig = store.config
        self.fusion = fusion
        self.blur_kernel = blur_kernel
        self.blur_sigma = (
            BLUR_SIGMA_AT_352 * self.config.image_size / 352.0 if blur_sigma is None else blur_sigma
        )
        self.mean = tuple(mean)
        self.std = tuple(std)
        self.pool = ConstantPool()
        self.cache = ReuseCache(store.tensors, self.config, pool=self.pool)
        self._half: dict[str, np.ndarray] | None = None
        self._frames = 0

    @property
    def stats(self) -> CacheStats:
        """Snapshot of the work counters; safe to hold across frames."""
        return dataclasses.replace(self.cache.stats)

    def set_token_table(self, table: Mapping[str, TokenSequence]) -> None:
        self.cache.set_token_table(table)

    def reset(self) -> None:
        """Clear caches and counters; weights and pooled constants stay."""
        self.cache.reset()
        self._frames = 0

    def _tensors(self, precision: np.dtype) -> Mapping[str, np.ndarray]:
        if precision == F32:
            return self.store.tensors
        if self._half is None:
            half = {}
            for name, t in self.store.tensors.items():
                half[name] = cast(t, F16) if name.startswith(("vision.", "decoder.")) else t
            self._half = half
        return self._half

    def _conditional(self, prompt: str, flags: OptimizationFlags) -> CachedConditional:
        if flags.reuse_prompt:
            return self.cache.get_or_compute_conditional(prompt)
        return self.cache.compute_conditional(prompt)

    def _fresh_pos_embed(self) -> np.ndarray:
        return interpolate_pos_embed(self.store.tensors["vision.pos_embed"], self.config.grid)

    def segment_naive(
        self, image: np.ndarray, prompts: Sequence[str], precision: np.dtype | str = F32
    ) -> FusedHeatmap:
        """Oracle path: per prompt, full encoder, fresh interpolation, fresh
        text encoding, inline FiLM. No cache reads or writes."""
        prompts = check_prompts(prompts)
        precision = as_dtype(precision)
        t_start = time.perf_counter()
        timing = StageTiming()
        tensors = self._tensors(precision)

        t0 = time.perf_counter()
        img32 = preprocess(image, self.config.image_size, self.mean, self.std)
        img = cast(img32, precision)
        timing.transform_s = time.perf_counter() - t0

        self._frames += 1
        logit_maps = []
        dweights = decoder_weights(tensors, self.config)
        for prompt in prompts:
            t0 = time.perf_counter()
            pos = self._fresh_pos_embed()
            dt = time.perf_counter() - t0
            timing.pos_embed_s += dt
            timing.transform_s += dt

            t0 = time.perf_counter()
            self.cache.stats.image_encoder_invocations += 1
            acts = encode_image(
                img, tensors, self.config, pos_embed=pos,
                truncate=False, pool=self.pool, frame_id=self._frames,
            )
            timing.encode_s += time.perf_counter() - t0

            t0 = time.perf_counter()
            tokens = self.cache.lookup_tokens(prompt)
            self.cache.stats.text_encoder_invocations += 1
            c = encode_text(tokens, self.store.tensors, self.config, pool=self.pool)
            gamma, beta = film_params(c, self.store.tensors)
            self.cache.stats.decoder_invocations += 1
            logits = decode(acts, gamma, beta, dweights, self.config, pool=self.pool)
            logit_maps.append(prompt_probability(logits))
            timing.decode_s += time.perf_counter() - t0

        t0 = time.perf_counter()
        maps = np.stack(logit_maps, axis=0)
        fused = postprocess(fuse(maps, self.fusion), self.blur_kernel, self.blur_sigma)
        timing.fuse_s = time.perf_counter() - t0
        timing.total_s = time.perf_counter() - t_start
        return FusedHeatmap(prompt_maps=maps, fused=fused, timing=timing)

    def segment_optimized(
        self, image: np.ndarray, prompts: Sequence[str], flags: OptimizationFlags
    ) -> FusedHeatmap:
        """Reuse path: each flag independently swaps recomputation for a cache
        or a shared value; with precision F32 the output is bitwise equal to
        segment_naive for every flag combination."""
        prompts = check_prompts(prompts)
        t_start = time.perf_counter()
        timing = StageTiming()
        tensors = self._tensors(flags.precision)

        t0 = time.perf_counter()
        img32 = preprocess(image, self.config.image_size, self.mean, self.std)
        img = cast(img32, flags.precision)
        timing.transform_s = time.perf_counter() - t0

        share_pos = flags.reuse_pos_embed or flags.share_activations
        pos: np.ndarray | None = None
        if share_pos:
            if flags.reuse_pos_embed and self.cache.has_pos_embed:
                pos = self.cache.get_pos_embed()
            else:
                t0 = time.perf_counter()
                pos = self.cache.get_pos_embed() if flags.reuse_pos_embed else self._fresh_pos_embed()
                dt = time.perf_counter() - t0
                timing.pos_embed_s += dt
                timing.transform_s += dt

        self._frames += 1
        acts = None
        logit_maps = []
        dweights = decoder_weights(tensors, self.config)
        for prompt in prompts:
            if not share_pos:
                t0 = time.perf_counter()
                pos = self._fresh_pos_embed()
                dt = time.perf_counter() - t0
                timing.pos_embed_s += dt
                timing.transform_s += dt
            if acts is None or not flags.share_activations:
                t0 = time.perf_counter()
                self.cache.stats.image_encoder_invocations += 1
                acts = encode_image(
                    img, tensors, self.config, pos_embed=pos,
                    truncate=flags.truncate_encoder, pool=self.pool, frame_id=self._frames,
                )
                timing.encode_s += time.perf_counter() - t0

            t0 = time.perf_counter()
            cond = self._conditional(prompt, flags)
            self.cache.stats.decoder_invocations += 1
            logits = decode(acts, cond.gamma, cond.beta, dweights, self.config, pool=self.pool)
            logit_maps.append(prompt_probability(logits))
            timing.decode_s += time.perf_counter() - t0

        t0 = time.perf_counter()
        maps = np.stack(logit_maps, axis=0)
        fused = postprocess(fuse(maps, self.fusion), self.blur_kernel, self.blur_sigma)
        timing.fuse_s = time.perf_counter() - t0
        timing.total_s = time.perf_counter() - t_start
        return FusedHeatmap(prompt_maps=maps, fused=fused, timing=timing)

    def segment_preset(
        self, image: np.ndarray, prompts: Sequence[str], preset: str
    ) -> FusedHeatmap:
        return self.segment_optimized(image, prompts, resolve_preset(preset))
