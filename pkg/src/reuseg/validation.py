"""Input validation shared by the pipeline, the CLI, and the estimator."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import InputError


def check_rgb_image(image) -> np.ndarray:
    """Accept an (H, W, 3) uint8 array with H, W >= 1; return it as ndarray."""
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InputError(f"expected an (H, W, 3) RGB image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1 or arr.size == 0:
        raise InputError("empty image")
    if arr.dtype != np.uint8:
        raise InputError(f"expected uint8 pixels, got {arr.dtype}")
    return arr


def check_prompts(prompts: Sequence[str]) -> tuple[str, ...]:
    """At least one prompt, all non-empty strings, no duplicates; order kept."""
    if isinstance(prompts, str):
        raise InputError("prompts must be a sequence of strings, not a single string")
    out = tuple(prompts)
    if len(out) < 1:
        raise InputError("at least one prompt is required")
    for p in out:
        if not isinstance(p, str) or not p.strip():
            raise InputError(f"prompts must be non-empty strings, got {p!r}")
    if len(set(out)) != len(out):
        raise InputError(f"duplicate prompts: {sorted({p for p in out if out.count(p) > 1})}")
    return out


def check_threshold(threshold: float) -> float:
    t = float(threshold)
    if not 0.0 < t < 1.0:
        raise InputError(f"threshold must be in (0, 1), got {threshold}")
    return t
