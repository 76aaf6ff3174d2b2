"""scikit-learn style facade over the engine.

`fit` resolves weights and builds the engine (there is no training; fitting
is model loading), `transform` maps a batch of RGB frames to fused heatmaps,
and `predict` binarizes them. All constructor arguments are plain params so
`get_params`/`set_params`/`clone` behave like any other estimator.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import InputError
from .pipeline import Engine, resolve_preset
from .validation import check_prompts, check_rgb_image, check_threshold
from .weights import resolve_weights


class PromptSegmenter(TransformerMixin, BaseEstimator):
    """Open-vocabulary segmenter with a transformer-reuse inference engine.

    Parameters
    ----------
    prompts : sequence of str
        Text classes whose fused probability map is produced.
    preset : str, default="blabberseg"
        Optimization preset; "original" is the unoptimized float32 path.
    weights : str, default="random:tiny"
        Weight container path or "random:tiny" / "random:base".
    seed : int, default=42
        Seed for random weight presets.
    image_size : int or None
        Override the config image size (None keeps the container's).
    fusion : {"mean", "min", "max"}, default="mean"
    threshold : float, default=0.5
        Binarization threshold used by `predict`.
    """

    def __init__(
        self,
        prompts=("grass", "lawn", "flat", "park"),
        preset: str = "blabberseg",
        weights: str = "random:tiny",
        seed: int = 42,
        image_size: int | None = None,
        fusion: str = "mean",
        threshold: float = 0.5,
    ):
        self.prompts = prompts
        self.preset = preset
        self.weights = weights
        self.seed = seed
        self.image_size = image_size
        self.fusion = fusion
        self.threshold = threshold

    def fit(self, X=None, y=None):
        """Resolve weights and build the engine; X and y are ignored."""
        self.prompts_ = check_prompts(self.prompts)
        self.flags_ = resolve_preset(self.preset)
        check_threshold(self.threshold)
        store = resolve_weights(self.weights, seed=self.seed, image_size=self.image_size)
        self.engine_ = Engine(store, fusion=self.fusion)
        return self

    def _frames(self, X) -> list[np.ndarray]:
        arr = np.asarray(X) if not isinstance(X, (list, tuple)) else X
        if isinstance(arr, np.ndarray):
            if arr.ndim == 3:
                return [check_rgb_image(arr)]
            if arr.ndim == 4:
                return [check_rgb_image(a) for a in arr]
            raise InputError(f"X must be (H, W, 3) or (N, H, W, 3), got shape {arr.shape}")
        return [check_rgb_image(a) for a in arr]

    def transform(self, X) -> np.ndarray:
        """Fused probability maps, shape (N, S, S) float32."""
        check_is_fitted(self, "engine_")
        maps = [
            self.engine_.segment_optimized(img, self.prompts_, self.flags_).fused
            for img in self._frames(X)
        ]
        return np.stack(maps, axis=0)

    def predict(self, X) -> np.ndarray:
        """Binary masks at the configured threshold, shape (N, S, S) bool."""
        return self.transform(X) >= self.threshold

    def __sklearn_is_fitted__(self) -> bool:
        return hasattr(self, "engine_")
