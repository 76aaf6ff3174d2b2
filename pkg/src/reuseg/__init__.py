"""reuseg: multi-prompt open-vocabulary segmentation with aggressive reuse.

A CLIP-style vision/text encoder pair and a FiLM-conditioned decoder, wrapped
in an inference engine that caches per-prompt conditionals, reuses the
interpolated positional embedding, shares image activations across prompts,
truncates the encoder at the deepest extracted layer, and can run in float16
with float32 accumulation. A naive per-prompt path with none of the tricks
serves as the bitwise ground truth.
"""

from .bench import BenchReport, PresetResult, run_benchmark
from .cache import CachedConditional, CacheStats, ReuseCache, film_params
from .config import ModelConfig, base_config, tiny_config
from .corpus import NoiseSpec, add_noise, load_corpus, read_ppm, synth_corpus, write_ppm
from .decoder import decode, film
from .encoders import (
    END_ID,
    START_ID,
    ActivationSet,
    TokenSequence,
    encode_image,
    encode_text,
    interpolate_pos_embed,
    load_token_table,
    tokenize,
)
from .errors import (
    BadMagicError,
    ConfigError,
    DimensionError,
    DuplicateParameterError,
    InputError,
    MissingParameterError,
    OutputError,
    ReusegError,
    ShapeMismatchError,
    TruncatedContainerError,
    WeightFormatError,
)
from .estimator import PromptSegmenter
from .metrics import accuracy, miou, recall, speedup
from .pipeline import (
    PRESETS,
    Engine,
    FusedHeatmap,
    OptimizationFlags,
    StageTiming,
    fuse,
    postprocess,
    preprocess,
    prompt_probability,
    resolve_preset,
)
from .tensor import F16, F32, ConstantPool
from .weights import (
    WeightStore,
    load,
    parameter_shapes,
    random_init,
    resolve_weights,
    save,
    store_checksum,
)

__version__ = "0.1.0"

__all__ = [
    "ActivationSet",
    "BadMagicError",
    "BenchReport",
    "CacheStats",
    "CachedConditional",
    "ConfigError",
    "ConstantPool",
    "DimensionError",
    "END_ID",
    "DuplicateParameterError",
    "Engine",
    "F16",
    "F32",
    "FusedHeatmap",
    "InputError",
    "MissingParameterError",
    "ModelConfig",
    "NoiseSpec",
    "OptimizationFlags",
    "OutputError",
    "PRESETS",
    "PresetResult",
    "PromptSegmenter",
    "ReusegError",
    "START_ID",
    "ReuseCache",
    "ShapeMismatchError",
    "StageTiming",
    "TokenSequence",
    "TruncatedContainerError",
    "WeightFormatError",
    "WeightStore",
    "accuracy",
    "add_noise",
    "base_config",
    "decode",
    "encode_image",
    "encode_text",
    "film",
    "film_params",
    "fuse",
    "interpolate_pos_embed",
    "load",
    "load_corpus",
    "load_token_table",
    "miou",
    "parameter_shapes",
    "postprocess",
    "preprocess",
    "prompt_probability",
    "random_init",
    "read_ppm",
    "recall",
    "resolve_preset",
    "resolve_weights",
    "run_benchmark",
    "save",
    "speedup",
    "store_checksum",
    "synth_corpus",
    "tiny_config",
    "tokenize",
    "write_ppm",
]
