"""Architecture hyperparameters and the desk-scale / full-scale presets."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from .errors import ConfigError

# The upsampling head is two stride-4 transposed convolutions, so it can only
# reconstruct the input resolution when the patch edge is 16.
HEAD_UPSAMPLE = 16


@dataclass(frozen=True)
class ModelConfig:
    image_size: int
    patch: int
    vision_layers: int
    vision_dim: int
    vision_heads: int
    extract_layers: tuple[int, ...]
    text_layers: int
    text_dim: int
    text_heads: int
    context_length: int
    vocab_size: int
    embed_dim: int
    reduce_dim: int
    decoder_blocks: int
    decoder_heads: int

    def __post_init__(self):
        object.__setattr__(self, "extract_layers", tuple(int(i) for i in self.extract_layers))
        if self.image_size % self.patch != 0:
            raise ConfigError(f"image_size {self.image_size} not divisible by patch {self.patch}")
        if self.patch != HEAD_UPSAMPLE:
            raise ConfigError(f"patch must be {HEAD_UPSAMPLE} to match the upsampling head, got {self.patch}")
        ext = self.extract_layers
        if not ext or list(ext) != sorted(set(ext)):
            raise ConfigError(f"extract_layers must be strictly ascending and non-empty, got {ext}")
        if min(ext) < 0 or max(ext) >= self.vision_layers:
            raise ConfigError(f"extract_layers {ext} out of range for {self.vision_layers} vision layers")
        if len(ext) != self.decoder_blocks:
            raise ConfigError(f"{len(ext)} extract layers != {self.decoder_blocks} decoder blocks")
        if self.vision_dim % self.vision_heads != 0:
            raise ConfigError(f"vision_dim {self.vision_dim} not divisible by {self.vision_heads} heads")
        if self.text_dim % self.text_heads != 0:
            raise ConfigError(f"text_dim {self.text_dim} not divisible by {self.text_heads} heads")
        if self.reduce_dim % self.decoder_heads != 0:
            raise ConfigError(f"reduce_dim {self.reduce_dim} not divisible by {self.decoder_heads} heads")
        if self.reduce_dim % 2 != 0:
            raise ConfigError(f"reduce_dim must be even for the two-stage head, got {self.reduce_dim}")
        if self.context_length < 2:
            raise ConfigError("context_length must fit at least the start and end tokens")
        if self.vocab_size < 3:
            raise ConfigError("vocab_size must leave room for start/end ids plus one word id")

    @property
    def grid(self) -> int:
        return self.image_size // self.patch

    @property
    def tokens(self) -> int:
        return 1 + self.grid * self.grid

    def with_image_size(self, image_size: int) -> "ModelConfig":
        return dataclasses.replace(self, image_size=int(image_size))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["extract_layers"] = list(self.extract_layers)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - fields
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = fields - set(d)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        return cls(**d)

    @classmethod
    def from_json(cls, s: str) -> "ModelConfig":
        return cls.from_dict(json.loads(s))


def tiny_config(image_size: int = 96) -> ModelConfig:
    """Desk-scale preset: runs in milliseconds but keeps the 12-block encoder
    structure the truncation contract depends on."""
    return ModelConfig(
        image_size=image_size,
        patch=16,
        vision_layers=12,
        vision_dim=48,
        vision_heads=4,
        extract_layers=(3, 7, 9),
        text_layers=4,
        text_dim=32,
        text_heads=2,
        context_length=16,
        vocab_size=256,
        embed_dim=32,
        reduce_dim=16,
        decoder_blocks=3,
        decoder_heads=2,
    )


def base_config(image_size: int = 352) -> ModelConfig:
    """Full-scale preset matching the pretrained checkpoint family."""
    return ModelConfig(
        image_size=image_size,
        patch=16,
        vision_layers=12,
        vision_dim=768,
        vision_heads=12,
        extract_layers=(3, 7, 9),
        text_layers=12,
        text_dim=512,
        text_heads=8,
        context_length=77,
        vocab_size=49408,
        embed_dim=512,
        reduce_dim=64,
        decoder_blocks=3,
        decoder_heads=4,
    )


PRESET_CONFIGS = {"tiny": tiny_config, "base": base_config}
