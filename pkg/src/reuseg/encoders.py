"""Vision and text encoders.

The vision side is a CLIP-style ViT that can stop early: segmentation only
consumes the hidden states at the configured extract layers, so every block
past the deepest extract layer is dead weight and ``truncate=True`` skips it.
The text side is a small causal transformer that turns one prompt into one
conditional embedding. It always runs in float32; the conditional feeds FiLM
projections whose parameters are cached in float32 and cast at use.

The built-in tokenizer is a stable hash tokenizer, good for synthetic weights
only. Pretrained vocabularies must arrive as exporter-supplied token ids.
"""

from __future__ import annotations

import hashlib
import json
import re
from typing import Mapping, NamedTuple

import numpy as np

from .blocks import block_forward, block_weights
from .config import ModelConfig
from .errors import ConfigError, DimensionError, InputError
from .tensor import ConstantPool, F32, bilinear_resize, layer_norm, linear, patch_embed

_WORD = re.compile(r"[a-z0-9]+")

START_ID = 0
END_ID = 1


class TokenSequence(NamedTuple):
    ids: tuple[int, ...]
    eot_index: int


class ActivationSet(NamedTuple):
    """Hidden states tapped from the vision encoder, ascending depth order."""

    frame_id: int | None
    layers: tuple[np.ndarray, ...]
    grid: int
    blocks_executed: int


def _word_id(word: str, vocab_size: int) -> int:
    h = hashlib.blake2b(word.encode("utf-8"), digest_size=8).digest()
    return 2 + int.from_bytes(h, "big") % (vocab_size - 2)


def tokenize(prompt: str, config: ModelConfig) -> TokenSequence:
    """Hash-based fallback tokenizer: lowercase, split, stable 64-bit word ids.

    Start id 0 is prepended and end id 1 appended; sequences longer than the
    context are truncated but always keep the end token.
    """
    if len(prompt) > 256:
        raise InputError(f"prompt length {len(prompt)} exceeds the 256-character limit")
    ids = [START_ID]
    ids += [_word_id(w, config.vocab_size) for w in _WORD.findall(prompt.lower())]
    ids.append(END_ID)
    if len(ids) > config.context_length:
        ids = ids[: config.context_length - 1] + [END_ID]
    return TokenSequence(ids=tuple(ids), eot_index=len(ids) - 1)


def load_token_table(path, config: ModelConfig) -> dict[str, TokenSequence]:
    """Read an exporter-produced prompt-token JSON file.

    The file is self-describing: context_length and vocab_size must match the
    engine config so pretrained token ids are never fed to a mismatched model,
    and start_id/end_id declare the vocabulary's own framing tokens (a real
    BPE vocabulary puts them at the top of the id space, the built-in hash
    tokenizer at 0 and 1). Every entry is checked against that framing.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as e:
        raise InputError(f"cannot read token table {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"token table {path} is not valid JSON: {e}") from e
    for key in ("context_length", "vocab_size", "start_id", "end_id", "prompts"):
        if key not in doc:
            raise InputError(f"token table {path} lacks required key {key!r}")
    if doc["context_length"] != config.context_length:
        raise InputError(
            f"token table context_length {doc['context_length']} != config {config.context_length}"
        )
    if doc["vocab_size"] != config.vocab_size:
        raise InputError(
            f"token table vocab_size {doc['vocab_size']} != config {config.vocab_size}"
        )
    start, end = int(doc["start_id"]), int(doc["end_id"])
    for name, tok in (("start_id", start), ("end_id", end)):
        if not 0 <= tok < config.vocab_size:
            raise InputError(f"token table {name} {tok} out of range for vocab {config.vocab_size}")
    if start == end:
        raise InputError("token table start_id and end_id must differ")
    table: dict[str, TokenSequence] = {}
    for prompt, entry in doc["prompts"].items():
        ids = tuple(int(i) for i in entry["ids"])
        eot = int(entry["eot_index"])
        if not ids or ids[0] != start or eot >= len(ids) or ids[eot] != end:
            raise InputError(f"token table entry for {prompt!r} is not [start, ..., end]-framed")
        if any(not 0 <= i < config.vocab_size for i in ids):
            raise InputError(f"token table entry for {prompt!r} holds out-of-vocab ids")
        if len(ids) > config.context_length:
            raise InputError(f"token table entry for {prompt!r} exceeds the context length")
        table[prompt] = TokenSequence(ids=ids, eot_index=eot)
    return table


def encode_text(
    tokens: TokenSequence,
    tensors: Mapping[str, np.ndarray],
    config: ModelConfig,
    pool: ConstantPool | None = None,
) -> np.ndarray:
    """One prompt -> conditional embedding of length embed_dim, float32.

    Token + positional embedding, causal pre-norm blocks, final layer norm,
    then the hidden state at the end token projected to embed_dim.
    """
    ids = np.asarray(tokens.ids, dtype=np.int64)
    if ids.ndim != 1 or ids.size < 2:
        raise InputError(f"token sequence must hold at least [start, end], got {tokens.ids!r}")
    if int(ids.max()) >= config.vocab_size:
        raise InputError(f"token id {int(ids.max())} out of range for vocab {config.vocab_size}")
    x = tensors["text.token_embed"][ids].astype(F32) + tensors["text.pos_embed"][: ids.size].astype(F32)
    for i in range(config.text_layers):
        w = block_weights(tensors, f"text.blocks.{i}")
        x = block_forward(x, w, config.text_heads, causal=True, pool=pool)
    x = layer_norm(x, tensors["text.ln_final.gamma"], tensors["text.ln_final.beta"])
    return linear(x[tokens.eot_index], tensors["text.proj.weight"])


def interpolate_pos_embed(native: np.ndarray, target_grid: int) -> np.ndarray:
    """Resize the learned position grid to a new patch grid, CLS row untouched.

    The grid rows are treated as a g x g image with vision_dim channels and
    bilinearly resampled; identity sizes return a bitwise-equal copy.
    """
    if target_grid < 1:
        raise ConfigError(f"target grid {target_grid} must be >= 1")
    rows, dim = native.shape
    g = int(round((rows - 1) ** 0.5))
    if rows < 2 or g * g != rows - 1:
        raise DimensionError(f"positional embedding with {rows} rows is not CLS + g^2 grid rows")
    grid = native[1:].reshape(g, g, dim).transpose(2, 0, 1)
    resized = bilinear_resize(grid, target_grid, target_grid)
    flat = resized.transpose(1, 2, 0).reshape(target_grid * target_grid, dim)
    return np.concatenate([native[:1], flat], axis=0)


def encode_image(
    image: np.ndarray,
    tensors: Mapping[str, np.ndarray],
    config: ModelConfig,
    pos_embed: np.ndarray,
    truncate: bool = False,
    pool: ConstantPool | None = None,
    frame_id: int | None = None,
) -> ActivationSet:
    """Run the ViT and tap hidden states after each extract layer.

    With ``truncate`` the loop stops right after the deepest extract layer
    (max(extract_layers)+1 blocks); the tapped activations are identical
    either way because extraction happens before the skipped blocks.
    """
    c, h, w = image.shape
    if c != 3 or h != config.image_size or w != config.image_size:
        raise DimensionError(
            f"image shape {image.shape} != (3, {config.image_size}, {config.image_size})"
        )
    if pos_embed.shape != (config.tokens, config.vision_dim):
        raise DimensionError(
            f"pos embed shape {pos_embed.shape} != ({config.tokens}, {config.vision_dim})"
        )
    tok = patch_embed(
        image, tensors["vision.patch_embed.weight"], tensors["vision.patch_embed.bias"], config.patch
    )
    cls = tensors["vision.cls_embed"][None, :].astype(image.dtype)
    x = np.concatenate([cls, tok], axis=0) + pos_embed.astype(image.dtype)
    extract = set(config.extract_layers)
    n_blocks = max(config.extract_layers) + 1 if truncate else config.vision_layers
    taps: list[np.ndarray] = []
    for i in range(n_blocks):
        x = block_forward(x, block_weights(tensors, f"vision.blocks.{i}"), config.vision_heads, pool=pool)
        if i in extract:
            taps.append(x)
    return ActivationSet(
        frame_id=frame_id, layers=tuple(taps), grid=config.grid, blocks_executed=n_blocks
    )
