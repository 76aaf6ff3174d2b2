"""Weight container: deterministic binary format, seeded init, bit-exact round trip.

Layout (little-endian, no padding):

    magic   8 bytes  "BSEGW1\\0\\0"
    version u32
    config  u32 length + UTF-8 JSON of ModelConfig
    count   u32
    per tensor, in sorted-name order:
        name  u32 length + UTF-8 bytes
        dtype u8 (0 = F32, 1 = F16)
        rank  u8
        dims  u64 x rank
        data  raw little-endian elements
"""

from __future__ import annotations

import hashlib
import io
import json
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .config import ModelConfig, PRESET_CONFIGS
from .errors import (
    BadMagicError,
    ConfigError,
    DuplicateParameterError,
    InputError,
    MissingParameterError,
    OutputError,
    ShapeMismatchError,
    TruncatedContainerError,
)
from .tensor import F16, F32

MAGIC = b"BSEGW1\x00\x00"
VERSION = 1

_DTYPE_CODES = {F32: 0, F16: 1}
_CODE_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f2")}


def _block_shapes(prefix: str, dim: int) -> dict[str, tuple[int, ...]]:
    hidden = 4 * dim
    return {
        f"{prefix}.ln1.gamma": (dim,),
        f"{prefix}.ln1.beta": (dim,),
        f"{prefix}.attn.q.weight": (dim, dim),
        f"{prefix}.attn.q.bias": (dim,),
        f"{prefix}.attn.k.weight": (dim, dim),
        f"{prefix}.attn.k.bias": (dim,),
        f"{prefix}.attn.v.weight": (dim, dim),
        f"{prefix}.attn.v.bias": (dim,),
        f"{prefix}.attn.out.weight": (dim, dim),
        f"{prefix}.attn.out.bias": (dim,),
        f"{prefix}.ln2.gamma": (dim,),
        f"{prefix}.ln2.beta": (dim,),
        f"{prefix}.mlp.fc1.weight": (hidden, dim),
        f"{prefix}.mlp.fc1.bias": (hidden,),
        f"{prefix}.mlp.fc2.weight": (dim, hidden),
        f"{prefix}.mlp.fc2.bias": (dim,),
    }


def parameter_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Every parameter name the engine needs, with its expected shape.

    vision.pos_embed is listed at the config grid; load() relaxes its row
    count to any 1 + n^2 so checkpoints trained at another resolution can be
    interpolated at startup.
    """
    c = config
    shapes: dict[str, tuple[int, ...]] = {
        "vision.patch_embed.weight": (c.vision_dim, 3, c.patch, c.patch),
        "vision.patch_embed.bias": (c.vision_dim,),
        "vision.cls_embed": (c.vision_dim,),
        "vision.pos_embed": (c.tokens, c.vision_dim),
        "text.token_embed": (c.vocab_size, c.text_dim),
        "text.pos_embed": (c.context_length, c.text_dim),
        "text.ln_final.gamma": (c.text_dim,),
        "text.ln_final.beta": (c.text_dim,),
        "text.proj.weight": (c.embed_dim, c.text_dim),
        "decoder.film_mul.weight": (c.reduce_dim, c.embed_dim),
        "decoder.film_mul.bias": (c.reduce_dim,),
        "decoder.film_add.weight": (c.reduce_dim, c.embed_dim),
        "decoder.film_add.bias": (c.reduce_dim,),
        "decoder.head.deconv1.weight": (c.reduce_dim, c.reduce_dim // 2, 4, 4),
        "decoder.head.deconv1.bias": (c.reduce_dim // 2,),
        "decoder.head.deconv2.weight": (c.reduce_dim // 2, 1, 4, 4),
        "decoder.head.deconv2.bias": (1,),
    }
    for i in range(c.vision_layers):
        shapes.update(_block_shapes(f"vision.blocks.{i}", c.vision_dim))
    for i in range(c.text_layers):
        shapes.update(_block_shapes(f"text.blocks.{i}", c.text_dim))
    for i in range(c.decoder_blocks):
        shapes[f"decoder.reduce.{i}.weight"] = (c.reduce_dim, c.vision_dim)
        shapes[f"decoder.reduce.{i}.bias"] = (c.reduce_dim,)
        shapes.update(_block_shapes(f"decoder.blocks.{i}", c.reduce_dim))
    return shapes


def _pos_embed_rows_ok(rows: int) -> bool:
    n = int(round((rows - 1) ** 0.5))
    return rows >= 2 and n * n == rows - 1


@dataclass
class WeightStore:
    """Immutable-by-convention bundle of a config and its named parameters."""

    config: ModelConfig
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def validate(self) -> None:
        expected = parameter_shapes(self.config)
        missing = sorted(set(expected) - set(self.tensors))
        if missing:
            raise MissingParameterError(f"missing parameters: {missing}")
        extra = sorted(set(self.tensors) - set(expected))
        if extra:
            raise ShapeMismatchError(f"unexpected parameters: {extra}")
        for name, shape in expected.items():
            got = self.tensors[name].shape
            if name == "vision.pos_embed":
                if len(got) == 2 and got[1] == shape[1] and _pos_embed_rows_ok(got[0]):
                    continue
                raise ShapeMismatchError(
                    f"tensor {name!r} has shape {got}, expected (1 + n^2, {shape[1]})"
                )
            if tuple(got) != shape:
                raise ShapeMismatchError(f"tensor {name!r} has shape {got}, expected {shape}")

    def cast(self, dtype) -> "WeightStore":
        from .tensor import cast as cast_op

        return WeightStore(self.config, {k: cast_op(v, dtype) for k, v in self.tensors.items()})


def random_init(config: ModelConfig, seed: int) -> WeightStore:
    """Seeded deterministic init: weights ~ N(0, 0.02), norm gains 1, biases 0.

    Each tensor draws from its own stream keyed by (seed, crc32(name)), so the
    result is independent of generation order and identical across platforms.
    """
    tensors: dict[str, np.ndarray] = {}
    for name, shape in parameter_shapes(config).items():
        if name.endswith(".gamma"):
            t = np.ones(shape, dtype=F32)
        elif name.endswith((".bias", ".beta")):
            t = np.zeros(shape, dtype=F32)
        else:
            rng = np.random.default_rng([seed, zlib.crc32(name.encode("utf-8"))])
            t = rng.normal(0.0, 0.02, size=shape).astype(F32)
        t.flags.writeable = False
        tensors[name] = t
    store = WeightStore(config, tensors)
    store.validate()
    return store


def _write(f, store: WeightStore) -> None:
    f.write(MAGIC)
    f.write(struct.pack("<I", VERSION))
    cfg = store.config.to_json().encode("utf-8")
    f.write(struct.pack("<I", len(cfg)))
    f.write(cfg)
    f.write(struct.pack("<I", len(store.tensors)))
    for name in sorted(store.tensors):
        t = store.tensors[name]
        if t.dtype not in _DTYPE_CODES:
            raise ConfigError(f"tensor {name!r} has unsupported dtype {t.dtype}")
        nb = name.encode("utf-8")
        f.write(struct.pack("<I", len(nb)))
        f.write(nb)
        f.write(struct.pack("<BB", _DTYPE_CODES[t.dtype], t.ndim))
        f.write(struct.pack(f"<{t.ndim}Q", *t.shape))
        f.write(np.ascontiguousarray(t, dtype=t.dtype.newbyteorder("<")).tobytes())


def save(store: WeightStore, path) -> None:
    """Byte-exact canonical serialization (tensors in sorted-name order)."""
    try:
        with open(path, "wb") as f:
            _write(f, store)
    except OSError as e:
        raise OutputError(f"cannot write weight container {path}: {e}") from e


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.off = 0

    def take(self, n: int, what: str) -> bytes:
        if self.off + n > len(self.data):
            raise TruncatedContainerError(f"container truncated while reading {what}")
        chunk = self.data[self.off : self.off + n]
        self.off += n
        return chunk

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def load(path) -> WeightStore:
    """Load and validate a container; errors name the offending tensor."""
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise InputError(f"cannot read weight container {path}: {e}") from e
    r = _Reader(data)
    if r.take(len(MAGIC), "magic") != MAGIC:
        raise BadMagicError(f"{path} is not a weight container (bad magic)")
    version = r.u32("version")
    if version != VERSION:
        raise BadMagicError(f"unsupported container version {version}")
    cfg_len = r.u32("config length")
    config = ModelConfig.from_json(r.take(cfg_len, "config").decode("utf-8"))
    count = r.u32("tensor count")
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        name_len = r.u32("tensor name length")
        name = r.take(name_len, "tensor name").decode("utf-8")
        code, rank = struct.unpack("<BB", r.take(2, f"tensor {name!r} header"))
        if code not in _CODE_DTYPES:
            raise ShapeMismatchError(f"tensor {name!r} has unknown dtype code {code}")
        dims = struct.unpack(f"<{rank}Q", r.take(8 * rank, f"tensor {name!r} dims"))
        dt = _CODE_DTYPES[code]
        nbytes = int(np.prod(dims, dtype=np.int64)) * dt.itemsize if rank else dt.itemsize * 1
        raw = r.take(nbytes, f"tensor {name!r} data")
        if name in tensors:
            raise DuplicateParameterError(f"tensor {name!r} appears more than once")
        arr = np.frombuffer(raw, dtype=dt).reshape(dims).astype(dt.newbyteorder("="))
        arr.flags.writeable = False
        tensors[name] = arr
    if r.off != len(data):
        raise TruncatedContainerError(f"{len(data) - r.off} trailing bytes after last tensor")
    store = WeightStore(config, tensors)
    store.validate()
    return store


def store_checksum(store: WeightStore) -> str:
    """SHA-256 of the canonical serialization."""
    buf = io.BytesIO()
    _write(buf, store)
    return hashlib.sha256(buf.getvalue()).hexdigest()


def resolve_weights(spec: str, seed: int = 42, image_size: int | None = None) -> WeightStore:
    """Turn a --weights argument (path, "random:tiny", "random:base") into a store."""
    if isinstance(spec, str) and spec.startswith("random:"):
        preset = spec.split(":", 1)[1]
        if preset not in PRESET_CONFIGS:
            raise InputError(f"unknown random preset {preset!r}, expected one of {sorted(PRESET_CONFIGS)}")
        cfg = PRESET_CONFIGS[preset]() if image_size is None else PRESET_CONFIGS[preset](image_size)
        return random_init(cfg, seed)
    store = load(spec)
    if image_size is not None and image_size != store.config.image_size:
        store = WeightStore(store.config.with_image_size(image_size), store.tensors)
        store.validate()
    return store
