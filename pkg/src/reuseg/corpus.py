"""Synthetic test imagery, PPM (P6) I/O, and the noise protocol.

The generator layers multi-octave value noise with a few geometric shapes so
frames have both smooth regions and hard edges; everything is seeded, so a
corpus is reproducible byte-for-byte. PPM was chosen because its P6 form is
trivially bit-exact: magic, ASCII dims, maxval 255, raw RGB.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError, OutputError
from .tensor import F32, bilinear_resize
from .validation import check_rgb_image


def write_ppm(image: np.ndarray, path) -> None:
    img = check_rgb_image(image)
    h, w = img.shape[:2]
    try:
        with open(path, "wb") as f:
            f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
            f.write(np.ascontiguousarray(img).tobytes())
    except OSError as e:
        raise OutputError(f"cannot write PPM {path}: {e}") from e


def _read_token(f) -> bytes:
    # PPM headers allow comments (# to end of line) between whitespace-separated tokens.
    tok = b""
    while True:
        ch = f.read(1)
        if not ch:
            if tok:
                return tok
            raise InputError("truncated PPM header")
        if ch == b"#":
            while ch and ch != b"\n":
                ch = f.read(1)
            continue
        if ch.isspace():
            if tok:
                return tok
            continue
        tok += ch


def read_ppm(path) -> np.ndarray:
    try:
        with open(path, "rb") as f:
            if _read_token(f) != b"P6":
                raise InputError(f"{path}: not a P6 PPM file")
            w, h, maxval = (int(_read_token(f)) for _ in range(3))
            if maxval != 255:
                raise InputError(f"{path}: only maxval 255 is supported, got {maxval}")
            raw = f.read(w * h * 3)
            if len(raw) != w * h * 3:
                raise InputError(f"{path}: truncated pixel data")
            return np.frombuffer(raw, dtype=np.uint8).reshape(h, w, 3).copy()
    except OSError as e:
        raise InputError(f"cannot read PPM {path}: {e}") from e


def _value_noise(rng: np.random.Generator, size: int) -> np.ndarray:
    """Sum of bilinearly upsampled random grids, octave amplitudes halving."""
    acc = np.zeros((size, size), dtype=F32)
    cells, amp = 4, 1.0
    while cells <= size:
        coarse = rng.standard_normal((1, cells, cells)).astype(F32)
        acc += amp * bilinear_resize(coarse, size, size)[0]
        cells *= 2
        amp *= 0.5
    return acc


def synth_frame(size: int, seed: int, index: int) -> np.ndarray:
    """One deterministic (size, size, 3) uint8 frame."""
    rng = np.random.default_rng([seed, index])
    base = _value_noise(rng, size)
    yy, xx = np.mgrid[0:size, 0:size].astype(F32)
    for _ in range(rng.integers(2, 5)):
        kind = rng.integers(0, 2)
        level = rng.uniform(-2.0, 2.0)
        if kind == 0:
            cx, cy = rng.uniform(0, size, 2)
            r = rng.uniform(size * 0.08, size * 0.3)
            mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
        else:
            x0, y0 = rng.uniform(0, size * 0.7, 2)
            x1 = x0 + rng.uniform(size * 0.1, size * 0.4)
            y1 = y0 + rng.uniform(size * 0.1, size * 0.4)
            mask = (xx >= x0) & (xx < x1) & (yy >= y0) & (yy < y1)
        base = np.where(mask, 0.6 * base + level, base)
    lo, hi = base.min(), base.max()
    norm = (base - lo) / (hi - lo) if hi > lo else np.zeros_like(base)
    tint = rng.uniform(0.6, 1.0, size=3).astype(F32)
    rgb = norm[:, :, None] * tint[None, None, :]
    return np.clip(np.round(rgb * 255.0), 0, 255).astype(np.uint8)


def synth_corpus(n: int, size: int, seed: int, out_dir) -> list[Path]:
    """Write n seeded frames as PPM files; returns the paths in frame order."""
    if n < 1:
        raise InputError(f"corpus size must be >= 1, got {n}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"cannot create corpus directory {out}: {e}") from e
    paths = []
    for i in range(n):
        p = out / f"frame_{i:04d}.ppm"
        write_ppm(synth_frame(size, seed, i), p)
        paths.append(p)
    return paths


def load_corpus(corpus_dir) -> list[Path]:
    d = Path(corpus_dir)
    if not d.is_dir():
        raise InputError(f"corpus directory not found: {d}")
    paths = sorted(p for p in d.iterdir() if p.suffix.lower() == ".ppm")
    if not paths:
        raise InputError(f"no .ppm files in corpus directory {d}")
    return paths


@dataclass(frozen=True)
class NoiseSpec:
    """kind none, gaussian (param = sigma in pixel units), or saltpepper (param = p)."""

    kind: str = "none"
    param: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian", "saltpepper"):
            raise InputError(f"unknown noise kind {self.kind!r}")
        if self.kind == "gaussian" and self.param < 0:
            raise InputError(f"gaussian sigma must be >= 0, got {self.param}")
        if self.kind == "saltpepper" and not 0.0 <= self.param <= 1.0:
            raise InputError(f"salt-and-pepper p must be in [0, 1], got {self.param}")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "NoiseSpec":
        """Parse a CLI spec: "none", "gaussian:SIGMA", or "saltpepper:P"."""
        if text == "none":
            return cls("none", 0.0, seed)
        kind, sep, arg = text.partition(":")
        if not sep:
            raise InputError(f"noise spec {text!r} needs a parameter, e.g. gaussian:8")
        try:
            return cls(kind, float(arg), seed)
        except ValueError:
            raise InputError(f"bad noise parameter in {text!r}") from None


# Fixed per-kind stream ids so noise is reproducible across processes.
_NOISE_STREAM = {"gaussian": 1, "saltpepper": 2}


def add_noise(image: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    """Seeded pollution of a uint8 frame; "none" returns the input bitwise."""
    img = check_rgb_image(image)
    if spec.kind == "none":
        return img
    rng = np.random.default_rng([spec.seed, _NOISE_STREAM[spec.kind]])
    if spec.kind == "gaussian":
        noisy = img.astype(F32) + rng.normal(0.0, spec.param, size=img.shape).astype(F32)
        return np.clip(np.round(noisy), 0, 255).astype(np.uint8)
    flat = img.reshape(-1, 3).copy()
    n = flat.shape[0]
    hit = rng.random(n) < spec.param
    salt = rng.random(n) < 0.5
    flat[hit & salt] = 255
    flat[hit & ~salt] = 0
    return flat.reshape(img.shape)
