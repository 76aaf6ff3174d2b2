"""Benchmark harness: preset sweeps against the original-preset ground truth.

Methodology mirrors the standard single-device comparison: presets run
sequentially on the same frames with a fresh engine each (timing isolation),
the first frame per preset warms the caches and is excluded from timing,
durations aggregate as mean and population std, and every preset's fused maps
are scored against the original preset's maps frame by frame. The original
preset is the all-flags-off float32 path, which is bitwise equal to the naive
oracle, so it plays the role of ground truth.
"""

from __future__ import annotations

import dataclasses
import json
import platform
import sys
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .corpus import NoiseSpec, add_noise, read_ppm
from .encoders import TokenSequence
from .errors import InputError
from .metrics import accuracy, miou, recall, speedup
from .pipeline import Engine, resolve_preset
from .validation import check_prompts, check_threshold
from .weights import WeightStore

BASELINE_PRESET = "original"


@dataclass
class PresetResult:
    mean_duration_s: float
    std_duration_s: float
    hz: float
    speedup_pct: float
    mean_accuracy_pct: float
    miou_pct: float
    mean_recall_pct: float
    mean_transform_s: float


@dataclass
class BenchReport:
    seed: int
    frames: int
    P: int
    image_size: int
    presets: list[str]
    machine: str
    results: dict[str, PresetResult] = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return _round_floats(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


def _round_floats(obj, digits: int = 6):
    """Round every float to the given number of significant digits."""
    if isinstance(obj, float):
        return float(f"{obj:.{digits}g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round_floats(v, digits) for v in obj]
    return obj


def _machine_note() -> str:
    return (
        f"{platform.platform()} / Python {sys.version.split()[0]} / numpy {np.__version__}"
    )


def _frame_noise_seed(base: int, index: int) -> int:
    # Well-mixed per-frame child seed, stable across platforms.
    return int(np.random.SeedSequence([base, index]).generate_state(1)[0])


def load_frames(
    corpus: Sequence, frames: int, noise: NoiseSpec | None = None
) -> list[np.ndarray]:
    """Read `frames` images, cycling the corpus if shorter, noise applied per frame."""
    paths = list(corpus)
    if not paths:
        raise InputError("corpus is empty")
    out = []
    for i in range(frames):
        img = read_ppm(paths[i % len(paths)])
        if noise is not None and noise.kind != "none":
            per_frame = dataclasses.replace(noise, seed=_frame_noise_seed(noise.seed, i))
            img = add_noise(img, per_frame)
        out.append(img)
    return out


def run_benchmark(
    corpus: Sequence,
    prompts: Sequence[str],
    presets: Sequence[str],
    frames: int,
    store: WeightStore,
    noise: NoiseSpec | None = None,
    seed: int = 0,
    fusion: str = "mean",
    threshold: float = 0.5,
    token_table: Mapping[str, TokenSequence] | None = None,
) -> BenchReport:
    """Run every preset over the same frames and score against the baseline."""
    prompts = check_prompts(prompts)
    threshold = check_threshold(threshold)
    preset_list = list(presets)
    for name in preset_list:
        resolve_preset(name)
    if BASELINE_PRESET not in preset_list:
        raise InputError(f"presets must include {BASELINE_PRESET!r} (the ground-truth baseline)")
    if frames < 2:
        raise InputError(f"need at least 2 frames (first is warmup), got {frames}")
    images = load_frames(corpus, frames, noise)

    report = BenchReport(
        seed=seed,
        frames=frames,
        P=len(prompts),
        image_size=store.config.image_size,
        presets=preset_list,
        machine=_machine_note(),
    )

    # Baseline first so every other preset can be scored as it finishes;
    # the report keeps the caller's preset order.
    order = [BASELINE_PRESET] + [p for p in preset_list if p != BASELINE_PRESET]
    truth_maps: list[np.ndarray] = []
    raw: dict[str, dict[str, float]] = {}
    for name in order:
        engine = Engine(store, fusion=fusion)
        if token_table:
            engine.set_token_table(token_table)
        durations, transforms, accs, mious, recalls = [], [], [], [], []
        for i, img in enumerate(images):
            t0 = time.perf_counter()
            result = engine.segment_preset(img, prompts, name)
            durations.append(time.perf_counter() - t0)
            transforms.append(result.timing.transform_s)
            if name == BASELINE_PRESET:
                truth_maps.append(result.fused)
            accs.append(accuracy(result.fused, truth_maps[i], threshold))
            mious.append(miou(result.fused, truth_maps[i], threshold))
            recalls.append(recall(result.fused, truth_maps[i], threshold))
        timed = durations[1:]
        mean_s = float(np.mean(timed))
        raw[name] = dict(
            mean_duration_s=mean_s,
            std_duration_s=float(np.std(timed)),
            hz=1.0 / mean_s,
            mean_accuracy_pct=float(np.mean(accs)),
            miou_pct=float(np.mean(mious)),
            mean_recall_pct=float(np.mean(recalls)),
            mean_transform_s=float(np.mean(transforms[1:])),
        )

    base_hz = raw[BASELINE_PRESET]["hz"]
    for name in preset_list:
        r = raw[name]
        report.results[name] = PresetResult(speedup_pct=speedup(base_hz, r["hz"]), **r)
    return report
