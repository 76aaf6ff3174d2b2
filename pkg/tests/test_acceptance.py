"""Acceptance gate: one test per release criterion.

Each test is self-contained (own engine, own corpus) so a failure points at
exactly one criterion. Numbered to keep `pytest -v` output in criterion order.
"""

import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from reuseg import (
    F16,
    F32,
    Engine,
    NoiseSpec,
    OptimizationFlags,
    PRESETS,
    accuracy,
    load,
    miou,
    random_init,
    resolve_preset,
    run_benchmark,
    save,
    speedup,
    store_checksum,
    synth_corpus,
    tiny_config,
)
from reuseg.corpus import read_ppm

REPO = Path(__file__).resolve().parent.parent
TINY_SEED42_SHA256 = "bbd2bf3149486da9b17272e10d3062a9146e76734914ad25530cbd69a77d5250"
PROMPTS_4 = ("grass", "lawn", "flat", "park")


@pytest.fixture(scope="module")
def store():
    return random_init(tiny_config(), 42)


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("acceptance_corpus")
    synth_corpus(50, 96, 42, d)
    return d


def _frames(corpus_dir, n):
    paths = sorted(corpus_dir.glob("*.ppm"))
    return [read_ppm(paths[i % len(paths)]) for i in range(n)]


def test_criterion_01_f32_reuse_exactness(store, corpus_dir):
    engine = Engine(store)
    flags = OptimizationFlags(F32, True, True, True, True)
    for frame in _frames(corpus_dir, 20):
        want = engine.segment_naive(frame, PROMPTS_4)
        got = engine.segment_optimized(frame, PROMPTS_4, flags)
        assert np.array_equal(want.prompt_maps, got.prompt_maps), "per-prompt maps differ"
        assert np.array_equal(want.fused, got.fused), "fused maps differ"
    print("criterion 1 PASS: F32 optimized path bitwise equals naive over 20 frames, P=4")


def test_criterion_02_truncation_accounting(store, corpus_dir):
    from reuseg import encode_image, interpolate_pos_embed

    cfg = store.config
    assert cfg.extract_layers == (3, 7, 9)
    pos = interpolate_pos_embed(store.tensors["vision.pos_embed"], cfg.grid)
    for frame in _frames(corpus_dir, 3):
        from reuseg.pipeline import preprocess

        x = preprocess(frame, cfg.image_size)
        full = encode_image(x, store.tensors, cfg, pos, truncate=False)
        cut = encode_image(x, store.tensors, cfg, pos, truncate=True)
        assert cut.blocks_executed == 10
        assert full.blocks_executed == 12
        for a, b in zip(full.layers, cut.layers):
            assert np.array_equal(a, b), "taps differ between truncated and full runs"
    print("criterion 2 PASS: truncated encoder runs 10 of 12 blocks with bitwise-equal taps")


def test_criterion_03_work_accounting(store, corpus_dir):
    frames = _frames(corpus_dir, 3)
    flags = resolve_preset("blabberseg")

    engine = Engine(store)
    engine.segment_optimized(frames[0], PROMPTS_4, flags)  # warm the caches
    warm = engine.stats
    engine.segment_optimized(frames[1], PROMPTS_4, flags)
    after = engine.stats
    assert after.image_encoder_invocations - warm.image_encoder_invocations == 1
    assert after.decoder_invocations - warm.decoder_invocations == 4
    assert after.text_encoder_invocations - warm.text_encoder_invocations == 0

    naive = Engine(store)
    naive.segment_naive(frames[2], PROMPTS_4)
    assert naive.stats.image_encoder_invocations == 4
    assert naive.stats.text_encoder_invocations == 4
    print("criterion 3 PASS: warm frame does 1 image / 4 decoder / 0 text passes; naive does 4 / 4")


def test_criterion_04_fp16_degradation_bound(store, corpus_dir):
    engine = Engine(store)
    flags = resolve_preset("blabberseg")
    assert flags.precision == F16
    agreements, mious = [], []
    for frame in _frames(corpus_dir, 50):
        truth = engine.segment_naive(frame, PROMPTS_4).fused
        half = engine.segment_optimized(frame, PROMPTS_4, flags).fused
        agreements.append(accuracy(half, truth, 0.5))
        mious.append(miou(half, truth, 0.5))
    mean_agree = float(np.mean(agreements))
    mean_miou = float(np.mean(mious))
    assert mean_agree >= 95.0, f"mean agreement {mean_agree:.2f}% < 95%"
    assert mean_miou >= 85.0, f"mean mIoU {mean_miou:.2f}% < 85%"
    print(
        f"criterion 4 PASS: FP16 vs naive-F32 over 50 frames: "
        f"agreement {mean_agree:.2f}% >= 95, mIoU {mean_miou:.2f}% >= 85"
    )


def test_criterion_05_throughput_scaling(store, corpus_dir):
    prompt_pool = ("grass", "lawn", "flat", "park", "field", "meadow", "ground", "clearing")
    speedups = {}
    for p in (1, 2, 4, 8):
        report = run_benchmark(
            sorted(corpus_dir.glob("*.ppm")),
            prompt_pool[:p],
            ["original", "blabberseg"],
            frames=31,  # 30 timed after the warmup frame
            store=store,
            seed=42,
        )
        speedups[p] = report.results["blabberseg"].speedup_pct / 100.0
    assert speedups[8] >= 2.0, f"speedup at P=8 is {speedups[8]:.2f}x < 2.0x"
    pairs = list(speedups.items())
    for (p_lo, s_lo), (p_hi, s_hi) in zip(pairs, pairs[1:]):
        assert s_hi >= s_lo, f"speedup fell from {s_lo:.2f}x (P={p_lo}) to {s_hi:.2f}x (P={p_hi})"
    line = ", ".join(f"P={p}: {s:.2f}x" for p, s in speedups.items())
    print(f"criterion 5 PASS: non-decreasing speedup, >= 2x at P=8 ({line})")


def test_criterion_06_metric_fidelity(store, corpus_dir):
    engine = Engine(store)
    for frame in _frames(corpus_dir, 3):
        for preset in PRESETS:
            fused = engine.segment_preset(frame, PROMPTS_4, preset).fused
            assert accuracy(fused, fused, 0.5) == 100.0
            assert miou(fused, fused, 0.5) == 100.0
    got = speedup(1.81, 16.78)
    assert abs(got - 927.41) / 927.41 < 0.01, f"speedup(1.81, 16.78) = {got:.2f}"
    print(
        f"criterion 6 PASS: self-comparison reads 100.0 for every heatmap; "
        f"speedup(1.81, 16.78) = {got:.2f}% within 1% of 927.41%"
    )


def test_criterion_07_pos_embed_reuse(store, corpus_dir):
    engine = Engine(store)
    flags = resolve_preset("blabberseg")
    frames = _frames(corpus_dir, 100)
    timings = [engine.segment_optimized(f, PROMPTS_4, flags).timing for f in frames]
    assert engine.stats.pos_embed_recomputations == 1
    assert timings[0].pos_embed_s > 0.0
    for i, t in enumerate(timings[1:], start=2):
        assert t.pos_embed_s == 0.0, f"frame {i} recorded interpolation work"
    print("criterion 7 PASS: 1 interpolation over 100 frames; frames 2..100 record zero interpolation time")


def test_criterion_08_noise_protocol(store, corpus_dir):
    report = run_benchmark(
        sorted(corpus_dir.glob("*.ppm")),
        PROMPTS_4,
        list(PRESETS),
        frames=4,
        store=store,
        noise=NoiseSpec("saltpepper", 0.05, 42),
        seed=42,
    )
    d = json.loads(report.to_json())
    assert set(d["results"]) == set(PRESETS)
    for preset, result in d["results"].items():
        for key, value in result.items():
            assert np.isfinite(value), f"{preset}.{key} is not finite"
    print("criterion 8 PASS: salt-and-pepper p=0.05 report covers all 6 presets with finite metrics")


def test_criterion_09_container_round_trip(store, tmp_path):
    for precision, tag in ((F32, "f32"), (F16, "f16")):
        s = store if precision == F32 else store.cast(F16)
        path = tmp_path / f"w_{tag}.bsegw"
        save(s, path)
        back = load(path)
        for name, t in s.tensors.items():
            assert back.tensors[name].dtype == t.dtype
            assert np.array_equal(back.tensors[name], t), f"{tag}:{name}"
    digest = store_checksum(store)
    assert digest == TINY_SEED42_SHA256, f"checksum drifted: {digest}"
    print("criterion 9 PASS: F32 and F16 round trips bitwise; seed-42 checksum matches published value")


def test_criterion_10_exporter_cross_component(tmp_path):
    exporter = REPO / "exporter"
    cli = exporter / "dist" / "cli.js"
    node = shutil.which("node")
    if node is None:
        pytest.skip("node is not installed")
    if not cli.exists():
        pytest.skip("exporter not built (run `npm run build` in exporter/)")

    def run(*args):
        proc = subprocess.run(
            [node, str(cli), *args], capture_output=True, text=True, timeout=600
        )
        assert proc.returncode == 0, proc.stderr
        return proc.stdout

    src = tmp_path / "source.safetensors"
    out = tmp_path / "exported.bsegw"
    tokens = tmp_path / "tokens.json"
    run("fixture", "--out", str(src))
    run(
        "export",
        "--source", str(src),
        "--out", str(out),
        "--tokens", str(tokens),
        "--prompts", "grass,lawn,flat,park",
    )

    exported = load(out)  # load() rejects any missing parameter
    assert exported.config.image_size == 352
    assert exported.config.vision_layers == 12
    assert all(t.dtype == F32 for t in exported.tensors.values())

    table = json.loads(tokens.read_text())
    assert table["context_length"] == 77
    decoded = json.loads(run("decode", "--tokens", str(tokens)))
    for prompt in ("grass", "lawn", "flat", "park"):
        assert table["prompts"][prompt]["ids"][0] == table["start_id"]
        assert decoded[prompt] == prompt, f"decode round trip broke for {prompt!r}"
    print("criterion 10 PASS: exported container loads complete at image_size 352; tokens decode back")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
