"""Command-line entry point: benchmark sweeps, corpus synthesis, preset A/B.

Exit codes: 0 on success, 1 on any engine/input error (message on stderr).
"""

from __future__ import annotations

import argparse
import sys
import tempfile
from pathlib import Path

from .bench import BASELINE_PRESET, load_frames, run_benchmark
from .corpus import NoiseSpec, load_corpus, synth_corpus
from .encoders import load_token_table
from .errors import ReusegError
from .metrics import accuracy, miou, recall
from .pipeline import PRESETS, Engine
from .weights import resolve_weights

PRESET_ORDER = ["original", "fp", "rpe", "fp-rpe", "fp-rppe", "blabberseg"]


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--frames", type=int, default=10, help="frames to process per preset")
    p.add_argument(
        "--prompts",
        default="grass,lawn,flat,park",
        help="comma-separated prompt list",
    )
    p.add_argument("--size", type=int, default=352, help="square image size in pixels")
    p.add_argument(
        "--weights",
        default="random:tiny",
        help="weight container path, or random:tiny / random:base for seeded init",
    )
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--noise", default="none", help="none | gaussian:SIGMA | saltpepper:P")
    p.add_argument("--fusion", choices=("mean", "min", "max"), default="mean")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--corpus", default=None, help="directory of .ppm frames (default: synthesize)")
    p.add_argument("--tokens", default=None, help="exporter-produced prompt-token JSON")
    p.add_argument("--report", default=None, help="write the JSON report to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reuseg",
        description="Multi-prompt open-vocabulary segmentation with reuse optimizations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="run the preset benchmark sweep")
    b.add_argument(
        "--preset",
        action="append",
        choices=sorted(PRESETS),
        default=None,
        help="preset to include (repeatable; default: all)",
    )
    _common_flags(b)

    s = sub.add_parser("synth", help="write a synthetic PPM corpus")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--frames", type=int, default=10)
    s.add_argument("--size", type=int, default=352)
    s.add_argument("--seed", type=int, default=42)

    c = sub.add_parser("compare", help="score one preset against another frame by frame")
    c.add_argument(
        "--preset",
        action="append",
        choices=sorted(PRESETS),
        default=None,
        help="exactly two presets: ground truth first (default: original blabberseg)",
    )
    _common_flags(c)
    return parser


def _resolve_corpus(args, size: int) -> list[Path]:
    if args.corpus is not None:
        return load_corpus(args.corpus)
    tmp = Path(tempfile.mkdtemp(prefix="reuseg_corpus_"))
    return synth_corpus(args.frames, size, args.seed, tmp)


def _setup(args):
    store = resolve_weights(args.weights, seed=args.seed, image_size=args.size)
    prompts = tuple(p.strip() for p in args.prompts.split(",") if p.strip())
    noise = NoiseSpec.parse(args.noise, seed=args.seed)
    corpus = _resolve_corpus(args, store.config.image_size)
    token_table = None
    if args.tokens is not None:
        token_table = load_token_table(args.tokens, store.config)
    return store, prompts, noise, corpus, token_table


def _emit(text: str, report_path) -> None:
    if report_path is None:
        print(text)
    else:
        Path(report_path).write_text(text + "\n", encoding="utf-8")
        print(f"report written to {report_path}")


def cmd_bench(args) -> int:
    store, prompts, noise, corpus, token_table = _setup(args)
    presets = args.preset or PRESET_ORDER
    report = run_benchmark(
        corpus,
        prompts,
        presets,
        frames=args.frames,
        store=store,
        noise=noise,
        seed=args.seed,
        fusion=args.fusion,
        threshold=args.threshold,
        token_table=token_table,
    )
    _emit(report.to_json(), args.report)
    return 0


def cmd_synth(args) -> int:
    paths = synth_corpus(args.frames, args.size, args.seed, args.out)
    print(f"wrote {len(paths)} frames to {args.out}")
    return 0


def cmd_compare(args) -> int:
    presets = args.preset or [BASELINE_PRESET, "blabberseg"]
    if len(presets) != 2:
        raise ReusegError(f"compare needs exactly two --preset flags, got {len(presets)}")
    truth_name, cand_name = presets
    store, prompts, noise, corpus, token_table = _setup(args)
    images = load_frames(corpus, args.frames, noise)
    rows = []
    for name in (truth_name, cand_name):
        engine = Engine(store, fusion=args.fusion)
        if token_table:
            engine.set_token_table(token_table)
        rows.append([engine.segment_preset(img, prompts, name).fused for img in images])
    truth, cand = rows
    print(f"frame  accuracy%  miou%  recall%   ({cand_name} vs {truth_name})")
    accs, mious, recs = [], [], []
    for i, (t, c) in enumerate(zip(truth, cand)):
        a, m, r = (
            accuracy(c, t, args.threshold),
            miou(c, t, args.threshold),
            recall(c, t, args.threshold),
        )
        accs.append(a)
        mious.append(m)
        recs.append(r)
        print(f"{i:5d}  {a:9.3f}  {m:5.1f}  {r:7.1f}")
    n = len(accs)
    print(f"mean   {sum(accs)/n:9.3f}  {sum(mious)/n:5.1f}  {sum(recs)/n:7.1f}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"bench": cmd_bench, "synth": cmd_synth, "compare": cmd_compare}
    try:
        return handlers[args.command](args)
    except ReusegError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
