"""Command line interface: detect, correct, smooth, vote, eval, synth, plot.

File-level front end over the library. Batch subcommands accept
directories and fan out over a bounded worker pool; results are reduced
in input order so repeated runs are bit-identical. Exit codes: 0 success,
1 an algorithmically degenerate outcome was reported (e.g. no boundaries
found), 2 usage or IO errors.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import dataio
from .core import AUTO, CorrectionConfig, DetectConfig
from .correction import correct_all
from .detect import detect, segment_labels
from .metrics import (EvalOptions, EvalResult, evaluate_batch,
                      greedy_label_match, hungarian_label_match, mean_result)
from .postprocess import PredictionSet, SmoothConfig, auto_s_win, smooth, vote
from .render import render_svg, render_text
from .synth import SynthSpec, generate, perturb_boundaries

log = logging.getLogger("actseg")

DATA_ROOT_ENV = "ACTSEG_DATA_ROOT"


def _int_or_auto(text: str):
    if text == AUTO:
        return AUTO
    return int(text)


def _default_jobs() -> int:
    return min(8, os.cpu_count() or 1)


def _resolve(path: Path) -> Path:
    """Fall back to $ACTSEG_DATA_ROOT for inputs given as relative names."""
    path = Path(path)
    if path.exists():
        return path
    root = os.environ.get(DATA_ROOT_ENV)
    if root and not path.is_absolute() and (Path(root) / path).exists():
        return Path(root) / path
    return path


def _collect(path: Path, suffix: str) -> list[tuple[str, Path]]:
    path = _resolve(path)
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix == suffix)
        if not files:
            raise FileNotFoundError(f"no *{suffix} files in {path}")
        return [(p.stem, p) for p in files]
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    return [(path.stem, path)]


def _target(base: Path, batch: bool, stem: str, suffix: str) -> Path:
    base = Path(base)
    if batch:
        base.mkdir(parents=True, exist_ok=True)
        return base / f"{stem}{suffix}"
    base.parent.mkdir(parents=True, exist_ok=True)
    return base


def _pool_map(jobs: int, fn, items: list):
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _pair_inputs(features: Path, labels: Path,
                 label_suffix: str = ".txt") -> tuple[list[tuple[str, Path, Path]], bool]:
    features = _resolve(features)
    labels = _resolve(labels)
    if features.is_dir() != labels.is_dir():
        raise ValueError("features and predictions must both be files or both be directories")
    feat_items = _collect(features, ".npy")
    if not features.is_dir():
        if not labels.exists():
            raise FileNotFoundError(f"no such file: {labels}")
        return [(feat_items[0][0], feat_items[0][1], labels)], False
    paired = []
    for stem, fpath in feat_items:
        lpath = labels / f"{stem}{label_suffix}"
        if not lpath.exists():
            raise FileNotFoundError(f"no prediction for {stem}: {lpath}")
        paired.append((stem, fpath, lpath))
    return paired, True


def _load_mapping(args) -> dataio.ClassMapping | None:
    return dataio.load_mapping(_resolve(args.mapping)) if args.mapping else None


# ---------------------------------------------------------------- detect

def _cmd_detect(args) -> int:
    inputs = _collect(args.features, ".npy")
    batch = _resolve(args.features).is_dir()
    cfg = DetectConfig(num_classes=args.num_classes, b_intrv=args.b_intrv,
                       dim_reduce=args.dim_reduce)

    def run(item):
        vid, path = item
        feat = dataio.load_features(path, args.orientation)
        bounds, props = detect(feat, cfg, seed=args.seed)
        labels = (segment_labels(feat, bounds, cfg.num_classes, args.seed)
                  if args.out_labels else None)
        return vid, bounds, props, labels

    degenerate = []
    for vid, bounds, props, labels in _pool_map(args.jobs, run, inputs):
        log.info("%s: b_intrv=%d proposals cosine=%d dtw=%d cluster=%d -> %d boundaries",
                 vid, props.resolved_b_intrv, len(props.cosine_bounds),
                 len(props.dtw_bounds), len(props.cluster_bounds), len(bounds))
        dataio.save_boundaries(_target(args.out_bounds, batch, vid, ".txt"), bounds)
        if labels is not None:
            dataio.save_labels(_target(args.out_labels, batch, vid, ".txt"), labels)
        if not bounds:
            degenerate.append(vid)
    if degenerate:
        log.warning("no boundaries detected for: %s", ", ".join(degenerate))
        return 1
    return 0


# ---------------------------------------------------------------- correct

def _cmd_correct(args) -> int:
    paired, batch = _pair_inputs(args.features, args.predictions)
    mapping = _load_mapping(args)
    cfg = CorrectionConfig(b_win=args.b_win, b_seg=args.b_seg)

    def run(item):
        vid, fpath, ppath = item
        feat = dataio.load_features(fpath, args.orientation)
        labels = dataio.load_labels(ppath, mapping)
        corrected, report = correct_all(feat, labels, cfg, seed=args.seed)
        return vid, corrected, report

    for vid, corrected, report in _pool_map(args.jobs, run, paired):
        log.info("%s: moved %d of %d boundaries", vid, report.moved(), len(report.records))
        dataio.save_labels(_target(args.out, batch, vid, ".txt"), corrected, mapping)
        if args.report:
            lines = "".join(f"{r.original} {r.corrected} {r.iterations}\n"
                            for r in report.records)
            _target(args.report, batch, vid, ".txt").write_text(lines)
    return 0


# ---------------------------------------------------------------- smooth

def _cmd_smooth(args) -> int:
    inputs = _collect(args.predictions, ".txt")
    batch = _resolve(args.predictions).is_dir()
    mapping = _load_mapping(args)
    cfg = SmoothConfig(s_win=args.s_win, stride=args.stride)

    def run(item):
        vid, path = item
        labels = dataio.load_labels(path, mapping)
        if cfg.s_win == AUTO:
            log.info("%s: resolved s_win=%d", vid, auto_s_win(labels))
        return vid, smooth(labels, cfg)

    for vid, smoothed in _pool_map(args.jobs, run, inputs):
        dataio.save_labels(_target(args.out, batch, vid, ".txt"), smoothed, mapping)
    return 0


# ---------------------------------------------------------------- vote

def _cmd_vote(args) -> int:
    mapping = _load_mapping(args)
    sources = tuple(dataio.load_labels(_resolve(p), mapping) for p in args.predictions)
    fused = vote(PredictionSet(sources, trusted_index=args.trusted))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    dataio.save_labels(out, fused, mapping)
    return 0


# ---------------------------------------------------------------- eval

def _read_split(path: Path) -> list[str]:
    ids = [line.strip() for line in Path(path).read_text().splitlines() if line.strip()]
    if not ids:
        raise ValueError(f"empty split bundle: {path}")
    return [Path(i).stem for i in ids]  # tolerate ids written with extensions


def _cmd_eval(args) -> int:
    pred_dir = _resolve(args.pred_dir)
    gt_dir = _resolve(args.gt_dir)
    if not pred_dir.is_dir() or not gt_dir.is_dir():
        raise ValueError("eval expects prediction and ground-truth directories")
    mapping = _load_mapping(args)
    gt_items = dict(_collect(gt_dir, ".txt"))
    ignore = frozenset(mapping.id_of(n) if mapping else int(n) for n in args.ignore or [])
    opts = EvalOptions(boundary_tolerance=args.boundary_tolerance, ignore=ignore)

    def load_pair(vid: str):
        if vid not in gt_items:
            raise ValueError(f"video {vid!r} has no ground truth in {gt_dir}")
        gt = dataio.load_labels(gt_items[vid], mapping)
        pred_path = pred_dir / f"{vid}.txt"
        if not pred_path.exists():
            raise FileNotFoundError(f"no prediction for {vid}: {pred_path}")
        pred = dataio.load_labels(pred_path,
                                  mapping if args.pred_format == "names" else None)
        if args.label_match == "hungarian":
            pred = hungarian_label_match(pred, gt)
        elif args.label_match == "greedy":
            pred = greedy_label_match(pred, gt)
        return pred, gt

    rows: list[tuple[str, EvalResult]] = []
    if args.splits:
        for bundle in args.splits:
            ids = _read_split(_resolve(bundle))
            pairs = _pool_map(args.jobs, load_pair, ids)
            rows.append((Path(bundle).stem, evaluate_batch(pairs, opts)))
        overall = mean_result([r for _, r in rows])
    else:
        ids = sorted(gt_items)
        pairs = _pool_map(args.jobs, load_pair, ids)
        overall = evaluate_batch(pairs, opts)
    rows.append(("avg" if args.splits else "all", overall))

    print(_format_table(rows))
    for key, value in overall.field_values().items():
        print(f"{key}={value!r}")
    if args.report:
        report = Path(args.report)
        report.parent.mkdir(parents=True, exist_ok=True)
        dataio.save_report(report, overall)
    return 0


def _format_table(rows: list[tuple[str, EvalResult]]) -> str:
    header = f"{'split':<12} {'acc':>7} {'edit':>7} {'f1@10':>7} {'f1@25':>7} {'f1@50':>7} {'bf1':>7}"
    lines = [header, "-" * len(header)]
    for name, r in rows:
        f1 = list(r.f1.values())
        lines.append(f"{name:<12} {r.acc:>7.2f} {r.edit:>7.2f} "
                     f"{f1[0]:>7.2f} {f1[1]:>7.2f} {f1[2]:>7.2f} {r.boundary_f1:>7.2f}")
    return "\n".join(lines)


# ---------------------------------------------------------------- synth

def _cmd_synth(args) -> int:
    out = Path(args.out_dir)
    features_dir = out / "features"
    gt_dir = out / "groundTruth"
    bounds_dir = out / "bounds"
    splits_dir = out / "splits"
    for d in (features_dir, gt_dir, bounds_dir, splits_dir):
        d.mkdir(parents=True, exist_ok=True)
    mapping = dataio.ClassMapping(tuple(f"action_{i:02d}" for i in range(args.segments)))
    dataio.save_mapping(out / "mapping.txt", mapping)

    ids = []
    pred_dir = out / "predictions"
    if args.perturb > 0:
        pred_dir.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        vid = f"synth_{i:03d}"
        spec = SynthSpec(dim=args.dim, num_segments=args.segments,
                         length_range=(args.min_len, args.max_len),
                         mean_separation=args.separation,
                         noise_sigma=args.sigma, seed=args.seed + i)
        feat, labels, bounds = generate(spec)
        dataio.save_features(features_dir / f"{vid}.npy", feat)
        dataio.save_labels(gt_dir / f"{vid}.txt", labels, mapping)
        dataio.save_boundaries(bounds_dir / f"{vid}.txt", bounds)
        if args.perturb > 0:
            noisy = perturb_boundaries(labels, args.perturb, seed=args.seed + 1000 + i)
            dataio.save_labels(pred_dir / f"{vid}.txt", noisy, mapping)
        ids.append(vid)
    (splits_dir / "all.txt").write_text("".join(f"{v}\n" for v in ids))
    dataio.save_manifest(out / "manifest.txt", dataio.DatasetLayout(
        features_dir=features_dir, gt_dir=gt_dir, mapping_path=out / "mapping.txt",
        splits=(splits_dir / "all.txt",),
        predictions_dir=pred_dir if args.perturb > 0 else None))
    log.info("wrote %d synthetic videos under %s", len(ids), out)
    return 0


# ---------------------------------------------------------------- plot

def _cmd_plot(args) -> int:
    mapping = _load_mapping(args)
    rows = [(Path(p).stem, dataio.load_labels(_resolve(p), mapping)) for p in args.labels]
    if args.text:
        sys.stdout.write(render_text(rows, width=args.width or 72))
        return 0
    if not args.out:
        raise ValueError("plot needs --out FILE.svg (or --text)")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(render_svg(rows, width=args.width or 1000))
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="actseg",
        description="Similarity-driven temporal action segmentation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, jobs=True):
        p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
        if jobs:
            p.add_argument("--jobs", type=int, default=_default_jobs(),
                           help="worker pool size for directory inputs")

    p = sub.add_parser("detect", help="unsupervised boundary detection from features")
    p.add_argument("features", type=Path, help="feature file (.npy) or directory")
    p.add_argument("--num-classes", type=int, required=True,
                   help="cluster count for the global clustering pass")
    p.add_argument("--b-intrv", type=_int_or_auto, default=AUTO,
                   help="minimum boundary gap in frames, or 'auto'")
    p.add_argument("--dim-reduce", type=int, default=None,
                   help="project features to this many dims before scoring")
    p.add_argument("--orientation", choices=[dataio.AUTO_ORIENT, dataio.D_BY_T, dataio.T_BY_D],
                   default=dataio.AUTO_ORIENT)
    p.add_argument("--out-bounds", type=Path, required=True,
                   help="boundary list output (file, or directory for batch)")
    p.add_argument("--out-labels", type=Path, default=None,
                   help="optional cluster-id label sequence output")
    add_common(p)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("correct", help="correct boundaries of existing predictions")
    p.add_argument("features", type=Path)
    p.add_argument("predictions", type=Path)
    p.add_argument("--b-win", type=_int_or_auto, default=16,
                   help="boundary window in frames, or 'auto' (default 16)")
    p.add_argument("--b-seg", type=_int_or_auto, default=4,
                   help="sub-segment size in frames, or 'auto' (default 4)")
    p.add_argument("--mapping", type=Path, default=None)
    p.add_argument("--orientation", choices=[dataio.AUTO_ORIENT, dataio.D_BY_T, dataio.T_BY_D],
                   default=dataio.AUTO_ORIENT)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--report", type=Path, default=None,
                   help="per-boundary 'original corrected iterations' lines")
    add_common(p)
    p.set_defaults(func=_cmd_correct)

    p = sub.add_parser("smooth", help="two-window segment smoothing")
    p.add_argument("predictions", type=Path)
    p.add_argument("--s-win", type=_int_or_auto, required=True,
                   help="smoothing window in frames, or 'auto'")
    p.add_argument("--stride", type=int, default=None,
                   help="window advance per step (default: s_win)")
    p.add_argument("--mapping", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True)
    add_common(p)
    p.set_defaults(func=_cmd_smooth)

    p = sub.add_parser("vote", help="frame-wise majority vote over predictions")
    p.add_argument("predictions", nargs="+", type=Path,
                   help="two or more prediction files")
    p.add_argument("--trusted", type=int, default=-1,
                   help="0-based index of the tie-breaking source (default: last)")
    p.add_argument("--mapping", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True)
    add_common(p, jobs=False)
    p.set_defaults(func=_cmd_vote)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("pred_dir", type=Path)
    p.add_argument("gt_dir", type=Path)
    p.add_argument("--mapping", type=Path, default=None)
    p.add_argument("--pred-format", choices=["names", "ids"], default="names",
                   help="prediction files hold class names or bare integer ids")
    p.add_argument("--label-match", choices=["none", "hungarian", "greedy"],
                   default="none",
                   help="relabel arbitrary prediction ids before scoring")
    p.add_argument("--splits", nargs="+", type=Path, default=None,
                   help="split bundle files (one video id per line)")
    p.add_argument("--boundary-tolerance", type=int, default=5)
    p.add_argument("--ignore", nargs="+", default=None,
                   help="class names (ids without a mapping) excluded from scoring")
    p.add_argument("--report", type=Path, default=None,
                   help="write the aggregate key=value report here")
    add_common(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--segments", type=int, default=5)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--min-len", type=int, default=60)
    p.add_argument("--max-len", type=int, default=120)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--separation", type=float, default=6.0,
                   help="minimum distance between segment means")
    p.add_argument("--perturb", type=int, default=0,
                   help="also write predictions with boundaries shifted up to this many frames")
    add_common(p, jobs=False)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("plot", help="timeline figure with one row per label file")
    p.add_argument("labels", nargs="+", type=Path)
    p.add_argument("--mapping", type=Path, default=None)
    p.add_argument("--out", type=Path, default=None, help="SVG output path")
    p.add_argument("--text", action="store_true", help="print block characters instead")
    p.add_argument("--width", type=int, default=None)
    p.set_defaults(func=_cmd_plot)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
