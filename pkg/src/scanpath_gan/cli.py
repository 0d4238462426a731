"""Command-line entry point: ``scanpath-gan <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .assignment import evaluate_dataset
from .baselines import (
    BaselineConfig,
    baseline_interchange,
    baseline_random,
    baseline_random_gt_count,
    baseline_saliency_sampling,
)
from .core import geometry
from .errors import ConfigError, DataError
from .fileio import group_by_image, load_scanpaths, save_scanpaths
from .stats import divergence, format_histogram, spatial_histogram
from .synthetic import SyntheticSpec, generate_synthetic, load_image_dir, load_saliency_dir, save_dataset

BASELINES = ("random", "gt-count", "saliency", "interchange")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _read_config(path, cls):
    from .training import parse_config_text

    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        return parse_config_text(text, cls)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_train(args):
    from .training import TrainConfig, train

    cfg = _read_config(args.config, TrainConfig)
    # relative paths in a config file are relative to that file
    base = Path(args.config).parent
    for key in ("data", "out", "resume"):
        value = getattr(cfg, key)
        if value and not Path(value).is_absolute():
            setattr(cfg, key, str(base / value))
    if args.out:
        cfg.out = args.out
    if not cfg.data:
        raise ConfigError(f"{args.config}: 'data' is not set")
    trainer = train(cfg)
    last = [r for r in trainer.log if r["phase"] == "val"]
    print(f"trained {trainer.iteration} iterations; final checkpoint in {cfg.out or '(not saved)'}")
    if last:
        print(f"last validation: content {last[-1]['content_loss']:.6f}, jarodzka {last[-1]['val_jarodzka']:.6f}")


def cmd_generate(args):
    from .training import generate_scanpaths, load_model

    model, mean_pixel, dims = load_model(args.ckpt)
    images = load_image_dir(args.images)
    if not images:
        raise DataError(f"no .pgm images in {args.images}")
    preds = generate_scanpaths(model, mean_pixel, dims, images, args.k, args.seed, args.max_len)
    save_scanpaths(args.out, [sp for i in sorted(preds) for sp in preds[i]])
    print(f"wrote {args.k} scanpaths for each of {len(preds)} images to {args.out}")


def _report_paths(out):
    out = Path(out)
    if out.suffix.lower() == ".csv":
        return out.with_suffix(".json"), out
    return out, out.with_suffix(".csv")


def cmd_evaluate(args):
    g = geometry(args.geometry)
    gt = group_by_image(load_scanpaths(args.gt))
    pred = group_by_image(load_scanpaths(args.pred))
    report = evaluate_dataset(pred, gt, args.k, g)
    text_path, csv_path = _report_paths(args.out)
    _write(text_path, report.to_text())
    _write(csv_path, report.to_csv())
    print(f"overall mean matched cost {report.overall_mean!r} over {len(report.per_image)} images")


def cmd_baseline(args):
    rng = np.random.default_rng(args.seed)
    cfg = BaselineConfig(args.len_min, args.len_max, args.dt_min, args.dt_max, args.seed)
    gt = group_by_image(load_scanpaths(args.gt))
    if args.kind == "interchange":
        out = baseline_interchange(gt, rng)
    elif args.kind == "saliency":
        maps = load_saliency_dir(args.saliency)
        missing = sorted(set(gt) - set(maps))
        if missing:
            raise DataError(f"no saliency map for images {missing[:5]}")
        out = {}
        for i in sorted(gt):
            # fixation counts follow the ground truth paths in turn
            counts = [len(gt[i][k % len(gt[i])]) for k in range(args.k)]
            out[i] = [baseline_saliency_sampling(maps[i], n, cfg, rng, i) for n in counts]
    elif args.kind == "gt-count":
        out = {i: [baseline_random_gt_count(gt[i][k % len(gt[i])], cfg, rng) for k in range(args.k)] for i in sorted(gt)}
    else:
        out = {i: [baseline_random(i, cfg, rng) for _ in range(args.k)] for i in sorted(gt)}
    paths = [sp for i in sorted(out) for sp in out[i]]
    save_scanpaths(args.out, paths)
    print(f"wrote {len(paths)} {args.kind} baseline scanpaths to {args.out}")


def cmd_stats(args):
    pred = load_scanpaths(args.pred)
    gt = load_scanpaths(args.gt)
    hp, hg = spatial_histogram(pred, args.bins), spatial_histogram(gt, args.bins)
    kl = divergence(hp, hg)
    B = args.bins
    text = f"# generated {B}x{B}\n{format_histogram(hp)}# ground_truth {B}x{B}\n{format_histogram(hg)}kl {kl!r}\n"
    _write(args.out, text)
    print(f"KL(generated || ground truth) = {kl:.6f}")


def cmd_synth(args):
    spec = _read_config(args.spec, SyntheticSpec) if args.spec else SyntheticSpec()
    if args.seed is not None:
        spec = SyntheticSpec(**{**spec.__dict__, "seed": args.seed})
    ds = generate_synthetic(spec)
    save_dataset(ds, args.out, spec)
    print(f"wrote {len(ds.image_ids)} synthetic images to {args.out}")


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def build_parser():
    p = _Parser(prog="scanpath-gan", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("train", help="train a model from a key = value config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="override the config's output directory")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("generate", help="sample scanpaths for a directory of PGM images")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--images", required=True)
    s.add_argument("--k", type=_positive, default=40)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-len", type=_positive)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("evaluate", help="1-to-1 matched Jarodzka evaluation")
    s.add_argument("--pred", required=True)
    s.add_argument("--gt", required=True)
    s.add_argument("--geometry", choices=("planar", "spherical"), default="planar")
    s.add_argument("--k", type=_positive, default=40, help="predictions used per image")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("baseline", help="write reference baseline scanpaths")
    s.add_argument("--kind", choices=BASELINES, required=True)
    s.add_argument("--gt", required=True)
    s.add_argument("--saliency")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--k", type=_positive, default=40, help="scanpaths per image (ignored for interchange)")
    s.add_argument("--len-min", type=int, default=1)
    s.add_argument("--len-max", type=int, default=35)
    s.add_argument("--dt-min", type=float, default=0.1)
    s.add_argument("--dt-max", type=float, default=0.5)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_baseline)

    s = sub.add_parser("stats", help="spatial fixation histograms and their KL divergence")
    s.add_argument("--pred", required=True)
    s.add_argument("--gt", required=True)
    s.add_argument("--bins", type=_positive, default=16)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("synth", help="write a seeded synthetic dataset")
    s.add_argument("--spec")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "kind", None) == "saliency" and not args.saliency:
            raise UsageError("scanpath-gan baseline: --saliency is required for --kind saliency")
        try:
            BaselineConfig(args.len_min, args.len_max, args.dt_min, args.dt_max) if args.command == "baseline" else None
        except ValueError as exc:
            raise UsageError(f"scanpath-gan baseline: --len-min/--len-max/--dt-min/--dt-max: {exc}") from None
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
