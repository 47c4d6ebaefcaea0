"""Command-line entry point: synth | train | infer | eval | report.

Every subcommand writes only under its --out directory and leaves a fully
resolved run_config there. Errors exit with distinct codes:

  0 success, 1 unexpected, 2 configuration, 3 missing/invalid input,
  4 checkpoint, 5 shape/data contract, 6 training divergence.
"""

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import SEED_ENV_VAR, RunConfig
from .data.augment import flip, mirror, rotate
from .data.manifest import (
    DatasetManifest,
    ManifestEntry,
    load_label,
    save_image,
    save_label,
    split_dataset,
    write_manifest,
)
from .data.dataset import load_split
from .data.scene import synth_scene
from .errors import (
    CheckpointError,
    ConfigurationError,
    DegenerateAugmentationError,
    InputError,
    McganError,
    ShapeError,
    TrainingDiverged,
)
from .metrics import evaluate_masks
from .seeding import derive_seed
from .train import Trainer

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_CHECKPOINT = 4
EXIT_SHAPE = 5
EXIT_DIVERGED = 6

_EXIT_CODES = [
    (ConfigurationError, EXIT_CONFIG, "config"),
    (CheckpointError, EXIT_CHECKPOINT, "checkpoint"),
    (InputError, EXIT_INPUT, "input"),
    (TrainingDiverged, EXIT_DIVERGED, "diverged"),
    (DegenerateAugmentationError, EXIT_SHAPE, "augmentation"),
    (ShapeError, EXIT_SHAPE, "shape"),
]


def _parse_size(text: str) -> int:
    """'HxW' with W = 2H; returns H."""
    try:
        h_str, w_str = text.lower().split("x")
        height, width = int(h_str), int(w_str)
    except ValueError as exc:
        raise ConfigurationError(f"--size must be HxW, got {text!r}") from exc
    if width != 2 * height:
        raise ConfigurationError(f"--size must satisfy W = 2*H, got {text!r}")
    return height


def cmd_synth(args) -> int:
    overrides = {
        "data.count": args.count,
        "data.height": _parse_size(args.size) if args.size else None,
        "data.tracks": args.tracks,
        "data.occlusion": args.occlusion,
        "data.light": args.light,
        "data.noise": args.noise,
        "data.augment": True if args.augment else None,
        "data.split_ratio": args.split_ratio,
        "train.seed": args.seed,
    }
    cfg = RunConfig.resolve(args.config, overrides)
    out = Path(args.out)
    (out / "labels").mkdir(parents=True, exist_ok=True)
    (out / "images").mkdir(parents=True, exist_ok=True)
    seed = int(cfg["train.seed"])
    spec = cfg.scene_spec()
    height = int(cfg["data.height"])
    manifest = DatasetManifest()
    for i in range(int(cfg["data.count"])):
        pair = synth_scene(derive_seed(seed, "scene", i), spec, height)
        variants = [(f"{i:06d}", pair)]
        if cfg["data.augment"]:
            angle = -10.0 + 20.0 * (derive_seed(seed, "angle", i) % 1000) / 999.0
            variants += [
                (f"{i:06d}_m", mirror(pair)),
                (f"{i:06d}_f", flip(pair)),
                (f"{i:06d}_r", rotate(pair, round(angle, 2))),
            ]
        for name, var in variants:
            save_label(out / "labels" / f"{name}.png", var.label)
            save_image(out / "images" / f"{name}.png", var.image)
            manifest.entries.append(
                ManifestEntry(f"labels/{name}.png", f"images/{name}.png")
            )
    train, val = split_dataset(manifest, float(cfg["data.split_ratio"]), seed)
    write_manifest(out / "manifest.json", manifest)
    cfg.write(out)
    print(f"wrote {len(manifest.entries)} pairs ({len(train)} train / {len(val)} val) to {out}")
    return EXIT_OK


def _load_pairs(data_dir, split: str):
    manifest_path = Path(data_dir) / "manifest.json"
    if not manifest_path.exists():
        raise InputError(f"no manifest.json under {data_dir}")
    pairs = load_split(manifest_path, split)
    if not pairs and split:
        pairs = load_split(manifest_path, "")  # untagged manifests train on everything
    if not pairs:
        raise InputError(f"no '{split}' pairs in {manifest_path}")
    return pairs


def cmd_train(args) -> int:
    overrides = {
        "train.preset": args.preset,
        "train.seed": args.seed,
        "train.max_steps": args.steps,
        "train.lr": args.lr,
        "train.batch_size": args.batch_size,
    }
    cfg = RunConfig.resolve(args.config, overrides)
    data_dir = args.data or cfg["data.dir"]
    if not data_dir:
        raise ConfigurationError("train needs --data DIR (or data.dir in the config)")
    pairs = _load_pairs(data_dir, "train")
    out = Path(args.out)
    if args.resume:
        trainer = Trainer.restore(args.resume, pairs, out_dir=out)
    else:
        height = pairs[0].label.shape[0]
        cfg.values["data.height"] = int(height)
        trainer = Trainer(
            cfg.train_config(),
            cfg.generator_config(),
            cfg.discriminator_config(),
            pairs,
            out_dir=out,
            run_config=cfg.values,
        )
    cfg.write(out)
    last = None

    def progress(breakdown):
        nonlocal last
        last = breakdown
        if breakdown.step % 25 == 0:
            print(
                f"step {breakdown.step}: d={breakdown.d_loss:.4f} "
                f"q={breakdown.q:.4f} total_g={breakdown.total_g:.4f}"
            )

    try:
        trainer.run(progress=progress)
    finally:
        trainer.close()
    print(f"finished at step {trainer.step}; checkpoint in {out}")
    return EXIT_OK


def cmd_infer(args) -> int:
    from .infer import run_inference

    names = run_inference(args.ckpt, args.labels, args.out, args.mask_threshold)
    print(f"generated {len(names)} images in {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    pred_dir, gt_dir = Path(args.pred), Path(args.gt)
    for d in (pred_dir, gt_dir):
        if not d.is_dir():
            raise InputError(f"directory {d} does not exist")
    pred_names = {p.name for p in pred_dir.glob("*.png")}
    gt_names = {p.name for p in gt_dir.glob("*.png")}
    if not pred_names or pred_names != gt_names:
        raise InputError(
            f"pred/gt sets differ: {len(pred_names)} pred vs {len(gt_names)} gt PNGs"
        )
    mask_pairs = [
        (name, load_label(pred_dir / name), load_label(gt_dir / name))
        for name in sorted(pred_names)
    ]
    report = evaluate_masks(
        mask_pairs,
        threshold=args.threshold,
        match_fraction=args.match_fraction,
        row_stride=args.row_stride,
    )
    doc = report.to_dict()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")

    from .report import segmentation_table, track_table

    name = out.stem
    print(track_table({name: doc}))
    print()
    print(segmentation_table({name: doc}))
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import build_report

    text = build_report(args.reports, args.out)
    print(text, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcgan",
        description="Synthesize track scenes, train the adversarial detector, "
        "and evaluate track-line metrics.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic paired dataset")
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help=f"falls back to ${SEED_ENV_VAR}")
    p.add_argument("--size", default=None, help="HxW with W = 2*H, e.g. 64x128")
    p.add_argument("--tracks", type=int, default=None)
    p.add_argument("--occlusion", type=float, default=None)
    p.add_argument("--light", type=float, default=None)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--augment", action="store_true")
    p.add_argument("--split-ratio", type=float, default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the generator/discriminator pair")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--data", default=None, help="dataset directory from `synth`")
    p.add_argument("--resume", default=None, help="checkpoint to resume from")
    p.add_argument("--preset", choices=["paper", "safe"], default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--steps", type=int, default=None, help="cap on total steps")
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="generate images + masks for label maps")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mask-threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="score predicted masks against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--threshold", type=float, default=3.0)
    p.add_argument("--match-fraction", type=float, default=0.75)
    p.add_argument("--row-stride", type=int, default=1)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="tabulate one or more eval reports")
    p.add_argument("reports", nargs="+", help="report JSON files")
    p.add_argument("--out", default=None, help="directory for table, CSV and figures")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except McganError as exc:
        for klass, code, kind in _EXIT_CODES:
            if isinstance(exc, klass):
                print(f"error: {kind}: {exc}", file=sys.stderr)
                return code
        print(f"error: internal: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED
    except FileNotFoundError as exc:
        print(f"error: input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
