"""Command-line surface of the trainer component."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path


def _cmd_build(args) -> int:
    from .dataset import build_dataset

    manifest = build_dataset(
        args.cubes, args.sensor, args.splits, args.out,
        toolkit_cmd=tuple(args.toolkit.split()),
    )
    for split, stems in manifest.items():
        print(f"{split}: {len(stems)} cubes")
    return 0


def _cmd_train(args) -> int:
    from .train import Config, train

    config = Config.load(args.config)
    checkpoint = train(config)
    print(f"checkpoint: {checkpoint}")
    return 0


def _cmd_export(args) -> int:
    from .export import export_predictions

    written = export_predictions(args.checkpoint, args.inputs, args.out)
    print(f"wrote {len(written)} refined cubes to {args.out}")
    return 0


def _cmd_lpips(args) -> int:
    from .evaluate import format_report, lpips_eval

    report = lpips_eval(args.pred, args.ref)
    text = format_report(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mosaictrain",
        description="supervised super-resolved demosaicking on exchange files",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-data", help="synthesize train/val/test triples")
    p.add_argument("--cubes", required=True, help="directory of <subject>__*.cube files")
    p.add_argument("--sensor", required=True)
    p.add_argument("--splits", required=True, help="file of '<subject> <split>' lines")
    p.add_argument("--out", required=True)
    p.add_argument("--toolkit", default="hsmosaic", help="toolkit CLI command")
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("train", help="train from a key=value config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("export", help="write refined intermediate cubes")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--inputs", required=True, help="directory of mosaics or bilinear cubes")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("lpips", help="perceptual scores of paired RGB renderings")
    p.add_argument("--pred", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_lpips)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface everything as exit 1 with the message
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
