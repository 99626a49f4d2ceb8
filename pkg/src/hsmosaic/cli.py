"""Command-line surface for the simulation, reconstruction and evaluation
pipeline.

Exit codes: 0 success, 2 usage or input error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import fileio
from .color import (
    cube_to_srgb,
    oxygenation_map,
    rgb_to_cube,
    save_oxy_png,
    save_rgb_png,
)
from .demosaic import demosaic_pipeline
from .errors import DegenerateError, HsiError, MetricError
from .metrics import MetricRecord, aggregate, l1_error, psnr, report_csv, report_text, ssim
from .sensor import (
    build_synthetic_sensor,
    default_fit_grid,
    fit_calibration,
    simulate_ideal,
    simulate_spectral,
    subsample,
)


def _cmd_sensor(args: argparse.Namespace) -> int:
    lo, _, hi = args.range.partition(",")
    sensor = build_synthetic_sensor(
        args.n, (float(lo), float(hi)), fwhm=args.fwhm, leakage=args.leakage
    )
    fileio.write_sensor(sensor, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    cube = fileio.read_cube(args.cube)
    sensor = fileio.read_sensor(args.sensor)
    intermediate = simulate_spectral(cube, sensor)
    ideal = simulate_ideal(cube, sensor)
    mosaic = subsample(intermediate, sensor.pattern)
    calibration = fit_calibration(sensor, default_fit_grid(sensor))
    prefix = Path(args.out)
    fileio.write_mosaic(mosaic, prefix.with_suffix(".mosaic"))
    fileio.write_cube(intermediate, prefix.with_suffix(".intermediate.cube"))
    fileio.write_cube(ideal, prefix.with_suffix(".ideal.cube"))
    fileio.write_calibration(calibration, prefix.with_suffix(".calib"))
    print(
        f"wrote {prefix.with_suffix('.mosaic')}, .intermediate.cube, "
        f".ideal.cube, .calib (fit residual rms {calibration.residual_rms:.3e})"
    )
    return 0


def _cmd_demosaic(args: argparse.Namespace) -> int:
    mosaic = fileio.read_mosaic(args.mosaic)
    sensor = fileio.read_sensor(args.sensor)
    calibration = fileio.read_calibration(args.calib)
    refined = fileio.read_cube(args.refined) if args.refined else None
    cube = demosaic_pipeline(mosaic, sensor, calibration, refined=refined)
    fileio.write_cube(cube, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_rgb(args: argparse.Namespace) -> int:
    cube = fileio.read_cube(args.cube)
    rgb = cube_to_srgb(cube)
    save_rgb_png(rgb, args.out)
    if args.raw:
        fileio.write_cube(rgb_to_cube(rgb), args.raw)
    print(f"wrote {args.out}")
    return 0


def _cmd_oxy(args: argparse.Namespace) -> int:
    cube = fileio.read_cube(args.cube)
    oxy = oxygenation_map(cube)
    save_oxy_png(oxy, args.out)
    valid_share = float(oxy.valid.mean())
    print(f"wrote {args.out} ({valid_share:.1%} of pixels valid)")
    return 0


def _metric_row(name: str, pred, ref) -> MetricRecord:
    try:
        psnr_db = psnr(pred, ref)
    except MetricError:
        psnr_db = math.inf
    return MetricRecord(
        name=name, l1=l1_error(pred, ref), psnr_db=psnr_db, ssim=ssim(pred, ref)
    )


def _cmd_eval(args: argparse.Namespace) -> int:
    pred = fileio.read_cube(args.pred)
    ref = fileio.read_cube(args.ref)
    name = Path(args.pred).stem
    if args.rgb:
        record = _metric_row(name, cube_to_srgb(pred).data, cube_to_srgb(ref).data)
    else:
        record = _metric_row(name, pred.data, ref.data)
    report = aggregate([record])
    prefix = Path(args.out)
    prefix.with_suffix(".csv").write_text(report_csv(report), encoding="utf-8")
    prefix.with_suffix(".txt").write_text(report_text(report), encoding="utf-8")
    print(report_text(report), end="")
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    sensor = fileio.read_sensor(args.sensor)
    report = bench_mod.run_bench(
        sensor, width=args.width, height=args.height, iterations=args.iters
    )
    print(bench_mod.format_report(report), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hsmosaic",
        description="snapshot mosaic hyperspectral simulation and reconstruction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sensor", help="write a synthetic sensor model file")
    p.add_argument("--n", type=int, default=4, help="mosaic tile edge length")
    p.add_argument("--range", default="470,620", help="lambda_min,lambda_max in nm")
    p.add_argument("--fwhm", type=float, default=15.0)
    p.add_argument("--leakage", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sensor)

    p = sub.add_parser("simulate", help="synthesize mosaic/intermediate/ideal/calib")
    p.add_argument("--cube", required=True, help="high-resolution input cube")
    p.add_argument("--sensor", required=True, help="sensor model file")
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("demosaic", help="reconstruct a corrected cube from a mosaic")
    p.add_argument("--mosaic", required=True)
    p.add_argument("--sensor", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--refined", help="externally refined intermediate cube")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_demosaic)

    p = sub.add_parser("rgb", help="render a cube as an sRGB PNG")
    p.add_argument("--cube", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--raw", help="also write raw float RGB in the exchange format")
    p.set_defaults(func=_cmd_rgb)

    p = sub.add_parser("oxy", help="render an oxygenation saturation PNG")
    p.add_argument("--cube", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_oxy)

    p = sub.add_parser("eval", help="quality metrics of a prediction vs reference")
    p.add_argument("--pred", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--rgb", action="store_true", help="compare sRGB renderings")
    p.add_argument("--out", required=True, help="report prefix (.csv/.txt)")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("bench", help="latency of the classical path per frame")
    p.add_argument("--width", type=int, default=2048)
    p.add_argument("--height", type=int, default=1088)
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--sensor", required=True)
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DegenerateError, MetricError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (HsiError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
