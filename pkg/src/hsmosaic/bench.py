"""Per-frame latency benchmark of the classical reconstruction path."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import SensorModel, Wavelengths
from .sensor import default_fit_grid, fit_calibration

STAGES = ("white_balance", "demosaic", "correction", "srgb")


@dataclass(frozen=True)
class StageStats:
    name: str
    min_ms: float
    median_ms: float
    p95_ms: float


@dataclass(frozen=True)
class BenchReport:
    width: int
    height: int
    iterations: int
    stages: tuple[StageStats, ...]
    total: StageStats
    stage_samples_ms: dict[str, list[float]]
    total_samples_ms: list[float]

    def stage_median_sum_ms(self) -> float:
        return sum(s.median_ms for s in self.stages)


def _stats(name: str, samples_s: list[float]) -> StageStats:
    arr = np.array(samples_s, dtype=np.float64) * 1e3
    return StageStats(
        name=name,
        min_ms=float(arr.min()),
        median_ms=float(np.median(arr)),
        p95_ms=float(np.percentile(arr, 95)),
    )


def run_bench(
    sensor: SensorModel,
    width: int = 2048,
    height: int = 1088,
    iterations: int = 10,
    seed: int = 2024,
) -> BenchReport:
    """Time white balance, bilinear demosaic, correction and sRGB encoding
    on a fixed-seed pseudo-random frame.

    One untimed warm-up frame runs first so JIT compilation never lands in
    the statistics.
    """
    from .fastpath import FramePipeline

    if iterations < 1:
        raise ValueError("bench: iterations must be >= 1")
    calibration = fit_calibration(sensor, default_fit_grid(sensor))
    pipeline = FramePipeline(height, width, sensor, calibration)

    rng = np.random.default_rng(seed)
    dark = (0.02 + 0.01 * rng.random((height, width))).astype(np.float32)
    white = (0.85 + 0.1 * rng.random((height, width))).astype(np.float32)
    signal = rng.random((height, width)).astype(np.float32)
    raw = (dark + signal * (white - dark) * 0.9).astype(np.float32)

    pipeline.run_frame(raw, white, dark)  # warm-up, untimed

    stage_samples: dict[str, list[float]] = {name: [] for name in STAGES}
    totals: list[float] = []
    for _ in range(iterations):
        t_frame = time.perf_counter()

        t0 = time.perf_counter()
        wb = pipeline.white_balance(raw, white, dark)
        stage_samples["white_balance"].append(time.perf_counter() - t0)

        t0 = time.perf_counter()
        cube = pipeline.demosaic(wb)
        stage_samples["demosaic"].append(time.perf_counter() - t0)

        t0 = time.perf_counter()
        corrected = pipeline.correct(cube)
        stage_samples["correction"].append(time.perf_counter() - t0)

        t0 = time.perf_counter()
        pipeline.srgb(corrected)
        stage_samples["srgb"].append(time.perf_counter() - t0)

        totals.append(time.perf_counter() - t_frame)

    stages = tuple(_stats(name, stage_samples[name]) for name in STAGES)
    return BenchReport(
        width=width,
        height=height,
        iterations=iterations,
        stages=stages,
        total=_stats("total", totals),
        stage_samples_ms={
            name: [s * 1e3 for s in vals] for name, vals in stage_samples.items()
        },
        total_samples_ms=[s * 1e3 for s in totals],
    )


def format_report(report: BenchReport) -> str:
    lines = [
        f"classical path, {report.height}x{report.width} frame, "
        f"{report.iterations} iterations",
        f"{'stage':<16}{'min (ms)':>12}{'median (ms)':>14}{'p95 (ms)':>12}",
    ]
    for s in report.stages:
        lines.append(
            f"{s.name:<16}{s.min_ms:>12.2f}{s.median_ms:>14.2f}{s.p95_ms:>12.2f}"
        )
    t = report.total
    lines.append(f"{t.name:<16}{t.min_ms:>12.2f}{t.median_ms:>14.2f}{t.p95_ms:>12.2f}")
    lines.append(
        f"stage medians sum to {report.stage_median_sum_ms():.2f} ms "
        f"(total median {t.median_ms:.2f} ms)"
    )
    return "\n".join(lines) + "\n"
