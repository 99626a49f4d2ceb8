"""Full-reference quality metrics and report aggregation.

SSIM follows the original single-scale formulation: 11x11 Gaussian window
with sigma 1.5, K1 = 0.01, K2 = 0.03, window-weighted moments without
sample-covariance correction, averaged over valid window positions and over
bands. Dynamic range is fixed at 1.0; callers normalize first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import MetricError, ShapeError, ValidationError

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DYNAMIC_RANGE = 1.0


def _as_array(img) -> np.ndarray:
    data = getattr(img, "data", img)
    return np.asarray(data, dtype=np.float64)


def _paired(a, b) -> tuple[np.ndarray, np.ndarray]:
    x, y = _as_array(a), _as_array(b)
    if x.shape != y.shape:
        raise ShapeError(f"metrics: shape mismatch {x.shape} vs {y.shape}")
    return x, y


def l1_error(a, b) -> float:
    """Mean absolute difference over all elements."""
    x, y = _paired(a, b)
    return float(np.mean(np.abs(x - y)))


def psnr(a, b, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio 10*log10(peak^2 / MSE) in decibels.

    Identical inputs have no finite PSNR and raise MetricError; report
    writers render that case as infinity.
    """
    x, y = _paired(a, b)
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        raise MetricError("infinite PSNR: inputs are identical")
    return float(10.0 * np.log10(peak * peak / mse))


def _gaussian_window() -> np.ndarray:
    radius = SSIM_WINDOW // 2
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(offsets**2) / (2.0 * SSIM_SIGMA**2))
    return kernel / kernel.sum()


def _window_mean(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    rows = sliding_window_view(img, kernel.size, axis=0) @ kernel
    return sliding_window_view(rows, kernel.size, axis=1) @ kernel


def _ssim_band(x: np.ndarray, y: np.ndarray, kernel: np.ndarray) -> float:
    c1 = (SSIM_K1 * DYNAMIC_RANGE) ** 2
    c2 = (SSIM_K2 * DYNAMIC_RANGE) ** 2
    mu_x = _window_mean(x, kernel)
    mu_y = _window_mean(y, kernel)
    var_x = _window_mean(x * x, kernel) - mu_x * mu_x
    var_y = _window_mean(y * y, kernel) - mu_y * mu_y
    cov = _window_mean(x * y, kernel) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def ssim(a, b) -> float:
    """Mean structural similarity; bands/channels are scored independently
    and averaged."""
    x, y = _paired(a, b)
    if x.ndim == 2:
        x = x[:, :, None]
        y = y[:, :, None]
    if x.ndim != 3:
        raise ShapeError("ssim: expected 2-D or 3-D image arrays")
    if x.shape[0] < SSIM_WINDOW or x.shape[1] < SSIM_WINDOW:
        raise ShapeError(
            f"ssim: spatial size {x.shape[0]}x{x.shape[1]} is smaller than "
            f"the {SSIM_WINDOW}x{SSIM_WINDOW} window"
        )
    kernel = _gaussian_window()
    scores = [_ssim_band(x[:, :, k], y[:, :, k], kernel) for k in range(x.shape[2])]
    return float(np.mean(scores))


@dataclass(frozen=True)
class MetricRecord:
    """Per-item metric row; psnr_db may be math.inf for identical pairs."""

    name: str
    l1: float
    psnr_db: float
    ssim: float

    def __post_init__(self):
        if not np.isfinite(self.l1) or self.l1 < 0:
            raise ValidationError(f"record {self.name}: l1 must be finite and >= 0")
        if np.isnan(self.psnr_db):
            raise ValidationError(f"record {self.name}: psnr must not be NaN")
        if not np.isfinite(self.ssim) or not -1.0 <= self.ssim <= 1.0:
            raise ValidationError(f"record {self.name}: ssim must lie in [-1, 1]")


_METRICS = ("l1", "psnr_db", "ssim")


@dataclass(frozen=True)
class QualityReport:
    """Per-item records plus mean and sample standard deviation per metric.

    With a single record the deviation is reported as 0; ``n`` lets readers
    recognize the degenerate case. Non-finite PSNR values propagate into the
    aggregates (mean of infinities is inf, their deviation nan).
    """

    records: tuple[MetricRecord, ...]
    mean: dict[str, float]
    std: dict[str, float]
    n: int


def aggregate(records: Sequence[MetricRecord] | Iterable[MetricRecord]) -> QualityReport:
    """Aggregate records into a report; input order is preserved in the
    output and does not affect the aggregate values."""
    records = tuple(records)
    if not records:
        raise ValidationError("aggregate: need at least one record")
    mean: dict[str, float] = {}
    std: dict[str, float] = {}
    for metric in _METRICS:
        values = np.array([getattr(r, metric) for r in records], dtype=np.float64)
        mean[metric] = float(values.mean())
        std[metric] = float(values.std(ddof=1)) if len(records) > 1 else 0.0
    return QualityReport(records=records, mean=mean, std=std, n=len(records))


def report_csv(report: QualityReport) -> str:
    """Deterministic CSV: one row per record, then mean/std/n rows."""
    lines = ["name,l1,psnr_db,ssim"]
    for rec in report.records:
        lines.append(f"{rec.name},{rec.l1!r},{rec.psnr_db!r},{rec.ssim!r}")
    lines.append(
        "mean," + ",".join(repr(report.mean[m]) for m in _METRICS)
    )
    lines.append("std," + ",".join(repr(report.std[m]) for m in _METRICS))
    lines.append(f"n,{report.n},{report.n},{report.n}")
    return "\n".join(lines) + "\n"


def report_text(report: QualityReport) -> str:
    """Human-readable table with a mean +/- std summary row."""
    header = f"{'item':<24}{'L1':>12}{'PSNR (dB)':>14}{'SSIM':>10}"
    rule = "-" * len(header)
    lines = [header, rule]
    for rec in report.records:
        lines.append(
            f"{rec.name:<24}{rec.l1:>12.6g}{rec.psnr_db:>14.6g}{rec.ssim:>10.6g}"
        )
    lines.append(rule)
    summary = (
        f"{'mean +/- std':<24}"
        f"{report.mean['l1']:>12.4g}"
        f"{report.mean['psnr_db']:>14.4g}"
        f"{report.mean['ssim']:>10.4g}"
    )
    lines.append(summary)
    lines.append(
        f"{'':<24}"
        f"{'+/- ' + format(report.std['l1'], '.4g'):>12}"
        f"{'+/- ' + format(report.std['psnr_db'], '.4g'):>14}"
        f"{'+/- ' + format(report.std['ssim'], '.4g'):>10}"
        f"   (n={report.n})"
    )
    return "\n".join(lines) + "\n"
