"""Perceptual scoring of paired RGB renderings."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exchange import read_cube
from .perceptual import FeatureExtractor, lpips_style, rgb_cube_to_tensor


@dataclass(frozen=True)
class PerceptualReport:
    pairs: tuple[tuple[str, float], ...]
    mean: float
    std: float


def lpips_eval(pred_dir: str | Path, ref_dir: str | Path) -> PerceptualReport:
    """Score prediction/reference RGB cube pairs matched by filename.

    Inputs are raw float RGB images in the exchange format (as written by
    the toolkit's ``rgb --raw``). Identical pairs score exactly 0; lower
    is more similar.
    """
    pred_dir = Path(pred_dir)
    ref_dir = Path(ref_dir)
    names = sorted(p.name for p in pred_dir.glob("*.cube"))
    if not names:
        raise FileNotFoundError(f"{pred_dir}: no .cube files")
    extractor = FeatureExtractor()
    pairs = []
    for name in names:
        ref_path = ref_dir / name
        if not ref_path.exists():
            raise FileNotFoundError(f"{ref_path}: missing reference for {name}")
        a = rgb_cube_to_tensor(read_cube(pred_dir / name).data)
        b = rgb_cube_to_tensor(read_cube(ref_path).data)
        pairs.append((name, lpips_style(extractor, a, b)))
    scores = np.array([s for _, s in pairs], dtype=np.float64)
    std = float(scores.std(ddof=1)) if scores.size > 1 else 0.0
    return PerceptualReport(pairs=tuple(pairs), mean=float(scores.mean()), std=std)


def format_report(report: PerceptualReport) -> str:
    lines = [f"{name},{score!r}" for name, score in report.pairs]
    lines.append(f"mean,{report.mean!r}")
    lines.append(f"std,{report.std!r}")
    return "\n".join(lines) + "\n"
