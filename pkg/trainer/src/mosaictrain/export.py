"""Export refined intermediate cubes for the toolkit's ``demosaic --refined``."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from .bilinear import bilinear_cube
from .exchange import Cube, read_cube, read_mosaic, write_cube
from .train import load_model


def refine_cube(model, cube: Cube) -> Cube:
    tensor = torch.from_numpy(np.ascontiguousarray(np.moveaxis(cube.data, 2, 0))).unsqueeze(0)
    with torch.no_grad():
        refined = model(tensor)[0]
    return Cube(
        data=np.moveaxis(refined.numpy(), 0, 2).astype(np.float32),
        wavelengths=cube.wavelengths,
    )


def export_predictions(
    checkpoint: str | Path, in_dir: str | Path, out_dir: str | Path
) -> list[Path]:
    """Refine every mosaic (or bilinear cube) in ``in_dir``.

    Mosaic inputs need the matching ``.intermediate.cube`` beside them for
    the wavelength axis. Outputs keep the source stem with the
    ``.refined.cube`` suffix.
    """
    in_dir = Path(in_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model = load_model(checkpoint)

    written: list[Path] = []
    mosaics = sorted(in_dir.glob("*.mosaic"))
    bilinears = sorted(in_dir.glob("*.bilinear.cube"))
    if not mosaics and not bilinears:
        raise FileNotFoundError(f"{in_dir}: no .mosaic or .bilinear.cube inputs")
    seen = set()
    for path in bilinears:
        stem = path.name[: -len(".bilinear.cube")]
        seen.add(stem)
        refined = refine_cube(model, read_cube(path))
        target = out_dir / f"{stem}.refined.cube"
        write_cube(refined, target)
        written.append(target)
    for path in mosaics:
        stem = path.stem
        if stem in seen:
            continue
        mosaic = read_mosaic(path)
        axis_source = path.with_suffix(".intermediate.cube")
        wavelengths = read_cube(axis_source).wavelengths
        refined = refine_cube(model, bilinear_cube(mosaic, wavelengths))
        target = out_dir / f"{stem}.refined.cube"
        write_cube(refined, target)
        written.append(target)
    return written
