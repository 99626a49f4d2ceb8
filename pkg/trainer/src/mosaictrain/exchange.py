"""Reader/writer for the cube exchange format shared with the toolkit.

This component talks to the reconstruction toolkit only through its files
and CLI; the format (documented in the toolkit README) is implemented here
independently: UTF-8 ``field:value`` header, blank line, little-endian
payload. Writes are atomic (temp file + rename).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC_CUBE = "HSICUBE1"
MAGIC_MOSAIC = "HSIMOSA1"
MAGIC_CALIB = "HSICALB1"


class ExchangeError(ValueError):
    pass


@dataclass(frozen=True)
class Cube:
    data: np.ndarray  # (height, width, bands) float32
    wavelengths: np.ndarray  # (bands,) float32


@dataclass(frozen=True)
class Mosaic:
    data: np.ndarray  # (height, width) float32
    tile: int
    band_at: np.ndarray  # (tile, tile) int


def _split(blob: bytes, path: Path) -> tuple[dict[str, str], bytes]:
    sep = blob.find(b"\n\n")
    if sep < 0:
        raise ExchangeError(f"{path}: no header terminator")
    fields = {}
    for line in blob[:sep].decode("utf-8").split("\n"):
        key, colon, value = line.partition(":")
        if not colon:
            raise ExchangeError(f"{path}: bad header line {line!r}")
        fields[key] = value
    return fields, blob[sep + 2 :]


def read_cube(path: str | Path) -> Cube:
    path = Path(path)
    fields, payload = _split(path.read_bytes(), path)
    if fields.get("magic") != MAGIC_CUBE:
        raise ExchangeError(f"{path}: not a cube file")
    width = int(fields["width"])
    height = int(fields["height"])
    bands = int(fields["bands"])
    wavelengths = np.array([float(v) for v in fields["wavelengths"].split(",")], np.float32)
    if wavelengths.size != bands:
        raise ExchangeError(f"{path}: wavelength count mismatch")
    if len(payload) != width * height * bands * 4:
        raise ExchangeError(f"{path}: size mismatch")
    data = np.frombuffer(payload, dtype="<f4").reshape(height, width, bands)
    return Cube(data=data, wavelengths=wavelengths)


def write_cube(cube: Cube, path: str | Path) -> None:
    path = Path(path)
    data = np.ascontiguousarray(cube.data, dtype="<f4")
    if not np.all(np.isfinite(data)):
        raise ExchangeError(f"{path}: non-finite value")
    header = (
        f"magic:{MAGIC_CUBE}\n"
        f"width:{data.shape[1]}\n"
        f"height:{data.shape[0]}\n"
        f"bands:{data.shape[2]}\n"
        "wavelengths:"
        + ",".join(repr(float(np.float32(v))) for v in cube.wavelengths)
        + "\n\n"
    )
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header.encode("utf-8"))
        fh.write(data.tobytes())
    os.replace(tmp, path)


def read_mosaic(path: str | Path) -> Mosaic:
    path = Path(path)
    fields, payload = _split(path.read_bytes(), path)
    if fields.get("magic") != MAGIC_MOSAIC:
        raise ExchangeError(f"{path}: not a mosaic file")
    width = int(fields["width"])
    height = int(fields["height"])
    head, _, rest = fields["pattern"].partition(";")
    tile = int(head)
    band_at = np.array([int(v) for v in rest.split(",")], np.int64).reshape(tile, tile)
    if len(payload) != width * height * 4:
        raise ExchangeError(f"{path}: size mismatch")
    data = np.frombuffer(payload, dtype="<f4").reshape(height, width)
    return Mosaic(data=data, tile=tile, band_at=band_at)


def read_calibration(path: str | Path) -> tuple[np.ndarray, float]:
    path = Path(path)
    fields, payload = _split(path.read_bytes(), path)
    if fields.get("magic") != MAGIC_CALIB:
        raise ExchangeError(f"{path}: not a calibration file")
    rows = int(fields["rows"])
    cols = int(fields["cols"])
    residual = float(fields["residual_rms"])
    if len(payload) != rows * cols * 8:
        raise ExchangeError(f"{path}: size mismatch")
    entries = np.frombuffer(payload, dtype="<f8").reshape(rows, cols)
    return entries, residual
