"""Bilinear demosaicking of exchange mosaics into network input cubes.

Each band is interpolated on its own stride-n lattice with edge clamp,
matching the toolkit's documented reconstruction contract closely enough to
serve as the network input; the refined output only has to match the
intermediate cube's shape for the downstream ``demosaic --refined`` call.
"""

from __future__ import annotations

import numpy as np

from .exchange import Cube, Mosaic


def _axis(size: int, offset: int, step: int):
    m = (size - 1 - offset) // step + 1
    pos = np.arange(size, dtype=np.float64)
    if m == 1:
        zero = np.zeros(size, np.int64)
        return zero, zero, np.zeros(size, np.float64)
    jf = (pos - offset) / step
    j0 = np.clip(np.floor(jf), 0, m - 2).astype(np.int64)
    t = np.clip(jf - j0, 0.0, 1.0)
    return j0, j0 + 1, t


def band_offsets(band_at: np.ndarray) -> list[tuple[int, int]]:
    n = band_at.shape[0]
    pos = [(0, 0)] * (n * n)
    for r in range(n):
        for c in range(n):
            pos[int(band_at[r, c])] = (r, c)
    return pos


def bilinear_cube(mosaic: Mosaic, wavelengths: np.ndarray) -> Cube:
    n = mosaic.tile
    h, w = mosaic.data.shape
    bands = n * n
    out = np.empty((h, w, bands), np.float32)
    for band, (r0, c0) in enumerate(band_offsets(mosaic.band_at)):
        grid = mosaic.data[r0::n, c0::n].astype(np.float64)
        i0, i1, tr = _axis(h, r0, n)
        j0, j1, tc = _axis(w, c0, n)
        cols = grid[:, j0] + tc[None, :] * (grid[:, j1] - grid[:, j0])
        full = cols[i0, :] + tr[:, None] * (cols[i1, :] - cols[i0, :])
        out[:, :, band] = full.astype(np.float32)
    return Cube(data=out, wavelengths=np.asarray(wavelengths, np.float32))
