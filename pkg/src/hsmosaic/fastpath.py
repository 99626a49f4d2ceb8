"""Jitted kernels for the real-time classical path.

The reference implementations in :mod:`sensor`, :mod:`demosaic` and
:mod:`color` stay the source of truth; these kernels exist to hit the
per-frame latency budget. Demosaicking runs as two separable passes with a
per-row-block interleave so all large writes are contiguous; it evaluates
the exact same float32 lerp expression as the reference and matches it bit
for bit. The correction and RGB kernels vectorize their reductions
(fastmath), so they agree with the float64 reference paths to float32
accuracy. Gamma encoding uses a 65537-entry interpolated table whose error
(< 1e-7 absolute) sits below everything the float32 pipeline resolves.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

from .color import XYZ_TO_SRGB, _xyz_weights, d65_white_xyz, srgb_gamma, white_point_xyz
from .core import MosaicImage, SensorModel
from .demosaic import _axis_tables
from .errors import ShapeError
from .sensor import ideal_axis

GAMMA_LUT_SIZE = 65537
_ROW_BLOCK = 64


def _build_gamma_lut() -> np.ndarray:
    grid = np.linspace(0.0, 1.0, GAMMA_LUT_SIZE)
    return srgb_gamma(grid).astype(np.float32)


_GAMMA_LUT = _build_gamma_lut()


@njit(parallel=True, cache=True)
def _wb_kernel(raw, white, dark, floor, out):
    h, w = raw.shape
    for y in prange(h):
        for x in range(w):
            den = white[y, x] - dark[y, x]
            if den < floor:
                out[y, x] = np.float32(0.0)
            else:
                v = (raw[y, x] - dark[y, x]) / den
                out[y, x] = v if v > np.float32(0.0) else np.float32(0.0)


@njit(parallel=True, cache=True)
def _demosaic_pass1(mosaic, row_off, s0c, s1c, tc, n_sample_rows, n, tmps):
    """Column lerp at every band's sample rows, band-planar scratch."""
    bands = tmps.shape[0]
    w = mosaic.shape[1]
    for b in prange(bands):
        for i in range(n_sample_rows[b]):
            r = row_off[b] + n * i
            for x in range(w):
                wc = tc[b, x]
                left = mosaic[r, s0c[b, x]]
                tmps[b, i, x] = left + wc * (mosaic[r, s1c[b, x]] - left)


@njit(parallel=True, cache=True)
def _demosaic_pass2(tmps, i0s, i1s, tr, out):
    """Row lerp between col-lerped sample rows, interleaved into (y, x, band)."""
    h, w, bands = out.shape
    nblocks = (h + _ROW_BLOCK - 1) // _ROW_BLOCK
    for blk in prange(nblocks):
        y0 = blk * _ROW_BLOCK
        y1 = min(h, y0 + _ROW_BLOCK)
        rowbuf = np.empty((bands, w), np.float32)
        for y in range(y0, y1):
            for b in range(bands):
                ia = i0s[b, y]
                ib = i1s[b, y]
                wr = tr[b, y]
                for x in range(w):
                    top = tmps[b, ia, x]
                    rowbuf[b, x] = top + wr * (tmps[b, ib, x] - top)
            for x in range(w):
                for b in range(bands):
                    out[y, x, b] = rowbuf[b, x]


@njit(parallel=True, cache=True, fastmath=True)
def _correct_clamp_kernel(cube, matrix, out):
    n, n_s = cube.shape
    n_i = matrix.shape[0]
    for p in prange(n):
        for i in range(n_i):
            acc = np.float32(0.0)
            for k in range(n_s):
                acc += matrix[i, k] * cube[p, k]
            out[p, i] = acc if acc > np.float32(0.0) else np.float32(0.0)


@njit(inline="always")
def _encode_channel(acc, lut):
    if acc < np.float32(0.0):
        acc = np.float32(0.0)
    elif acc > np.float32(1.0):
        acc = np.float32(1.0)
    pos = acc * np.float32(lut.shape[0] - 1)
    idx = int(pos)
    if idx >= lut.shape[0] - 1:
        idx = lut.shape[0] - 2
    frac = pos - np.float32(idx)
    return lut[idx] + frac * (lut[idx + 1] - lut[idx])


@njit(parallel=True, cache=True, fastmath=True)
def _rgb_kernel(cube, matrix, lut, out):
    n, bands = cube.shape
    for p in prange(n):
        acc_r = np.float32(0.0)
        acc_g = np.float32(0.0)
        acc_b = np.float32(0.0)
        for k in range(bands):
            v = cube[p, k]
            acc_r += matrix[k, 0] * v
            acc_g += matrix[k, 1] * v
            acc_b += matrix[k, 2] * v
        out[p, 0] = _encode_channel(acc_r, lut)
        out[p, 1] = _encode_channel(acc_g, lut)
        out[p, 2] = _encode_channel(acc_b, lut)


class _DemosaicPlan:
    """Index/weight tables plus scratch for one frame geometry and pattern."""

    def __init__(self, height: int, width: int, pattern):
        n = pattern.n
        bands = pattern.bands
        self.height = height
        self.width = width
        self.n = n
        self.row_off = np.empty(bands, np.int64)
        self.n_sample_rows = np.empty(bands, np.int64)
        self.i0s = np.empty((bands, height), np.int64)
        self.i1s = np.empty((bands, height), np.int64)
        self.tr = np.empty((bands, height), np.float32)
        self.s0c = np.empty((bands, width), np.int64)
        self.s1c = np.empty((bands, width), np.int64)
        self.tc = np.empty((bands, width), np.float32)
        for band, (r0, c0) in enumerate(pattern.offsets()):
            i0, i1, t = _axis_tables(height, r0, n)
            self.row_off[band] = r0
            self.n_sample_rows[band] = (height - 1 - r0) // n + 1
            self.i0s[band] = i0
            self.i1s[band] = i1
            self.tr[band] = t
            j0, j1, t = _axis_tables(width, c0, n)
            self.s0c[band] = c0 + n * j0
            self.s1c[band] = c0 + n * j1
            self.tc[band] = t
        self.tmp = np.empty((bands, int(self.n_sample_rows.max()), width), np.float32)

    def run(self, mosaic: np.ndarray, out: np.ndarray) -> np.ndarray:
        _demosaic_pass1(
            mosaic, self.row_off, self.s0c, self.s1c, self.tc,
            self.n_sample_rows, self.n, self.tmp,
        )
        _demosaic_pass2(self.tmp, self.i0s, self.i1s, self.tr, out)
        return out


class FramePipeline:
    """Preplanned classical reconstruction of full frames.

    Stages: white balance on the raw mosaic, bilinear demosaic, spectral
    correction (clamped), sRGB encoding with the band-limited white rescale
    folded into one matrix. Buffers are allocated once and reused.
    """

    def __init__(self, height: int, width: int, sensor: SensorModel, calibration):
        calibration.check_sensor(sensor)
        self.height = height
        self.width = width
        self.sensor = sensor
        n = sensor.pattern.n
        if height < n or width < n:
            raise ShapeError("pipeline: frame smaller than one mosaic tile")
        bands = sensor.pattern.bands

        self._plan = _DemosaicPlan(height, width, sensor.pattern)
        self._calib32 = np.ascontiguousarray(calibration.entries, dtype=np.float32)

        axis = ideal_axis(sensor)
        weights, k = _xyz_weights(axis)
        target = np.array(d65_white_xyz())
        white = white_point_xyz(axis)
        xyz_matrix = weights * k * (target / white)[None, :]
        self._rgb_matrix = np.ascontiguousarray(
            xyz_matrix @ XYZ_TO_SRGB.T, dtype=np.float32
        )

        self._wb = np.empty((height, width), np.float32)
        self._cube = np.empty((height, width, bands), np.float32)
        self._corrected = np.empty((height * width, calibration.rows), np.float32)
        self._rgb = np.empty((height * width, 3), np.float32)

    def white_balance(self, raw, white, dark) -> np.ndarray:
        _wb_kernel(raw, white, dark, np.float32(1e-6), self._wb)
        return self._wb

    def demosaic(self, mosaic: np.ndarray) -> np.ndarray:
        return self._plan.run(mosaic, self._cube)

    def correct(self, cube: np.ndarray) -> np.ndarray:
        _correct_clamp_kernel(
            cube.reshape(-1, cube.shape[2]), self._calib32, self._corrected
        )
        return self._corrected

    def srgb(self, corrected: np.ndarray) -> np.ndarray:
        _rgb_kernel(corrected, self._rgb_matrix, _GAMMA_LUT, self._rgb)
        return self._rgb

    def run_frame(self, raw, white, dark) -> np.ndarray:
        wb = self.white_balance(raw, white, dark)
        cube = self.demosaic(wb)
        corrected = self.correct(cube)
        return self.srgb(corrected)


def demosaic_mosaic_fast(mosaic: MosaicImage, sensor: SensorModel) -> np.ndarray:
    """Jitted bilinear demosaic of one mosaic; bit-identical to
    :func:`hsmosaic.demosaic.bilinear_demosaic`."""
    plan = _DemosaicPlan(mosaic.height, mosaic.width, sensor.pattern)
    out = np.empty((mosaic.height, mosaic.width, sensor.pattern.bands), np.float32)
    return plan.run(mosaic.data, out)
