"""Mosaic-to-cube recovery: band splitting, bilinear upsampling and
spectral correction.

Each band is interpolated on its own stride-n sample lattice; outside the
convex hull of a band's samples the nearest sample value is used (edge
clamp). Interpolation runs in float32 with the expression
``v0 + t * (v1 - v0)`` so the vectorized reference and the jitted fast path
produce bit-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .core import (
    CalibrationMatrix,
    Hypercube,
    MosaicImage,
    MosaicPattern,
    SensorModel,
    Wavelengths,
)
from .errors import ShapeError, ValidationError
from .sensor import ideal_axis, intermediate_axis


@dataclass(frozen=True)
class BandSamples:
    """Sparse sample grid of one band: values at rows row_offset + n*i,
    cols col_offset + n*j of the mosaic."""

    band: int
    row_offset: int
    col_offset: int
    values: NDArray[np.float32]


def split_bands(mosaic: MosaicImage) -> list[BandSamples]:
    """Group mosaic pixels by band; every pixel lands in exactly one band."""
    n = mosaic.pattern.n
    out = []
    for band, (r0, c0) in enumerate(mosaic.pattern.offsets()):
        out.append(
            BandSamples(
                band=band,
                row_offset=r0,
                col_offset=c0,
                values=mosaic.data[r0::n, c0::n],
            )
        )
    return out


def _axis_tables(size: int, offset: int, n: int):
    """Per-output-pixel source indices and lerp weight along one axis.

    Samples sit at offset + n*i. Outputs left of the first sample or right
    of the last clamp to it (t forced to 0 or 1 on a valid bracket).
    """
    m = (size - 1 - offset) // n + 1
    pos = np.arange(size, dtype=np.float64)
    if m == 1:
        i0 = np.zeros(size, dtype=np.int64)
        t = np.zeros(size, dtype=np.float32)
        return i0, i0, t
    jf = (pos - offset) / n
    j0 = np.clip(np.floor(jf), 0, m - 2).astype(np.int64)
    t = np.clip(jf - j0, 0.0, 1.0).astype(np.float32)
    return j0, j0 + 1, t


def bilinear_demosaic(mosaic: MosaicImage, sensor: SensorModel | None = None) -> Hypercube:
    """Upsample every band's sparse grid back to full resolution.

    The output wavelength axis comes from the sensor when given (ideal band
    centers, falling back to measured centroids); without a sensor a nominal
    evenly spaced axis is attached for spatial-only use.
    """
    n = mosaic.pattern.n
    if mosaic.height < n or mosaic.width < n:
        raise ShapeError(
            f"demosaic: mosaic {mosaic.height}x{mosaic.width} is smaller than "
            f"one {n}x{n} tile"
        )
    bands = mosaic.pattern.bands
    out = np.empty((mosaic.height, mosaic.width, bands), dtype=np.float32)
    for samples in split_bands(mosaic):
        i0, i1, tr = _axis_tables(mosaic.height, samples.row_offset, n)
        j0, j1, tc = _axis_tables(mosaic.width, samples.col_offset, n)
        grid = samples.values
        # columns first, then rows: matches the fused fast-path kernel
        left = grid[:, j0]
        cols = left + tc[None, :] * (grid[:, j1] - left)
        top = cols[i0, :]
        out[:, :, samples.band] = top + tr[:, None] * (cols[i1, :] - top)

    if sensor is not None:
        axis = intermediate_axis(sensor)
        if len(axis) != bands:
            raise ShapeError(
                f"demosaic: sensor provides {len(axis)} bands, mosaic pattern "
                f"has {bands}"
            )
    else:
        axis = Wavelengths(
            (400.0 + 10.0 * np.arange(bands, dtype=np.float64)).astype(np.float32)
        )
    return Hypercube(data=out, wavelengths=axis)


def apply_correction(
    cube: Hypercube,
    calibration: CalibrationMatrix,
    clamp: bool = False,
    wavelengths: Wavelengths | None = None,
) -> Hypercube:
    """Per-pixel matrix-vector product with the calibration matrix.

    Negative outputs are preserved unless ``clamp`` is set; training losses
    compare unclamped corrected values, the final pipeline stage clamps.
    """
    if cube.bands != calibration.cols:
        raise ShapeError(
            f"correction: cube has {cube.bands} bands, matrix expects "
            f"{calibration.cols}"
        )
    if wavelengths is None:
        if calibration.rows == calibration.cols:
            wavelengths = cube.wavelengths
        else:
            raise ValidationError(
                "correction: output wavelength axis required when the "
                "calibration matrix is not square"
            )
    elif len(wavelengths) != calibration.rows:
        raise ShapeError(
            f"correction: axis has {len(wavelengths)} entries, matrix yields "
            f"{calibration.rows} bands"
        )
    flat = cube.data.reshape(-1, cube.bands).astype(np.float64)
    corrected = flat @ calibration.entries.T
    if clamp:
        corrected = np.maximum(corrected, 0.0)
    data = corrected.astype(np.float32).reshape(
        cube.height, cube.width, calibration.rows
    )
    return Hypercube(data=data, wavelengths=wavelengths)


def demosaic_pipeline(
    mosaic: MosaicImage,
    sensor: SensorModel,
    calibration: CalibrationMatrix,
    refined: Hypercube | None = None,
) -> Hypercube:
    """Classical reconstruction: bilinear demosaic (or an externally refined
    cube) followed by spectral correction, clamped to >= 0."""
    calibration.check_sensor(sensor)
    if refined is not None:
        expected = (mosaic.height, mosaic.width, sensor.n_s)
        if refined.data.shape != expected:
            raise ShapeError(
                f"pipeline: refined cube shape {refined.data.shape} does not "
                f"match expected {expected}"
            )
        base = refined
    else:
        base = bilinear_demosaic(mosaic, sensor)
    return apply_correction(
        base, calibration, clamp=True, wavelengths=ideal_axis(sensor)
    )
