"""Core domain types for snapshot mosaic hyperspectral processing.

All types are immutable after construction (arrays are frozen) and safe to
share across threads. Array data is stored as float32, matching the on-disk
exchange format; numeric kernels upcast to float64 internally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import ValidationError

WAVELENGTH_MIN_NM = 200.0
WAVELENGTH_MAX_NM = 2500.0


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def trapezoid_weights(wavelengths_nm: np.ndarray) -> NDArray[np.float64]:
    """Trapezoidal quadrature weights w such that sum(w * f) ~ integral of f.

    Valid for non-uniform grids; exact for piecewise-linear integrands
    sampled at the knots.
    """
    wl = np.asarray(wavelengths_nm, dtype=np.float64)
    if wl.ndim != 1 or wl.size < 2:
        raise ValidationError("trapezoid weights need a 1-D grid of length >= 2")
    diffs = np.diff(wl)
    w = np.empty_like(wl)
    w[0] = diffs[0] / 2.0
    w[-1] = diffs[-1] / 2.0
    if wl.size > 2:
        w[1:-1] = (diffs[:-1] + diffs[1:]) / 2.0
    return w


@dataclass(frozen=True)
class Wavelengths:
    """Ordered wavelength sample positions in nm."""

    values: NDArray[np.float32]

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float32)
        if vals.ndim != 1:
            raise ValidationError("wavelengths: values must be 1-D")
        if vals.size < 2:
            raise ValidationError("wavelengths: need at least 2 samples")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("wavelengths: non-finite value")
        if np.any(vals <= WAVELENGTH_MIN_NM) or np.any(vals >= WAVELENGTH_MAX_NM):
            raise ValidationError(
                f"wavelengths: values must lie in ({WAVELENGTH_MIN_NM:g}, "
                f"{WAVELENGTH_MAX_NM:g}) nm"
            )
        if np.any(np.diff(vals) <= 0):
            raise ValidationError("wavelengths: values must be strictly increasing")
        object.__setattr__(self, "values", _freeze(vals))

    def __len__(self) -> int:
        return int(self.values.size)

    def as_float64(self) -> NDArray[np.float64]:
        return self.values.astype(np.float64)


@dataclass(frozen=True)
class MosaicPattern:
    """n x n tile of band indices; a bijection onto {0, ..., n^2 - 1}."""

    n: int
    band_at: NDArray[np.int64]

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("pattern: tile size n must be >= 1")
        grid = np.asarray(self.band_at, dtype=np.int64)
        if grid.shape != (self.n, self.n):
            raise ValidationError(f"pattern: band_at must be {self.n}x{self.n}")
        if not np.array_equal(np.sort(grid.ravel()), np.arange(self.n * self.n)):
            raise ValidationError(
                "pattern: band_at must be a bijection onto band indices"
            )
        object.__setattr__(self, "band_at", _freeze(grid))

    @property
    def bands(self) -> int:
        return self.n * self.n

    def offsets(self) -> list[tuple[int, int]]:
        """(row, col) tile offset of each band index, ordered by band."""
        pos = np.empty((self.bands, 2), dtype=np.int64)
        for r in range(self.n):
            for c in range(self.n):
                pos[self.band_at[r, c]] = (r, c)
        return [tuple(p) for p in pos]

    @classmethod
    def row_major(cls, n: int) -> "MosaicPattern":
        """Default layout: band_at[r][c] = r*n + c."""
        return cls(n=n, band_at=np.arange(n * n).reshape(n, n))


@dataclass(frozen=True)
class Hypercube:
    """X x Y x B reflectance cube, stored row-major by (y, x, band).

    Values may be negative only in spectral-correction intermediates; they
    must always be finite.
    """

    data: NDArray[np.float32]  # shape (height, width, bands)
    wavelengths: Wavelengths

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 3:
            raise ValidationError("cube: data must have shape (height, width, bands)")
        if arr.shape[2] != len(self.wavelengths):
            raise ValidationError(
                f"cube: wavelength count mismatch (bands={arr.shape[2]}, "
                f"wavelengths={len(self.wavelengths)})"
            )
        if not np.all(np.isfinite(arr)):
            raise ValidationError("cube: non-finite value in data")
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def bands(self) -> int:
        return self.data.shape[2]

    @classmethod
    def from_flat(
        cls, width: int, height: int, flat: np.ndarray, wavelengths: Wavelengths
    ) -> "Hypercube":
        bands = len(wavelengths)
        flat = np.asarray(flat)
        if flat.size != width * height * bands:
            raise ValidationError(
                f"cube: size mismatch (expected {width * height * bands} values, "
                f"got {flat.size})"
            )
        return cls(flat.reshape(height, width, bands), wavelengths)


@dataclass(frozen=True)
class MosaicImage:
    """Scalar X x Y image produced by spatially subsampling an intermediate cube."""

    data: NDArray[np.float32]  # shape (height, width)
    pattern: MosaicPattern

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise ValidationError("mosaic: data must have shape (height, width)")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("mosaic: non-finite value in data")
        if np.any(arr < 0):
            raise ValidationError("mosaic: negative value in data")
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


RESPONSE_MAX = 1.5  # headroom above unit QE for synthetic harmonics


@dataclass(frozen=True)
class ResponseCurve:
    """Sampled quantum-efficiency curve of one sensor band.

    Responses are kept at float64: they live in text files, not binary
    payloads, and calibration fitting relies on their full precision.
    """

    wavelengths: Wavelengths
    response: NDArray[np.float64]

    def __post_init__(self):
        resp = np.asarray(self.response, dtype=np.float64)
        if resp.ndim != 1 or resp.size != len(self.wavelengths):
            raise ValidationError(
                "response curve: response length must match wavelengths"
            )
        if not np.all(np.isfinite(resp)):
            raise ValidationError("response curve: non-finite response value")
        if np.any(resp < 0) or np.any(resp > RESPONSE_MAX):
            raise ValidationError(
                f"response curve: response must lie in [0, {RESPONSE_MAX}]"
            )
        object.__setattr__(self, "response", _freeze(resp))


@dataclass(frozen=True)
class IdealBandSpec:
    """Band-pass target: Lorentzian with peak lambda0, height qe, width fwhm."""

    lambda0: float
    qe: float
    fwhm: float

    def __post_init__(self):
        if not (0 < self.qe <= 1):
            raise ValidationError("ideal band: qe must lie in (0, 1]")
        if self.fwhm <= 0:
            raise ValidationError("ideal band: fwhm must be positive")
        if self.fwhm >= self.lambda0:
            raise ValidationError("ideal band: fwhm must be smaller than lambda0")


@dataclass(frozen=True)
class SensorModel:
    """Mosaic geometry plus measured response curves and ideal band targets."""

    pattern: MosaicPattern
    measured: tuple[ResponseCurve, ...]
    ideal: tuple[IdealBandSpec, ...]
    range_nm: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "measured", tuple(self.measured))
        object.__setattr__(self, "ideal", tuple(self.ideal))
        lo, hi = self.range_nm
        if not (lo < hi):
            raise ValidationError("sensor: range must satisfy lambda_min < lambda_max")
        if len(self.measured) != self.pattern.bands:
            raise ValidationError(
                f"sensor: need {self.pattern.bands} measured curves, "
                f"got {len(self.measured)}"
            )
        if len(self.ideal) > len(self.measured):
            raise ValidationError(
                "sensor: number of ideal bands must not exceed measured bands"
            )
        for spec in self.ideal:
            if not (lo <= spec.lambda0 <= hi):
                raise ValidationError(
                    f"sensor: ideal band center {spec.lambda0:g} nm outside "
                    f"range [{lo:g}, {hi:g}]"
                )

    @property
    def n_s(self) -> int:
        return len(self.measured)

    @property
    def n_i(self) -> int:
        return len(self.ideal)

    def measured_centers(self) -> NDArray[np.float64]:
        """Response-weighted centroid wavelength of each measured band."""
        centers = np.empty(self.n_s, dtype=np.float64)
        for k, curve in enumerate(self.measured):
            wl = curve.wavelengths.as_float64()
            w = trapezoid_weights(wl) * curve.response.astype(np.float64)
            total = w.sum()
            if total <= 0:
                raise ValidationError(f"sensor: measured band {k} has zero response")
            centers[k] = (w * wl).sum() / total
        return centers


@dataclass(frozen=True)
class CalibrationMatrix:
    """Linear map from n_s measured band values to n_i ideal band values."""

    entries: NDArray[np.float64]  # shape (n_i, n_s)
    residual_rms: float = 0.0

    def __post_init__(self):
        arr = np.ascontiguousarray(self.entries, dtype=np.float64)
        if arr.ndim != 2:
            raise ValidationError("calibration: entries must be a 2-D matrix")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("calibration: non-finite entry")
        object.__setattr__(self, "entries", _freeze(arr))

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    def check_sensor(self, sensor: SensorModel) -> None:
        if (self.rows, self.cols) != (sensor.n_i, sensor.n_s):
            raise ValidationError(
                f"calibration: shape {self.rows}x{self.cols} does not match "
                f"sensor ({sensor.n_i}x{sensor.n_s})"
            )


def resample_curve(curve: ResponseCurve, target: Wavelengths) -> ResponseCurve:
    """Resample a response curve onto a new grid.

    Piecewise-linear between samples, exactly zero outside the curve's
    support (physical filters transmit nothing far outside their passband).
    """
    resp = resample_response(
        curve.wavelengths.as_float64(),
        curve.response,
        target.as_float64(),
    )
    return ResponseCurve(wavelengths=target, response=resp)


def resample_response(
    src_wl: np.ndarray, src_resp: np.ndarray, target_wl: np.ndarray
) -> NDArray[np.float64]:
    """Array-level resampling used by :func:`resample_curve` and the simulators."""
    target_wl = np.asarray(target_wl, dtype=np.float64)
    if target_wl.size == 0:
        raise ValidationError("resample: empty target grid")
    return np.interp(target_wl, src_wl, src_resp, left=0.0, right=0.0)
