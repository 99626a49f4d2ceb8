"""Snapshot sensor simulation: spectral responses, spatial subsampling,
calibration fitting and the synthetic sensor family.

Simulated band values are normalized inner products: the response-weighted
trapezoidal mean of the spectrum, so a spectrally flat input maps to itself.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from .core import (
    CalibrationMatrix,
    Hypercube,
    IdealBandSpec,
    MosaicImage,
    MosaicPattern,
    ResponseCurve,
    SensorModel,
    Wavelengths,
    resample_response,
    trapezoid_weights,
)
from .errors import DegenerateError, ShapeError, ValidationError


def lorentzian(lam, spec: IdealBandSpec):
    """Band-pass response QE * a*l^2 / ((l - l0)^2 + a*l^2) with
    a = (sqrt(l0^2 + FWHM^2) - l0)^2 / FWHM^2.

    Peaks at exactly QE when lam == lambda0; the full width at half maximum,
    measured in wavelength, equals the fwhm parameter.
    """
    lam_arr = np.asarray(lam, dtype=np.float64)
    if np.any(lam_arr <= 0):
        raise ValidationError("lorentzian: wavelength must be positive")
    l0 = float(spec.lambda0)
    f = float(spec.fwhm)
    alpha = (np.sqrt(l0 * l0 + f * f) - l0) ** 2 / (f * f)
    al2 = alpha * lam_arr * lam_arr
    out = spec.qe * al2 / ((lam_arr - l0) ** 2 + al2)
    if np.isscalar(lam) or np.ndim(lam) == 0:
        return float(out)
    return out


def _band_weight_matrix(
    responses: NDArray[np.float64], grid: NDArray[np.float64], what: str
) -> NDArray[np.float64]:
    """Rows: trapezoid-weighted responses normalized to unit sum."""
    w = trapezoid_weights(grid)
    weighted = responses * w[None, :]
    totals = weighted.sum(axis=1)
    bad = np.nonzero(totals <= 0)[0]
    if bad.size:
        raise DegenerateError(
            f"{what}: band {bad[0]} has no overlap with the cube wavelengths"
        )
    return weighted / totals[:, None]


def _apply_weights(hr: Hypercube, weights: NDArray[np.float64]) -> NDArray[np.float32]:
    flat = hr.data.reshape(-1, hr.bands).astype(np.float64)
    out = flat @ weights.T
    return out.astype(np.float32).reshape(hr.height, hr.width, weights.shape[0])


def intermediate_axis(sensor: SensorModel) -> Wavelengths:
    """Nominal wavelength axis for measured-band-space cubes.

    Uses the ideal band centers when they cover all measured bands (the
    synthetic family always does), falling back to response centroids.
    """
    if sensor.n_i == sensor.n_s:
        centers = np.array([b.lambda0 for b in sensor.ideal], dtype=np.float64)
        if np.all(np.diff(centers) > 0):
            return Wavelengths(centers.astype(np.float32))
    centers = sensor.measured_centers()
    if not np.all(np.diff(centers) > 0):
        raise DegenerateError(
            "sensor: cannot derive a strictly increasing wavelength axis "
            "for measured bands"
        )
    return Wavelengths(centers.astype(np.float32))


def ideal_axis(sensor: SensorModel) -> Wavelengths:
    """Wavelength axis of the ideal (corrected) band space."""
    if sensor.n_i == 0:
        raise ValidationError("sensor: empty ideal band list")
    centers = np.array([b.lambda0 for b in sensor.ideal], dtype=np.float64)
    if not np.all(np.diff(centers) > 0):
        raise DegenerateError("sensor: ideal band centers are not increasing")
    return Wavelengths(centers.astype(np.float32))


def simulate_spectral(hr: Hypercube, sensor: SensorModel) -> Hypercube:
    """Apply the measured band responses to a high-resolution cube.

    Each output band is the trapezoidal integral of spectrum times the
    resampled response, divided by the response integral.
    """
    grid = hr.wavelengths.as_float64()
    responses = np.stack(
        [
            resample_response(c.wavelengths.as_float64(), c.response, grid)
            for c in sensor.measured
        ]
    )
    weights = _band_weight_matrix(responses, grid, "simulate_spectral")
    return Hypercube(_apply_weights(hr, weights), intermediate_axis(sensor))


def simulate_ideal(hr: Hypercube, sensor: SensorModel) -> Hypercube:
    """Apply the ideal Lorentzian band responses to a high-resolution cube.

    Responses are evaluated within the sensor's spectral range and zero
    outside it, mirroring the support of the measured curves; a clean
    (leakage-free) sensor therefore yields identical intermediate and ideal
    cubes when the cube grid hits the curve samples.
    """
    if sensor.n_i == 0:
        raise ValidationError("sensor: empty ideal band list")
    grid = hr.wavelengths.as_float64()
    lo, hi = sensor.range_nm
    in_range = (grid >= lo) & (grid <= hi)
    responses = np.stack(
        [np.where(in_range, lorentzian(grid, b), 0.0) for b in sensor.ideal]
    )
    weights = _band_weight_matrix(responses, grid, "simulate_ideal")
    return Hypercube(_apply_weights(hr, weights), ideal_axis(sensor))


def subsample(intermediate: Hypercube, pattern: MosaicPattern) -> MosaicImage:
    """Keep one band value per pixel following the mosaic tiling.

    out(x, y) = intermediate(x, y, band_at[y mod n][x mod n]); partial
    trailing tiles need no padding.
    """
    if intermediate.bands != pattern.bands:
        raise ShapeError(
            f"subsample: cube has {intermediate.bands} bands, "
            f"pattern needs {pattern.bands}"
        )
    h, w = intermediate.height, intermediate.width
    band_idx = pattern.band_at[
        np.arange(h)[:, None] % pattern.n, np.arange(w)[None, :] % pattern.n
    ]
    data = np.take_along_axis(intermediate.data, band_idx[:, :, None], axis=2)[:, :, 0]
    return MosaicImage(data=data, pattern=pattern)


def fit_calibration(sensor: SensorModel, grid: Wavelengths) -> CalibrationMatrix:
    """Least-squares fit of the matrix mapping measured to ideal band values.

    Responses are sampled on ``grid`` and normalized to unit trapezoidal
    area (the simulators produce area-normalized band values, so the
    correction acts between the normalized spaces). Reports the residual
    RMS of the fit alongside the matrix.
    """
    g = grid.as_float64()
    measured = np.stack(
        [
            resample_response(c.wavelengths.as_float64(), c.response, g)
            for c in sensor.measured
        ]
    )
    if sensor.n_i == 0:
        raise ValidationError("sensor: empty ideal band list")
    ideal = np.stack([lorentzian(g, b) for b in sensor.ideal])
    measured_n = _band_weight_matrix(measured, g, "fit_calibration") * g.size
    ideal_n = _band_weight_matrix(ideal, g, "fit_calibration") * g.size

    if np.linalg.matrix_rank(measured_n) < sensor.n_s:
        raise DegenerateError("degenerate sensor responses")
    # solve argmin_C || C @ measured - ideal ||_F
    solution, _, _, _ = np.linalg.lstsq(measured_n.T, ideal_n.T, rcond=None)
    entries = solution.T
    residual = entries @ measured_n - ideal_n
    residual_rms = float(np.sqrt(np.mean(residual**2)))
    return CalibrationMatrix(entries=entries, residual_rms=residual_rms)


def default_fit_grid(sensor: SensorModel) -> Wavelengths:
    """Grid for calibration fitting.

    The shared measured-curve grid when all bands are sampled identically
    (exact for the synthetic family), otherwise a dense uniform grid over
    the sensor range with >= 10 samples per ideal FWHM.
    """
    first = sensor.measured[0].wavelengths
    if all(
        np.array_equal(c.wavelengths.values, first.values) for c in sensor.measured
    ):
        return first
    lo, hi = sensor.range_nm
    min_fwhm = min((b.fwhm for b in sensor.ideal), default=(hi - lo) / 10.0)
    count = max(int(np.ceil((hi - lo) / (min_fwhm / 10.0))) + 1, 50)
    return Wavelengths(np.linspace(lo, hi, count).astype(np.float32))


def white_balance(raw, white, dark):
    """Flat-field correction (raw - dark) / (white - dark), clamped to >= 0.

    Elements where the denominator falls below 1e-6 map to 0. Accepts
    matching Hypercube or MosaicImage triples and returns the same type.
    """
    for name, ref in (("white", white), ("dark", dark)):
        if ref.data.shape != raw.data.shape:
            raise ShapeError(
                f"white balance: {name} shape {ref.data.shape} does not match "
                f"raw {raw.data.shape}"
            )
    out = white_balance_array(
        raw.data.astype(np.float64),
        white.data.astype(np.float64),
        dark.data.astype(np.float64),
    ).astype(np.float32)
    if isinstance(raw, MosaicImage):
        return MosaicImage(data=out, pattern=raw.pattern)
    return Hypercube(data=out, wavelengths=raw.wavelengths)


def white_balance_array(raw, white, dark, floor: float = 1e-6):
    den = white - dark
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (raw - dark) / den
    out = np.where(den < floor, 0.0, out)
    return np.maximum(out, 0.0)


def build_synthetic_sensor(
    n: int,
    range_nm: tuple[float, float],
    fwhm: float = 15.0,
    leakage: float = 0.1,
    qe: float = 0.85,
    pattern: MosaicPattern | None = None,
) -> SensorModel:
    """Synthetic stand-in for a factory-calibrated mosaic sensor.

    n^2 ideal Lorentzian bands evenly spaced over the range. Measured curve k
    is its ideal Lorentzian plus ``leakage`` times the mean of the spectrally
    adjacent Lorentzians plus a secondary harmonic lobe centered at
    1.35 * lambda0 with peak amplitude qe * leakage / 2, all sampled within
    the sensor range (out-of-range lobe mass is truncated).
    """
    lo, hi = float(range_nm[0]), float(range_nm[1])
    if n < 2:
        raise ValidationError("synthetic sensor: tile size n must be >= 2")
    if not lo < hi:
        raise ValidationError("synthetic sensor: need lambda_min < lambda_max")
    if not 0 <= leakage < 0.5:
        raise ValidationError("synthetic sensor: leakage must lie in [0, 0.5)")
    if fwhm <= 0:
        raise ValidationError("synthetic sensor: fwhm must be positive")
    if not 0 < qe <= 1:
        raise ValidationError("synthetic sensor: qe must lie in (0, 1]")

    bands = n * n
    centers = np.linspace(lo, hi, bands)
    ideal = tuple(IdealBandSpec(lambda0=c, qe=qe, fwhm=fwhm) for c in centers)

    # sample densely enough for >= 10 samples per FWHM
    step = min(1.0, fwhm / 15.0)
    count = int(np.ceil((hi - lo) / step)) + 1
    grid = np.linspace(lo, hi, count)
    grid_wl = Wavelengths(grid.astype(np.float32))
    grid64 = grid_wl.as_float64()

    pure = np.stack([lorentzian(grid64, b) for b in ideal])
    measured = []
    for k in range(bands):
        resp = pure[k].copy()
        neighbors = [j for j in (k - 1, k + 1) if 0 <= j < bands]
        if neighbors and leakage > 0:
            resp = resp + leakage * np.mean(pure[neighbors], axis=0)
        if leakage > 0:
            lobe = IdealBandSpec(
                lambda0=centers[k] * 1.35, qe=qe * leakage / 2.0, fwhm=fwhm
            )
            resp = resp + lorentzian(grid64, lobe)
        measured.append(ResponseCurve(wavelengths=grid_wl, response=resp))

    return SensorModel(
        pattern=pattern if pattern is not None else MosaicPattern.row_major(n),
        measured=tuple(measured),
        ideal=ideal,
        range_nm=(lo, hi),
    )
