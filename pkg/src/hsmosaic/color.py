"""Colorimetry: corrected cubes to sRGB images and oxygenation maps.

CIE 1931 2-degree observer and D65 tables ship with the package at 5 nm and
are linearly interpolated to cube wavelengths. XYZ values are normalized so
a unit-reflectance cube yields Y = 1; the full cube-to-sRGB path then
rescales channels against the band-limited white so a perfect reflector
renders neutral regardless of the cube's spectral coverage.

The oxygenation estimate is a Beer-Lambert least-squares unmixing of
per-pixel absorbance against HbO2/Hb extinction spectra plus a free offset
absorbing any flat scattering baseline. It is a documented stand-in for a
calibrated perfusion model, not a clinical oximeter.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .core import Hypercube, Wavelengths, trapezoid_weights
from .errors import DegenerateError, ValidationError

# IEC 61966-2-1 sRGB matrix, D65 reference white
XYZ_TO_SRGB = np.array(
    [
        [3.2406, -1.5372, -0.4986],
        [-0.9689, 1.8758, 0.0415],
        [0.0557, -0.2040, 1.0570],
    ]
)
SRGB_TO_XYZ = np.linalg.inv(XYZ_TO_SRGB)

GAMMA_LINEAR_CUTOFF = 0.0031308
GAMMA_LINEAR_SLOPE = 12.92

ABSORBANCE_FLOOR = 1e-4  # reflectance below this is clipped before the log


@dataclass(frozen=True)
class RGBImage:
    """Gamma-encoded RGB triples in [0, 1], row-major."""

    data: NDArray[np.float32]  # shape (height, width, 3)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValidationError("rgb image: data must have shape (height, width, 3)")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("rgb image: non-finite value")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValidationError("rgb image: channels must lie in [0, 1]")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class OxyMap:
    """Per-pixel oxygenation saturation in [0, 1] with a validity mask."""

    so2: NDArray[np.float32]  # shape (height, width)
    valid: NDArray[np.bool_]

    def __post_init__(self):
        so2 = np.ascontiguousarray(self.so2, dtype=np.float32)
        valid = np.ascontiguousarray(self.valid, dtype=bool)
        if so2.ndim != 2 or valid.shape != so2.shape:
            raise ValidationError("oxy map: so2 and valid must share a 2-D shape")
        vals = so2[valid]
        if vals.size and (vals.min() < 0.0 or vals.max() > 1.0):
            raise ValidationError("oxy map: valid pixels must lie in [0, 1]")
        so2.flags.writeable = False
        valid.flags.writeable = False
        object.__setattr__(self, "so2", so2)
        object.__setattr__(self, "valid", valid)


def _load_table(name: str) -> np.ndarray:
    with resources.files("hsmosaic.data").joinpath(name).open("rb") as fh:
        return np.loadtxt(fh, delimiter=",", comments="#")


@lru_cache(maxsize=1)
def _cmf_d65() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(wavelengths, cmf[3, n], d65[n]) from the shipped 5 nm tables."""
    cmf = _load_table("cie1931_2deg_5nm.csv")
    d65 = _load_table("illuminant_d65_5nm.csv")
    if not np.array_equal(cmf[:, 0], d65[:, 0]):
        raise DegenerateError("colorimetry tables disagree on wavelength grid")
    return cmf[:, 0], cmf[:, 1:4].T, d65[:, 1]


@lru_cache(maxsize=1)
def hemoglobin_extinction() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(wavelengths, eps_hbo2, eps_hb) from the shipped 2 nm table."""
    table = _load_table("hemoglobin_extinction_2nm.csv")
    return table[:, 0], table[:, 1], table[:, 2]


def _xyz_weights(wavelengths: Wavelengths) -> tuple[np.ndarray, float]:
    """Quadrature weight matrix (bands, 3) and the Y normalization factor."""
    table_wl, cmf, d65 = _cmf_d65()
    wl = wavelengths.as_float64()
    if wl[0] < table_wl[0] or wl[-1] > table_wl[-1]:
        raise ValidationError(
            f"colorimetry: cube wavelengths [{wl[0]:g}, {wl[-1]:g}] nm fall "
            f"outside the CMF table [{table_wl[0]:g}, {table_wl[-1]:g}] nm"
        )
    w = trapezoid_weights(wl)
    cmf_i = np.stack([np.interp(wl, table_wl, cmf[i]) for i in range(3)], axis=1)
    d65_i = np.interp(wl, table_wl, d65)
    weights = w[:, None] * cmf_i * d65_i[:, None]
    norm = weights[:, 1].sum()
    if norm <= 0:
        raise DegenerateError("colorimetry: zero luminance response on this grid")
    return weights, 1.0 / norm


def cube_to_xyz(cube: Hypercube) -> NDArray[np.float64]:
    """Project a reflectance cube to CIE XYZ under D65.

    Trapezoidal quadrature over the cube's wavelength grid, normalized so a
    unit-reflectance cube yields Y = 1.
    """
    weights, k = _xyz_weights(cube.wavelengths)
    flat = cube.data.reshape(-1, cube.bands).astype(np.float64)
    xyz = (flat @ weights) * k
    return xyz.reshape(cube.height, cube.width, 3)


def white_point_xyz(wavelengths: Wavelengths) -> NDArray[np.float64]:
    """XYZ of a perfect reflector sampled on the given grid."""
    weights, k = _xyz_weights(wavelengths)
    return weights.sum(axis=0) * k


@lru_cache(maxsize=1)
def d65_white_xyz() -> tuple[float, float, float]:
    """Table-true D65 white point (full 380-780 nm coverage)."""
    table_wl, _, _ = _cmf_d65()
    wp = white_point_xyz(Wavelengths(table_wl.astype(np.float32)))
    return float(wp[0]), float(wp[1]), float(wp[2])


def srgb_gamma(linear: np.ndarray) -> np.ndarray:
    """Piecewise sRGB transfer function on nonnegative linear values."""
    lin = np.asarray(linear, dtype=np.float64)
    hi = lin > GAMMA_LINEAR_CUTOFF
    out = lin * GAMMA_LINEAR_SLOPE
    out[hi] = 1.055 * np.power(lin[hi], 1.0 / 2.4) - 0.055
    return out


def srgb_gamma_inverse(encoded: np.ndarray) -> np.ndarray:
    enc = np.asarray(encoded, dtype=np.float64)
    hi = enc > GAMMA_LINEAR_CUTOFF * GAMMA_LINEAR_SLOPE
    out = enc / GAMMA_LINEAR_SLOPE
    out[hi] = np.power((enc[hi] + 0.055) / 1.055, 2.4)
    return out


def xyz_to_srgb(xyz: np.ndarray) -> RGBImage:
    """Standard D65-referenced sRGB matrix plus gamma; the result is clamped
    to [0, 1] after encoding."""
    arr = np.asarray(xyz, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValidationError("xyz_to_srgb: expected an (height, width, 3) array")
    linear = arr.reshape(-1, 3) @ XYZ_TO_SRGB.T
    encoded = np.where(
        linear > GAMMA_LINEAR_CUTOFF,
        1.055 * np.power(np.maximum(linear, GAMMA_LINEAR_CUTOFF), 1.0 / 2.4) - 0.055,
        linear * GAMMA_LINEAR_SLOPE,
    )
    clamped = np.clip(encoded, 0.0, 1.0).astype(np.float32)
    return RGBImage(data=clamped.reshape(arr.shape))


def cube_to_srgb(cube: Hypercube) -> RGBImage:
    """Full reconstruction path: XYZ projection, band-limited white rescale,
    sRGB matrix and gamma.

    Band-limited integration shifts the apparent white away from D65; each
    XYZ channel is rescaled so a perfect reflector maps to the D65 white
    point and renders as neutral (1, 1, 1).
    """
    xyz = cube_to_xyz(cube)
    wp = white_point_xyz(cube.wavelengths)
    target = np.array(d65_white_xyz())
    if np.any(wp <= 0):
        raise DegenerateError("colorimetry: degenerate white point on this grid")
    return xyz_to_srgb(xyz * (target / wp))


def oxygenation_map(
    cube: Hypercube,
    extinction: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
) -> OxyMap:
    """Estimate oxygenation saturation by Beer-Lambert unmixing.

    Per pixel: absorbance -log(max(reflectance, 1e-4)) is least-squares
    decomposed into HbO2, Hb and a constant offset; SO2 is the HbO2 share
    of total hemoglobin, clamped to [0, 1]. Pixels whose hemoglobin sum is
    not positive (beyond numerical noise of the solve) are marked invalid.
    """
    ext_wl, ext_hbo2, ext_hb = extinction if extinction is not None else hemoglobin_extinction()
    wl = cube.wavelengths.as_float64()
    usable = (wl >= ext_wl[0]) & (wl <= ext_wl[-1])
    if int(usable.sum()) < 3:
        raise DegenerateError(
            "oxygenation: need at least 3 bands inside the extinction table "
            f"range [{ext_wl[0]:g}, {ext_wl[-1]:g}] nm"
        )
    design = np.stack(
        [
            np.interp(wl[usable], ext_wl, ext_hbo2),
            np.interp(wl[usable], ext_wl, ext_hb),
            np.ones(int(usable.sum())),
        ],
        axis=1,
    )
    reflect = cube.data.reshape(-1, cube.bands)[:, usable].astype(np.float64)
    absorb = -np.log(np.maximum(reflect, ABSORBANCE_FLOOR))
    coeffs = absorb @ np.linalg.pinv(design).T  # (pixels, 3)
    c_hbo2, c_hb, offset = coeffs[:, 0], coeffs[:, 1], coeffs[:, 2]
    total = c_hbo2 + c_hb
    noise = 1e-9 * np.maximum(1.0, np.abs(coeffs).sum(axis=1))
    valid = total > noise
    so2 = np.zeros_like(total)
    np.divide(c_hbo2, total, out=so2, where=valid)
    so2 = np.clip(so2, 0.0, 1.0)
    so2[~valid] = 0.0
    shape = (cube.height, cube.width)
    return OxyMap(so2=so2.astype(np.float32).reshape(shape), valid=valid.reshape(shape))


def save_rgb_png(rgb: RGBImage, path: str | Path) -> None:
    """8-bit PNG with values round(255 * v); deterministic bytes."""
    from PIL import Image

    quantized = np.round(rgb.data.astype(np.float64) * 255.0).astype(np.uint8)
    Image.fromarray(quantized, mode="RGB").save(Path(path), format="PNG")


def save_oxy_png(oxy: OxyMap, path: str | Path) -> None:
    """Grayscale PNG of SO2, invalid pixels rendered black."""
    from PIL import Image

    quantized = np.round(oxy.so2.astype(np.float64) * 255.0).astype(np.uint8)
    quantized[~oxy.valid] = 0
    Image.fromarray(quantized, mode="L").save(Path(path), format="PNG")


def rgb_to_cube(rgb: RGBImage) -> Hypercube:
    """Pack an RGB image as a 3-band exchange cube (B, G, R ascending by
    nominal primary wavelength) so raw float images can cross components."""
    data = rgb.data[:, :, ::-1]
    return Hypercube(
        data=np.ascontiguousarray(data),
        wavelengths=Wavelengths(np.array([465.0, 549.0, 611.0], dtype=np.float32)),
    )
