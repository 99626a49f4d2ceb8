import numpy as np
import pytest

import hsmosaic as hm

VISIBLE_RANGE = (470.0, 620.0)


@pytest.fixture
def visible_sensor():
    """4x4 visible-range sensor without parasitic effects."""
    return hm.build_synthetic_sensor(4, VISIBLE_RANGE, fwhm=15.0, leakage=0.0)


@pytest.fixture
def leaky_sensor():
    """4x4 visible-range sensor with pronounced cross-talk and harmonics."""
    return hm.build_synthetic_sensor(4, VISIBLE_RANGE, fwhm=15.0, leakage=0.2)


def smooth_random_cube(
    rng: np.random.Generator,
    height: int,
    width: int,
    n_bands: int = 64,
    lo: float = 450.0,
    hi: float = 640.0,
    coarse: int = 8,
) -> hm.Hypercube:
    """Random cube with band-limited spatial fields and tissue-scale
    (20-50 nm) spectral features; the regime mosaic sensors are built for.
    """
    wl = np.linspace(lo, hi, n_bands)
    t = (wl - lo) / (hi - lo)
    n_basis = 6
    basis = np.stack(
        [
            np.clip(
                0.5 + 0.5 * np.sin(2 * np.pi * (1.0 + 1.4 * j) * t + rng.uniform(0, 2 * np.pi)),
                0.0,
                1.0,
            )
            for j in range(n_basis)
        ]
    )

    def upsample(field: np.ndarray) -> np.ndarray:
        yi = np.linspace(0, coarse - 1, height)
        xi = np.linspace(0, coarse - 1, width)
        rows = np.stack([np.interp(xi, np.arange(coarse), row) for row in field])
        return np.stack([np.interp(yi, np.arange(coarse), col) for col in rows.T]).T

    coefs = np.stack([upsample(rng.random((coarse, coarse))) for _ in range(n_basis)], axis=2)
    coefs /= coefs.sum(axis=2, keepdims=True)
    brightness = 0.3 + 0.6 * upsample(rng.random((coarse, coarse)))
    data = np.einsum("hwj,jd->hwd", coefs, basis) * brightness[:, :, None]
    return hm.Hypercube(
        np.clip(data, 0.01, 1.2).astype(np.float32),
        hm.Wavelengths(wl.astype(np.float32)),
    )


def constant_cube(value: float, height=6, width=5, bands=16, lo=470.0, hi=620.0):
    wl = hm.Wavelengths(np.linspace(lo, hi, bands).astype(np.float32))
    return hm.Hypercube(np.full((height, width, bands), value, np.float32), wl)
