import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

import hsmosaic as hm
from hsmosaic import DegenerateError, ShapeError, ValidationError
from hsmosaic.core import trapezoid_weights

from conftest import constant_cube, smooth_random_cube


def measured_fwhm(spec: hm.IdealBandSpec) -> float:
    """Bisection oracle: width between the two half-maximum wavelengths."""
    half = spec.qe / 2.0

    def f(lam):
        return hm.lorentzian(lam, spec) - half

    left = brentq(f, spec.lambda0 - spec.fwhm, spec.lambda0, xtol=1e-13, rtol=8.9e-16)
    right = brentq(f, spec.lambda0, spec.lambda0 + spec.fwhm, xtol=1e-13, rtol=8.9e-16)
    return right - left


class TestLorentzian:
    def test_peak_equals_qe(self):
        spec = hm.IdealBandSpec(lambda0=545.0, qe=0.8, fwhm=15.0)
        assert hm.lorentzian(545.0, spec) == 0.8

    def test_half_width_matches_parameter(self):
        # half-maximum points are lambda0/(1 -+ sqrt(alpha)); their distance
        # telescopes to exactly the fwhm parameter
        spec = hm.IdealBandSpec(lambda0=545.0, qe=0.8, fwhm=15.0)
        width = measured_fwhm(spec)
        assert abs(width - 15.0) / 15.0 < 1e-9
        alpha = (np.sqrt(545.0**2 + 15.0**2) - 545.0) ** 2 / 15.0**2
        s = np.sqrt(alpha)
        analytic = 545.0 / (1 - s) - 545.0 / (1 + s)
        assert abs(width - analytic) / analytic < 1e-9

    def test_monotone_tails(self):
        spec = hm.IdealBandSpec(lambda0=545.0, qe=0.8, fwhm=15.0)
        left = hm.lorentzian(np.linspace(300.0, 545.0, 200), spec)
        right = hm.lorentzian(np.linspace(545.0, 900.0, 200), spec)
        assert np.all(np.diff(left) > 0)
        assert np.all(np.diff(right) < 0)

    def test_rejects_nonpositive_wavelength(self):
        spec = hm.IdealBandSpec(lambda0=545.0, qe=0.8, fwhm=15.0)
        with pytest.raises(ValidationError):
            hm.lorentzian(0.0, spec)

    @settings(max_examples=30, deadline=None)
    @given(
        lambda0=st.floats(450.0, 650.0),
        fwhm=st.floats(5.0, 40.0),
        qe=st.floats(0.05, 1.0),
    )
    def test_fwhm_property(self, lambda0, fwhm, qe):
        spec = hm.IdealBandSpec(lambda0=lambda0, qe=qe, fwhm=fwhm)
        assert abs(measured_fwhm(spec) - fwhm) / fwhm < 1e-9


class TestSimulate:
    def test_flat_half_is_preserved_exactly(self, visible_sensor):
        cube = constant_cube(0.5, bands=60, lo=450, hi=640)
        inter = hm.simulate_spectral(cube, visible_sensor)
        ideal = hm.simulate_ideal(cube, visible_sensor)
        assert np.array_equal(inter.data, np.full_like(inter.data, 0.5))
        assert np.array_equal(ideal.data, np.full_like(ideal.data, 0.5))

    def test_flat_arbitrary_value_preserved(self, leaky_sensor):
        cube = constant_cube(0.37, bands=48, lo=450, hi=640)
        inter = hm.simulate_spectral(cube, leaky_sensor)
        assert np.array_equal(inter.data, np.full_like(inter.data, np.float32(0.37)))

    def test_delta_response_picks_single_wavelength(self):
        wl = hm.Wavelengths(np.linspace(500, 590, 10).astype(np.float32))
        resp = np.zeros(10)
        resp[4] = 1.0
        curves = tuple(
            hm.ResponseCurve(wavelengths=wl, response=np.roll(resp, k - 4))
            for k in range(4)
        )
        sensor = hm.SensorModel(
            pattern=hm.MosaicPattern.row_major(2),
            measured=curves,
            ideal=tuple(
                hm.IdealBandSpec(lambda0=wl.values[k], qe=0.9, fwhm=10.0)
                for k in range(4)
            ),
            range_nm=(500.0, 590.0),
        )
        rng = np.random.default_rng(5)
        cube = hm.Hypercube(rng.random((3, 4, 10)).astype(np.float32), wl)
        inter = hm.simulate_spectral(cube, sensor)
        for k in range(4):
            assert np.array_equal(inter.data[:, :, k], cube.data[:, :, k])

    def test_hand_computed_weighted_average(self):
        # grid {500,510,520}: trapezoid weights {5,10,5}; band 0 response
        # {.2,.8,.4}; spectrum {1,2,3}
        # -> (5*.2*1 + 10*.8*2 + 5*.4*3)/(5*.2 + 10*.8 + 5*.4) = 23/11
        wl = hm.Wavelengths(np.array([500.0, 510.0, 520.0], np.float32))
        target = hm.ResponseCurve(wavelengths=wl, response=np.array([0.2, 0.8, 0.4]))
        curves = [target]
        for k in range(3):
            curves.append(
                hm.ResponseCurve(
                    wavelengths=wl,
                    response=np.array([0.1 + 0.1 * k, 0.5, 0.3 + 0.05 * k]),
                )
            )
        sensor = hm.SensorModel(
            pattern=hm.MosaicPattern.row_major(2),
            measured=tuple(curves),
            ideal=tuple(
                hm.IdealBandSpec(lambda0=c, qe=0.8, fwhm=8.0)
                for c in (504.0, 509.0, 514.0, 519.0)
            ),
            range_nm=(500.0, 520.0),
        )
        cube = hm.Hypercube(
            np.array([1.0, 2.0, 3.0], np.float32).reshape(1, 1, 3), wl
        )
        out = hm.simulate_spectral(cube, sensor)
        assert out.data[0, 0, 0] == pytest.approx(23.0 / 11.0, rel=1e-6)

    def test_matched_spectrum_beats_flat(self, visible_sensor):
        # a spectrum shaped like one band's response concentrates energy
        # where that band is sensitive
        wl = np.linspace(450, 640, 96)
        spec = visible_sensor.ideal[7]
        shape = hm.lorentzian(wl, spec)
        w = trapezoid_weights(wl)
        flat_value = float((w * shape).sum() / w.sum())
        shaped = hm.Hypercube(
            shape.astype(np.float32).reshape(1, 1, -1),
            hm.Wavelengths(wl.astype(np.float32)),
        )
        flat = hm.Hypercube(
            np.full((1, 1, wl.size), flat_value, np.float32),
            hm.Wavelengths(wl.astype(np.float32)),
        )
        out_shaped = hm.simulate_ideal(shaped, visible_sensor).data[0, 0, 7]
        out_flat = hm.simulate_ideal(flat, visible_sensor).data[0, 0, 7]
        assert out_shaped > out_flat

    def test_empty_ideal_bands_rejected(self, visible_sensor):
        sensor = hm.SensorModel(
            pattern=visible_sensor.pattern,
            measured=visible_sensor.measured,
            ideal=(),
            range_nm=visible_sensor.range_nm,
        )
        cube = constant_cube(0.5, bands=32, lo=450, hi=640)
        with pytest.raises(ValidationError, match="empty ideal band list"):
            hm.simulate_ideal(cube, sensor)

    def test_no_overlap_rejected(self, visible_sensor):
        cube = constant_cube(0.5, bands=8, lo=900, hi=1000)
        with pytest.raises(DegenerateError, match="overlap"):
            hm.simulate_spectral(cube, visible_sensor)

    def test_linearity(self, leaky_sensor):
        rng = np.random.default_rng(11)
        u = smooth_random_cube(rng, 8, 9)
        v = smooth_random_cube(rng, 8, 9)
        a, b = 0.7, -0.3
        mix = hm.Hypercube(
            (a * u.data + b * v.data).astype(np.float32), u.wavelengths
        )
        lhs = hm.simulate_spectral(mix, leaky_sensor).data.astype(np.float64)
        rhs = a * hm.simulate_spectral(u, leaky_sensor).data.astype(
            np.float64
        ) + b * hm.simulate_spectral(v, leaky_sensor).data.astype(np.float64)
        assert lhs == pytest.approx(rhs, rel=1e-6, abs=1e-6)


class TestSubsample:
    def test_tile_reproduces_pattern(self, visible_sensor):
        bands = 16
        data = np.empty((8, 8, bands), np.float32)
        for b in range(bands):
            data[:, :, b] = b / 10.0
        wl = hm.Wavelengths(np.linspace(470, 620, bands).astype(np.float32))
        cube = hm.Hypercube(data, wl)
        mosaic = hm.subsample(cube, visible_sensor.pattern)
        expected_tile = visible_sensor.pattern.band_at / 10.0
        assert mosaic.data[:4, :4] == pytest.approx(expected_tile, abs=1e-7)
        assert np.array_equal(mosaic.data[:4, :4], mosaic.data[4:8, 4:8])

    def test_partial_trailing_tiles(self, visible_sensor):
        bands = 16
        rng = np.random.default_rng(6)
        data = rng.random((5, 5, bands)).astype(np.float32)
        wl = hm.Wavelengths(np.linspace(470, 620, bands).astype(np.float32))
        mosaic = hm.subsample(hm.Hypercube(data, wl), visible_sensor.pattern)
        band_at = visible_sensor.pattern.band_at
        assert mosaic.data[4, 4] == data[4, 4, band_at[0, 0]]
        assert mosaic.data[4, 2] == data[4, 2, band_at[0, 2]]

    def test_band_replication_identity(self, visible_sensor):
        rng = np.random.default_rng(7)
        base = rng.random((9, 6)).astype(np.float32)
        cube = hm.Hypercube(
            np.repeat(base[:, :, None], 16, axis=2),
            hm.Wavelengths(np.linspace(470, 620, 16).astype(np.float32)),
        )
        mosaic = hm.subsample(cube, visible_sensor.pattern)
        assert np.array_equal(mosaic.data, base)

    def test_band_count_must_match(self, visible_sensor):
        cube = constant_cube(0.5, bands=8, lo=470, hi=620)
        with pytest.raises(ShapeError, match="bands"):
            hm.subsample(cube, visible_sensor.pattern)


class TestCalibration:
    def test_identity_for_clean_sensor(self, visible_sensor):
        calib = hm.fit_calibration(visible_sensor, hm.default_fit_grid(visible_sensor))
        assert np.abs(calib.entries - np.eye(16)).max() < 1e-10
        assert calib.residual_rms < 1e-10

    def test_recovers_inverse_of_stochastic_mixing(self):
        # mixing that redistributes normalized response mass (rows sum to 1)
        # over equal-area bands must be undone exactly: C == P^-1
        grid = hm.Wavelengths(np.linspace(450.0, 700.0, 501).astype(np.float32))
        g = grid.as_float64()
        w = trapezoid_weights(g)
        centers = np.linspace(520.0, 600.0, 4)
        base = [hm.IdealBandSpec(lambda0=c, qe=0.5, fwhm=12.0) for c in centers]
        areas = np.array([(w * hm.lorentzian(g, b)).sum() for b in base])
        qes = 0.5 * areas.min() / areas  # equalize truncated band areas
        ideal = tuple(
            hm.IdealBandSpec(lambda0=c, qe=q, fwhm=12.0) for c, q in zip(centers, qes)
        )
        shapes = np.stack([hm.lorentzian(g, b) for b in ideal])

        rng = np.random.default_rng(3)
        P = np.eye(4) + rng.uniform(0.02, 0.2, (4, 4))
        P /= P.sum(axis=1, keepdims=True)
        measured = tuple(
            hm.ResponseCurve(wavelengths=grid, response=row @ shapes) for row in P
        )
        sensor = hm.SensorModel(
            pattern=hm.MosaicPattern.row_major(2),
            measured=measured,
            ideal=ideal,
            range_nm=(450.0, 700.0),
        )
        calib = hm.fit_calibration(sensor, grid)
        expected = np.linalg.inv(P)
        assert np.abs(calib.entries - expected).max() < 1e-8

    def test_duplicate_curves_rejected(self, visible_sensor):
        measured = list(visible_sensor.measured)
        measured[1] = measured[0]
        sensor = hm.SensorModel(
            pattern=visible_sensor.pattern,
            measured=tuple(measured),
            ideal=visible_sensor.ideal,
            range_nm=visible_sensor.range_nm,
        )
        with pytest.raises(DegenerateError, match="degenerate sensor responses"):
            hm.fit_calibration(sensor, hm.default_fit_grid(sensor))

    def test_residual_shrinks_with_leakage(self):
        residuals = []
        for leakage in (0.3, 0.2, 0.1, 0.05, 0.0):
            sensor = hm.build_synthetic_sensor(4, (470.0, 620.0), 15.0, leakage)
            calib = hm.fit_calibration(sensor, hm.default_fit_grid(sensor))
            residuals.append(calib.residual_rms)
        assert all(b <= a + 1e-12 for a, b in zip(residuals, residuals[1:]))

    def test_off_diagonal_mass_grows_with_leakage(self):
        def offdiag(leakage):
            sensor = hm.build_synthetic_sensor(4, (470.0, 620.0), 15.0, leakage)
            calib = hm.fit_calibration(sensor, hm.default_fit_grid(sensor))
            e = calib.entries.copy()
            np.fill_diagonal(e, 0.0)
            return float(np.sqrt((e**2).sum()))

        assert offdiag(0.2) > offdiag(0.05)


class TestWhiteBalance:
    def _triple(self, raw_v, white_v, dark_v):
        mk = lambda v: constant_cube(v, height=3, width=3, bands=4, lo=500, hi=560)
        return mk(raw_v), mk(white_v), mk(dark_v)

    def test_raw_equals_white(self):
        raw, white, dark = self._triple(0.9, 0.9, 0.1)
        out = hm.white_balance(raw, white, dark)
        assert np.array_equal(out.data, np.ones_like(out.data))

    def test_raw_equals_dark(self):
        raw, white, dark = self._triple(0.1, 0.9, 0.1)
        out = hm.white_balance(raw, white, dark)
        assert np.array_equal(out.data, np.zeros_like(out.data))

    def test_quotient_value(self):
        raw, white, dark = self._triple(0.6, 0.9, 0.1)
        out = hm.white_balance(raw, white, dark)
        assert out.data[0, 0, 0] == pytest.approx(0.625, rel=1e-6)

    def test_tiny_denominator_maps_to_zero(self):
        raw, white, dark = self._triple(0.6, 0.1 + 5e-7, 0.1)
        out = hm.white_balance(raw, white, dark)
        assert np.array_equal(out.data, np.zeros_like(out.data))

    def test_shape_mismatch(self):
        raw, white, dark = self._triple(0.6, 0.9, 0.1)
        small = constant_cube(0.9, height=2, width=3, bands=4, lo=500, hi=560)
        with pytest.raises(ShapeError):
            hm.white_balance(raw, small, dark)

    def test_mosaic_inputs(self):
        pat = hm.MosaicPattern.row_major(2)
        mk = lambda v: hm.MosaicImage(np.full((4, 4), v, np.float32), pat)
        out = hm.white_balance(mk(0.6), mk(0.9), mk(0.1))
        assert isinstance(out, hm.MosaicImage)
        assert out.data[0, 0] == pytest.approx(0.625, rel=1e-6)


class TestSyntheticSensor:
    def test_paper_geometry(self):
        sensor = hm.build_synthetic_sensor(4, (470.0, 620.0), fwhm=15.0, leakage=0.1)
        centers = [b.lambda0 for b in sensor.ideal]
        assert len(centers) == 16
        assert centers[0] == 470.0 and centers[-1] == 620.0
        assert np.diff(centers) == pytest.approx(np.full(15, 10.0))

    def test_zero_leakage_curves_are_pure(self, visible_sensor):
        grid = visible_sensor.measured[0].wavelengths.as_float64()
        for k, curve in enumerate(visible_sensor.measured):
            pure = hm.lorentzian(grid, visible_sensor.ideal[k])
            assert np.array_equal(curve.response, pure)

    def test_parameter_domain(self):
        with pytest.raises(ValidationError):
            hm.build_synthetic_sensor(1, (470.0, 620.0))
        with pytest.raises(ValidationError):
            hm.build_synthetic_sensor(4, (620.0, 470.0))
        with pytest.raises(ValidationError):
            hm.build_synthetic_sensor(4, (470.0, 620.0), leakage=0.5)
