"""Snapshot mosaic hyperspectral toolkit.

Simulates mosaic sensor acquisition from high-resolution cubes, recovers
and spectrally corrects cubes from mosaics, renders sRGB and oxygenation
images, and scores reconstructions with L1/PSNR/SSIM under a real-time
latency budget.
"""

from .core import (
    CalibrationMatrix,
    Hypercube,
    IdealBandSpec,
    MosaicImage,
    MosaicPattern,
    ResponseCurve,
    SensorModel,
    Wavelengths,
    resample_curve,
    trapezoid_weights,
)
from .errors import (
    DegenerateError,
    FormatError,
    HsiError,
    MetricError,
    ShapeError,
    ValidationError,
)
from .fileio import (
    read_calibration,
    read_cube,
    read_mosaic,
    read_sensor,
    write_calibration,
    write_cube,
    write_mosaic,
    write_sensor,
)
from .sensor import (
    build_synthetic_sensor,
    default_fit_grid,
    fit_calibration,
    ideal_axis,
    intermediate_axis,
    lorentzian,
    simulate_ideal,
    simulate_spectral,
    subsample,
    white_balance,
)
from .demosaic import (
    apply_correction,
    bilinear_demosaic,
    demosaic_pipeline,
    split_bands,
)
from .color import (
    OxyMap,
    RGBImage,
    cube_to_srgb,
    cube_to_xyz,
    oxygenation_map,
    xyz_to_srgb,
)
from .metrics import (
    MetricRecord,
    QualityReport,
    aggregate,
    l1_error,
    psnr,
    ssim,
)

__version__ = "0.1.0"
