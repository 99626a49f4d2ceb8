"""Bit-exact file I/O for cubes, mosaics, sensor models and calibration matrices.

Exchange format: a UTF-8 text header of ``field:value`` lines terminated by a
blank line, followed by a little-endian float payload. Cube payloads are
float32 laid out row-major by (y, x, band); calibration payloads are float64
row-major. Mosaic files carry the pattern in the header and no wavelength
axis. Headers are written with shortest round-trip float formatting, so
writing the same object twice yields byte-identical files.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .core import (
    CalibrationMatrix,
    Hypercube,
    IdealBandSpec,
    MosaicImage,
    MosaicPattern,
    ResponseCurve,
    SensorModel,
    Wavelengths,
)
from .errors import FormatError

MAGIC_CUBE = "HSICUBE1"
MAGIC_MOSAIC = "HSIMOSA1"
MAGIC_SENSOR = "HSISENS1"
MAGIC_CALIB = "HSICALB1"


def _fmt_f32(x: float) -> str:
    # shortest decimal string that round-trips through float32
    return repr(float(np.float32(x)))


def _fmt_f64(x: float) -> str:
    return repr(float(x))


def _parse_header(blob: bytes, path: Path) -> tuple[dict[str, str], bytes]:
    """Split leading field:value lines from the binary payload."""
    sep = blob.find(b"\n\n")
    if sep < 0:
        raise FormatError(f"{path}: malformed header (no blank line)", field="header")
    try:
        text = blob[:sep].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: malformed header (not UTF-8)", field="header") from exc
    fields: dict[str, str] = {}
    for line in text.split("\n"):
        key, colon, value = line.partition(":")
        if not colon:
            raise FormatError(f"{path}: malformed header line {line!r}", field="header")
        fields[key] = value
    return fields, blob[sep + 2 :]


def _require(fields: dict[str, str], name: str, path: Path) -> str:
    if name not in fields:
        raise FormatError(f"{path}: missing header field '{name}'", field=name)
    return fields[name]


def _parse_u32(fields: dict[str, str], name: str, path: Path) -> int:
    raw = _require(fields, name, path)
    try:
        value = int(raw)
    except ValueError as exc:
        raise FormatError(f"{path}: field '{name}' is not an integer: {raw!r}", field=name) from exc
    if not (0 <= value <= 0xFFFFFFFF):
        raise FormatError(f"{path}: field '{name}' out of u32 range: {value}", field=name)
    return value


def _parse_floats(raw: str, name: str, path: Path) -> np.ndarray:
    try:
        return np.array([float(v) for v in raw.split(",")], dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"{path}: field '{name}' has a non-numeric entry", field=name) from exc


def _parse_pattern(raw: str, path: Path) -> MosaicPattern:
    head, semi, rest = raw.partition(";")
    if not semi:
        raise FormatError(f"{path}: pattern field needs '<n>;<indices>'", field="pattern")
    try:
        n = int(head)
        indices = np.array([int(v) for v in rest.split(",")], dtype=np.int64)
    except ValueError as exc:
        raise FormatError(f"{path}: pattern field is not numeric", field="pattern") from exc
    if indices.size != n * n:
        raise FormatError(
            f"{path}: pattern lists {indices.size} indices, expected {n * n}",
            field="pattern",
        )
    return MosaicPattern(n=n, band_at=indices.reshape(n, n))


def _pattern_str(pattern: MosaicPattern) -> str:
    return f"{pattern.n};" + ",".join(str(i) for i in pattern.band_at.ravel())


def _check_magic(fields: dict[str, str], expected: str, path: Path) -> None:
    magic = _require(fields, "magic", path)
    if magic != expected:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {expected!r}", field="magic")


# ---------------------------------------------------------------------------
# cubes
# ---------------------------------------------------------------------------

def write_cube(cube: Hypercube, path: str | Path) -> None:
    """Write a cube; identical cubes produce byte-identical files."""
    path = Path(path)
    if not np.all(np.isfinite(cube.data)):
        raise FormatError(f"{path}: non-finite value in cube data", field="data")
    header = (
        f"magic:{MAGIC_CUBE}\n"
        f"width:{cube.width}\n"
        f"height:{cube.height}\n"
        f"bands:{cube.bands}\n"
        "wavelengths:" + ",".join(_fmt_f32(v) for v in cube.wavelengths.values) + "\n"
        "\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8"))
        fh.write(np.ascontiguousarray(cube.data, dtype="<f4").tobytes())


def read_cube(path: str | Path) -> Hypercube:
    """Read a cube written by :func:`write_cube`; round-trips bit-exactly."""
    path = Path(path)
    blob = path.read_bytes()
    fields, payload = _parse_header(blob, path)
    _check_magic(fields, MAGIC_CUBE, path)
    width = _parse_u32(fields, "width", path)
    height = _parse_u32(fields, "height", path)
    bands = _parse_u32(fields, "bands", path)
    wl_raw = _parse_floats(_require(fields, "wavelengths", path), "wavelengths", path)
    if wl_raw.size != bands:
        raise FormatError(
            f"{path}: wavelength count mismatch (bands={bands}, "
            f"wavelengths={wl_raw.size})",
            field="wavelengths",
        )
    expected = width * height * bands * 4
    if len(payload) != expected:
        raise FormatError(
            f"{path}: size mismatch (payload {len(payload)} bytes, "
            f"expected {expected})",
            field="payload",
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(height, width, bands)
    return Hypercube(data=data, wavelengths=Wavelengths(wl_raw.astype(np.float32)))


# ---------------------------------------------------------------------------
# mosaics
# ---------------------------------------------------------------------------

def write_mosaic(mosaic: MosaicImage, path: str | Path) -> None:
    path = Path(path)
    header = (
        f"magic:{MAGIC_MOSAIC}\n"
        f"width:{mosaic.width}\n"
        f"height:{mosaic.height}\n"
        "bands:1\n"
        f"pattern:{_pattern_str(mosaic.pattern)}\n"
        "\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8"))
        fh.write(np.ascontiguousarray(mosaic.data, dtype="<f4").tobytes())


def read_mosaic(path: str | Path) -> MosaicImage:
    path = Path(path)
    blob = path.read_bytes()
    fields, payload = _parse_header(blob, path)
    _check_magic(fields, MAGIC_MOSAIC, path)
    width = _parse_u32(fields, "width", path)
    height = _parse_u32(fields, "height", path)
    bands = _parse_u32(fields, "bands", path)
    if bands != 1:
        raise FormatError(f"{path}: mosaic files must declare bands:1", field="bands")
    pattern = _parse_pattern(_require(fields, "pattern", path), path)
    expected = width * height * 4
    if len(payload) != expected:
        raise FormatError(
            f"{path}: size mismatch (payload {len(payload)} bytes, "
            f"expected {expected})",
            field="payload",
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(height, width)
    return MosaicImage(data=data, pattern=pattern)


# ---------------------------------------------------------------------------
# sensor models
# ---------------------------------------------------------------------------

def write_sensor(sensor: SensorModel, path: str | Path) -> None:
    path = Path(path)
    out = io.StringIO()
    out.write(f"magic:{MAGIC_SENSOR}\n")
    out.write(f"pattern:{_pattern_str(sensor.pattern)}\n")
    out.write(f"range:{_fmt_f64(sensor.range_nm[0])},{_fmt_f64(sensor.range_nm[1])}\n")
    out.write(f"measured:{sensor.n_s}\n")
    for k, curve in enumerate(sensor.measured):
        wl = ",".join(_fmt_f32(v) for v in curve.wavelengths.values)
        resp = ",".join(_fmt_f64(v) for v in curve.response)
        out.write(f"curve:{k};{wl};{resp}\n")
    out.write(f"ideal:{sensor.n_i}\n")
    for spec in sensor.ideal:
        out.write(
            f"band:{_fmt_f64(spec.lambda0)},{_fmt_f64(spec.qe)},{_fmt_f64(spec.fwhm)}\n"
        )
    path.write_bytes(out.getvalue().encode("utf-8"))


def read_sensor(path: str | Path) -> SensorModel:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    fields: dict[str, str] = {}
    curves_raw: list[str] = []
    bands_raw: list[str] = []
    for line in lines:
        if not line:
            continue
        key, colon, value = line.partition(":")
        if not colon:
            raise FormatError(f"{path}: malformed line {line!r}", field="header")
        if key == "curve":
            curves_raw.append(value)
        elif key == "band":
            bands_raw.append(value)
        else:
            fields[key] = value
    _check_magic(fields, MAGIC_SENSOR, path)
    pattern = _parse_pattern(_require(fields, "pattern", path), path)
    range_vals = _parse_floats(_require(fields, "range", path), "range", path)
    if range_vals.size != 2:
        raise FormatError(f"{path}: range needs two values", field="range")
    n_meas = _parse_u32(fields, "measured", path)
    n_ideal = _parse_u32(fields, "ideal", path)
    if len(curves_raw) != n_meas:
        raise FormatError(
            f"{path}: declared {n_meas} measured curves, found {len(curves_raw)}",
            field="measured",
        )
    if len(bands_raw) != n_ideal:
        raise FormatError(
            f"{path}: declared {n_ideal} ideal bands, found {len(bands_raw)}",
            field="ideal",
        )

    measured: list[ResponseCurve | None] = [None] * n_meas
    for raw in curves_raw:
        parts = raw.split(";")
        if len(parts) != 3:
            raise FormatError(
                f"{path}: curve line needs '<idx>;<wavelengths>;<responses>'",
                field="curve",
            )
        try:
            idx = int(parts[0])
        except ValueError as exc:
            raise FormatError(f"{path}: curve index not an integer", field="curve") from exc
        if not (0 <= idx < n_meas) or measured[idx] is not None:
            raise FormatError(f"{path}: bad or duplicate curve index {idx}", field="curve")
        wl = _parse_floats(parts[1], "curve", path)
        resp = _parse_floats(parts[2], "curve", path)
        measured[idx] = ResponseCurve(
            wavelengths=Wavelengths(wl.astype(np.float32)),
            response=resp,
        )
    ideal = []
    for raw in bands_raw:
        vals = _parse_floats(raw, "band", path)
        if vals.size != 3:
            raise FormatError(f"{path}: band line needs lambda0,qe,fwhm", field="band")
        ideal.append(IdealBandSpec(lambda0=vals[0], qe=vals[1], fwhm=vals[2]))

    return SensorModel(
        pattern=pattern,
        measured=tuple(measured),  # type: ignore[arg-type]
        ideal=tuple(ideal),
        range_nm=(float(range_vals[0]), float(range_vals[1])),
    )


# ---------------------------------------------------------------------------
# calibration matrices
# ---------------------------------------------------------------------------

def write_calibration(calib: CalibrationMatrix, path: str | Path) -> None:
    path = Path(path)
    header = (
        f"magic:{MAGIC_CALIB}\n"
        f"rows:{calib.rows}\n"
        f"cols:{calib.cols}\n"
        f"residual_rms:{_fmt_f64(calib.residual_rms)}\n"
        "\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8"))
        fh.write(np.ascontiguousarray(calib.entries, dtype="<f8").tobytes())


def read_calibration(path: str | Path) -> CalibrationMatrix:
    path = Path(path)
    blob = path.read_bytes()
    fields, payload = _parse_header(blob, path)
    _check_magic(fields, MAGIC_CALIB, path)
    rows = _parse_u32(fields, "rows", path)
    cols = _parse_u32(fields, "cols", path)
    try:
        residual = float(_require(fields, "residual_rms", path))
    except ValueError as exc:
        raise FormatError(f"{path}: residual_rms not numeric", field="residual_rms") from exc
    expected = rows * cols * 8
    if len(payload) != expected:
        raise FormatError(
            f"{path}: size mismatch (payload {len(payload)} bytes, "
            f"expected {expected})",
            field="payload",
        )
    entries = np.frombuffer(payload, dtype="<f8").reshape(rows, cols)
    return CalibrationMatrix(entries=entries, residual_rms=residual)
