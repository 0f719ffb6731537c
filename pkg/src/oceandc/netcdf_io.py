"""HyperCube ⇄ NetCDF classic 64-bit-offset (CDF-2) files with CF-1.8 metadata.

Layout: dimensions time, band, y, x; coordinate variables of the same names;
a scalar ``crs`` grid-mapping variable; a char ``scene_id`` label variable
(time × scene_strlen); one float variable ``oceandc`` (time × band × y × x)
with NaN as _FillValue. All header integers and data
are big-endian; variable offsets are 8 bytes wide.
"""

import logging
import struct
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from . import config
from .bands import BAND_COUNT, BandId
from .errors import NotNetcdf, ParseError, SchemaError, TooLarge, UnsupportedCrs, WriteError
from .geodesy import epsg_lookup
from .model import GridSpec, HyperCube

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MAGIC = b"CDF"
VERSION_CLASSIC = 1
VERSION_64BIT_OFFSET = 2

NC_DIMENSION = 0x0A
NC_VARIABLE = 0x0B
NC_ATTRIBUTE = 0x0C

NC_BYTE, NC_CHAR, NC_SHORT, NC_INT, NC_FLOAT, NC_DOUBLE = 1, 2, 3, 4, 5, 6
_NC_DTYPES = {
    NC_BYTE: np.dtype(">i1"),
    NC_CHAR: np.dtype("S1"),
    NC_SHORT: np.dtype(">i2"),
    NC_INT: np.dtype(">i4"),
    NC_FLOAT: np.dtype(">f4"),
    NC_DOUBLE: np.dtype(">f8"),
}

# Largest vsize a classic-format variable may declare
MAX_VSIZE = 2 ** 32 - 4

DATA_VARIABLE = "oceandc"
TIME_UNITS = "seconds since 1970-01-01T00:00:00Z"
EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
REQUIRED_VARIABLES = ("time", "band", "y", "x", DATA_VARIABLE)


def _pad4(n: int) -> int:
    return (4 - n % 4) % 4


# ================================
# 🔹 WRITER
# ================================

@dataclass
class _Variable:
    name: str
    dims: Tuple[int, ...]
    nc_type: int
    data: np.ndarray
    attrs: Dict[str, Any] = field(default_factory=dict)

    @property
    def nbytes(self) -> int:
        return int(self.data.size) * _NC_DTYPES[self.nc_type].itemsize

    @property
    def vsize(self) -> int:
        return self.nbytes + _pad4(self.nbytes)


def _encode_name(name: str) -> bytes:
    raw = name.encode("utf-8")
    return struct.pack(">i", len(raw)) + raw + b"\x00" * _pad4(len(raw))


def _encode_attr_value(value: Any) -> Tuple[int, int, bytes]:
    if isinstance(value, str):
        raw = value.encode("utf-8")
        return NC_CHAR, len(raw), raw
    array = np.atleast_1d(np.asarray(value))
    if array.dtype.kind in "iu" or array.dtype == bool:
        return NC_INT, array.size, array.astype(">i4").tobytes()
    if array.dtype == np.float32:
        return NC_FLOAT, array.size, array.astype(">f4").tobytes()
    return NC_DOUBLE, array.size, array.astype(">f8").tobytes()


def _encode_attrs(attrs: Dict[str, Any]) -> bytes:
    if not attrs:
        return struct.pack(">ii", 0, 0)
    out = [struct.pack(">ii", NC_ATTRIBUTE, len(attrs))]
    for name, value in attrs.items():
        nc_type, count, raw = _encode_attr_value(value)
        out.append(_encode_name(name) + struct.pack(">ii", nc_type, count) + raw + b"\x00" * _pad4(len(raw)))
    return b"".join(out)


def _encode_header(version: int, dims: List[Tuple[str, int]], gatts: Dict[str, Any],
                   variables: List[_Variable], begins: List[int]) -> bytes:
    out = [MAGIC + bytes([version]), struct.pack(">i", 0)]
    out.append(struct.pack(">ii", NC_DIMENSION, len(dims)))
    for name, length in dims:
        out.append(_encode_name(name) + struct.pack(">i", length))
    out.append(_encode_attrs(gatts))
    out.append(struct.pack(">ii", NC_VARIABLE, len(variables)))
    offset_code = ">q" if version == VERSION_64BIT_OFFSET else ">i"
    for var, begin in zip(variables, begins):
        out.append(_encode_name(var.name))
        out.append(struct.pack(">i", len(var.dims)) + b"".join(struct.pack(">i", d) for d in var.dims))
        out.append(_encode_attrs(var.attrs))
        out.append(struct.pack(">ii", var.nc_type, var.vsize) + struct.pack(offset_code, begin))
    return b"".join(out)


def _crs_attributes(grid: GridSpec) -> Dict[str, Any]:
    attrs: Dict[str, Any] = {"epsg": np.int32(grid.epsg), "epsg_code": f"EPSG:{grid.epsg}"}
    try:
        crs = epsg_lookup(grid.epsg)
    except UnsupportedCrs:
        crs = None
    if crs is not None and crs.is_geographic:
        attrs["grid_mapping_name"] = "latitude_longitude"
    elif crs is not None:
        attrs.update({
            "grid_mapping_name": "transverse_mercator",
            "longitude_of_central_meridian": crs.lon0,
            "latitude_of_projection_origin": 0.0,
            "scale_factor_at_central_meridian": crs.k0,
            "false_easting": crs.false_easting,
            "false_northing": crs.false_northing,
        })
    if crs is not None:
        attrs["semi_major_axis"] = crs.a
        attrs["inverse_flattening"] = 1.0 / crs.f
    # GDAL-style affine transform; repr() keeps the doubles exact
    transform = (grid.origin_x, grid.pixel_size_x, 0.0, grid.origin_y, 0.0, -grid.pixel_size_y)
    attrs["GeoTransform"] = " ".join(repr(float(v)) for v in transform)
    return attrs


def _seconds_since_epoch(moment: datetime) -> float:
    return (moment - EPOCH) / timedelta(seconds=1)


def _label_array(labels: Tuple[str, ...]) -> np.ndarray:
    """Fixed-width char matrix (one NUL-padded row per label)."""
    raw = [label.encode("utf-8") for label in labels]
    width = max([1] + [len(r) for r in raw])
    return np.frombuffer(b"".join(r.ljust(width, b"\x00") for r in raw), dtype="S1").reshape(len(raw), width)


def write_netcdf(cube: HyperCube, path: PathLike, history: Optional[str] = None) -> None:
    """Serialize a HyperCube to a CDF-2 file."""
    grid = cube.grid
    geographic = 4000 <= grid.epsg < 5000
    units = "degrees" if geographic else "m"
    t, _, h, w = cube.shape

    if history is None:
        history = config.HISTORY or f"{datetime.now(timezone.utc).isoformat(timespec='seconds')} oceandc write_netcdf"

    labels = _label_array(cube.scene_ids)
    dims = [("time", t), ("band", BAND_COUNT), ("y", h), ("x", w), ("scene_strlen", labels.shape[1])]
    variables = [
        _Variable("time", (0,), NC_DOUBLE, np.array([_seconds_since_epoch(m) for m in cube.times]), {
            "standard_name": "time", "long_name": "acquisition time", "units": TIME_UNITS,
            "calendar": "standard", "axis": "T"}),
        _Variable("band", (1,), NC_INT, np.arange(1, BAND_COUNT + 1), {
            "long_name": "catalogue band id", "comment": "names in the global band_table attribute"}),
        _Variable("y", (2,), NC_DOUBLE, grid.y_centers(), {
            "standard_name": "latitude" if geographic else "projection_y_coordinate",
            "long_name": "y coordinate of pixel centre", "units": units, "axis": "Y"}),
        _Variable("x", (3,), NC_DOUBLE, grid.x_centers(), {
            "standard_name": "longitude" if geographic else "projection_x_coordinate",
            "long_name": "x coordinate of pixel centre", "units": units, "axis": "X"}),
        _Variable("crs", (), NC_INT, np.array([0]), _crs_attributes(grid)),
        _Variable("scene_id", (0, 4), NC_CHAR, labels, {"long_name": "scene identifier"}),
        _Variable(DATA_VARIABLE, (0, 1, 2, 3), NC_FLOAT, cube.data, {
            "long_name": "ocean data cube planes", "_FillValue": np.float32(np.nan), "grid_mapping": "crs"}),
    ]
    gatts = {
        "Conventions": "CF-1.8",
        "title": "oceandc hypercube",
        "history": history,
        "band_table": "; ".join(f"{int(b)}: {b.label}" for b in BandId),
        "sensors": ",".join(s.value for s in cube.sensors),
    }

    for var in variables:
        if var.nbytes > MAX_VSIZE:
            raise TooLarge(f"variable {var.name} needs {var.nbytes} bytes, above the CDF-2 limit of {MAX_VSIZE}")

    header_size = len(_encode_header(VERSION_64BIT_OFFSET, dims, gatts, variables, [0] * len(variables)))
    begins, offset = [], header_size
    for var in variables:
        begins.append(offset)
        offset += var.vsize
    header = _encode_header(VERSION_64BIT_OFFSET, dims, gatts, variables, begins)

    try:
        with open(path, "wb") as fh:
            fh.write(header)
            for var in variables:
                raw = np.ascontiguousarray(var.data).astype(_NC_DTYPES[var.nc_type]).tobytes()
                fh.write(raw + b"\x00" * _pad4(len(raw)))
    except OSError as e:
        raise WriteError(f"cannot write {path}: {e}")
    logger.info("📄 Wrote %s (%s, %d bytes)", path, "x".join(map(str, cube.shape)), offset)


# ================================
# 🔹 READER
# ================================

class _Cursor:
    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def take(self, size: int) -> bytes:
        if size < 0 or self.pos + size > len(self.data):
            raise ParseError(f"header truncated (need {size} bytes)", self.pos)
        raw = self.data[self.pos:self.pos + size]
        self.pos += size
        return raw

    def int32(self) -> int:
        return struct.unpack(">i", self.take(4))[0]

    def int64(self) -> int:
        return struct.unpack(">q", self.take(8))[0]

    def name(self) -> str:
        n = self.int32()
        raw = self.take(n)
        self.take(_pad4(n))
        return raw.decode("utf-8")

    def values(self, nc_type: int, count: int) -> Any:
        if nc_type not in _NC_DTYPES:
            raise ParseError(f"unknown nc_type {nc_type}", self.pos - 8)
        dtype = _NC_DTYPES[nc_type]
        raw = self.take(dtype.itemsize * count)
        self.take(_pad4(len(raw)))
        if nc_type == NC_CHAR:
            return raw.decode("utf-8", errors="replace")
        return np.frombuffer(raw, dtype=dtype)

    def list_header(self, expected: int) -> int:
        at = self.pos
        tag, count = self.int32(), self.int32()
        if tag == 0 and count == 0:
            return 0
        if tag != expected or count < 0:
            raise ParseError(f"expected list tag {expected:#x}, found {tag:#x}", at)
        return count


@dataclass
class _VarInfo:
    name: str
    dims: Tuple[int, ...]
    attrs: Dict[str, Any]
    nc_type: int
    begin: int


def _read_attrs(cur: _Cursor) -> Dict[str, Any]:
    attrs = {}
    for _ in range(cur.list_header(NC_ATTRIBUTE)):
        name = cur.name()
        nc_type, count = cur.int32(), cur.int32()
        attrs[name] = cur.values(nc_type, count)
    return attrs


def _read_header(data: bytes) -> Tuple[List[Tuple[str, int]], Dict[str, Any], Dict[str, _VarInfo]]:
    if len(data) < 4 or data[:3] != MAGIC:
        raise NotNetcdf("missing CDF magic bytes")
    version = data[3]
    if version not in (VERSION_CLASSIC, VERSION_64BIT_OFFSET):
        raise NotNetcdf(f"unsupported NetCDF format version byte {version}")
    cur = _Cursor(data, 4)
    cur.int32()  # numrecs
    dims = []
    for _ in range(cur.list_header(NC_DIMENSION)):
        dims.append((cur.name(), cur.int32()))
    gatts = _read_attrs(cur)
    variables = {}
    for _ in range(cur.list_header(NC_VARIABLE)):
        name = cur.name()
        ndims = cur.int32()
        dimids = tuple(cur.int32() for _ in range(ndims))
        if any(not 0 <= d < len(dims) for d in dimids):
            raise ParseError(f"variable {name} references an unknown dimension", cur.pos)
        attrs = _read_attrs(cur)
        nc_type = cur.int32()
        cur.int32()  # vsize
        begin = cur.int64() if version == VERSION_64BIT_OFFSET else cur.int32()
        variables[name] = _VarInfo(name, dimids, attrs, nc_type, begin)
    return dims, gatts, variables


def _read_array(data: bytes, var: _VarInfo, dims: List[Tuple[str, int]]) -> np.ndarray:
    shape = tuple(dims[d][1] for d in var.dims)
    if any(length == 0 for length in shape):
        raise SchemaError(f"variable {var.name} uses a record (unlimited) dimension")
    if var.nc_type not in _NC_DTYPES or var.nc_type == NC_CHAR:
        raise SchemaError(f"variable {var.name} has unsupported type {var.nc_type}")
    dtype = _NC_DTYPES[var.nc_type]
    count = int(np.prod(shape, dtype=np.int64)) if shape else 1
    end = var.begin + count * dtype.itemsize
    if var.begin < 0 or end > len(data):
        raise ParseError(f"data of variable {var.name} runs past end of file", var.begin)
    return np.frombuffer(data, dtype=dtype, count=count, offset=var.begin).reshape(shape)


def _read_labels(data: bytes, var: _VarInfo, dims: List[Tuple[str, int]]) -> List[str]:
    shape = tuple(dims[d][1] for d in var.dims)
    if var.nc_type != NC_CHAR or len(shape) != 2:
        raise SchemaError(f"variable {var.name} must be a (time, strlen) char array")
    end = var.begin + shape[0] * shape[1]
    if var.begin < 0 or end > len(data):
        raise ParseError(f"data of variable {var.name} runs past end of file", var.begin)
    rows = (data[var.begin + i * shape[1]:var.begin + (i + 1) * shape[1]] for i in range(shape[0]))
    return [row.rstrip(b"\x00").decode("utf-8", errors="replace") for row in rows]


def _attr_text(attrs: Dict[str, Any], name: str) -> str:
    value = attrs.get(name, "")
    return value if isinstance(value, str) else ""


def _grid_from(crs_attrs: Dict[str, Any], x: np.ndarray, y: np.ndarray) -> GridSpec:
    epsg = crs_attrs.get("epsg")
    if epsg is None:
        code = _attr_text(crs_attrs, "epsg_code")
        if not code.upper().startswith("EPSG:"):
            raise SchemaError("crs variable carries no EPSG code")
        epsg = int(code.split(":", 1)[1])
    else:
        epsg = int(np.asarray(epsg).ravel()[0])

    transform = _attr_text(crs_attrs, "GeoTransform").split()
    if len(transform) == 6:
        ox, px, _, oy, _, py = (float(v) for v in transform)
        return GridSpec(epsg, ox, oy, px, -py, x.size, y.size)
    if x.size < 2 or y.size < 2:
        raise SchemaError("cannot derive pixel size without a GeoTransform attribute")
    px = float(x[1] - x[0])
    py = float(y[0] - y[1])
    return GridSpec(epsg, float(x[0]) - px / 2, float(y[0]) + py / 2, px, py, x.size, y.size)


def read_netcdf(path: PathLike) -> HyperCube:
    """Rebuild a HyperCube from a file written by ``write_netcdf``."""
    data = Path(path).read_bytes()
    dims, gatts, variables = _read_header(data)
    missing = [name for name in REQUIRED_VARIABLES if name not in variables]
    if missing:
        raise SchemaError(f"missing required variable(s): {', '.join(missing)}")
    band_dim = dict(dims).get("band")
    if band_dim != BAND_COUNT:
        raise SchemaError(f"band dimension has length {band_dim}, expected {BAND_COUNT}")
    if "crs" not in variables:
        raise SchemaError("missing required variable: crs")

    seconds = _read_array(data, variables["time"], dims).astype(np.float64)
    x = _read_array(data, variables["x"], dims).astype(np.float64)
    y = _read_array(data, variables["y"], dims).astype(np.float64)
    values = _read_array(data, variables[DATA_VARIABLE], dims)
    if values.ndim != 4 or values.shape[1] != BAND_COUNT:
        raise SchemaError(f"{DATA_VARIABLE} must be (time, band, y, x), got shape {values.shape}")

    grid = _grid_from(variables["crs"].attrs, x, y)
    times = tuple(EPOCH + timedelta(seconds=float(s)) for s in seconds)
    sensors = [s for s in _attr_text(gatts, "sensors").split(",") if s]
    if "scene_id" in variables:
        scene_ids = _read_labels(data, variables["scene_id"], dims)
    else:
        scene_ids = _attr_text(gatts, "scene_ids").split(",") if len(times) else []
    if len(sensors) != len(times) or len(scene_ids) != len(times):
        raise SchemaError("sensor and scene id labels do not match the time dimension")
    cube = HyperCube(grid=grid, times=times, data=values.astype(np.float32), sensors=tuple(sensors),
                     scene_ids=tuple(scene_ids))
    logger.debug("📄 Read %s: %s EPSG:%d", path, "x".join(map(str, cube.shape)), grid.epsg)
    return cube
