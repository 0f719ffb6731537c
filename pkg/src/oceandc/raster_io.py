"""Input formats: a single-band GeoTIFF subset, ESRI Shapefile polygons and
scene calibration metadata (Landsat MTL text or the toolkit's JSON sidecar).

GeoTIFF subset: little- or big-endian classic TIFF, strips or tiles, no
compression or DEFLATE, u8/u16/i16/f32 samples, ModelPixelScale + a single
ModelTiepoint, EPSG from the GeoKey directory, optional GDAL_NODATA.
"""

import json
import logging
import math
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import config
from .bands import Sensor
from .errors import (MissingGeoreference, MissingKey, ParseError, UnsupportedFormat,
                     UnsupportedShapeType, WriteError)
from .model import GridSpec, Polygon, RadiometricParams, Raster2D, ThermalCalibration

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# ================================
# 🔹 TIFF CONSTANTS
# ================================

TAG_IMAGE_WIDTH = 256
TAG_IMAGE_LENGTH = 257
TAG_BITS_PER_SAMPLE = 258
TAG_COMPRESSION = 259
TAG_PHOTOMETRIC = 262
TAG_STRIP_OFFSETS = 273
TAG_SAMPLES_PER_PIXEL = 277
TAG_ROWS_PER_STRIP = 278
TAG_STRIP_BYTE_COUNTS = 279
TAG_PLANAR_CONFIG = 284
TAG_PREDICTOR = 317
TAG_TILE_WIDTH = 322
TAG_TILE_LENGTH = 323
TAG_TILE_OFFSETS = 324
TAG_TILE_BYTE_COUNTS = 325
TAG_SAMPLE_FORMAT = 339
TAG_MODEL_PIXEL_SCALE = 33550
TAG_MODEL_TIEPOINT = 33922
TAG_GEO_KEY_DIRECTORY = 34735
TAG_GEO_DOUBLE_PARAMS = 34736
TAG_GEO_ASCII_PARAMS = 34737
TAG_GDAL_NODATA = 42113

COMPRESSION_NONE = 1
COMPRESSION_DEFLATE = (8, 32946)

GEOKEY_MODEL_TYPE = 1024
GEOKEY_RASTER_TYPE = 1025
GEOKEY_GEOGRAPHIC_TYPE = 2048
GEOKEY_PROJECTED_TYPE = 3072
MODEL_TYPE_PROJECTED = 1
MODEL_TYPE_GEOGRAPHIC = 2
RASTER_PIXEL_IS_POINT = 2
USER_DEFINED = 32767

# field type -> (numpy code, byte size)
_FIELD_TYPES = {
    1: ("u1", 1),   # BYTE
    2: ("S1", 1),   # ASCII
    3: ("u2", 2),   # SHORT
    4: ("u4", 4),   # LONG
    5: ("u4", 8),   # RATIONAL
    6: ("i1", 1),   # SBYTE
    7: ("u1", 1),   # UNDEFINED
    8: ("i2", 2),   # SSHORT
    9: ("i4", 4),   # SLONG
    10: ("i4", 8),  # SRATIONAL
    11: ("f4", 4),  # FLOAT
    12: ("f8", 8),  # DOUBLE
}

# (SampleFormat, BitsPerSample) -> numpy sample code
_SAMPLE_TYPES = {
    (1, 8): "u1",
    (1, 16): "u2",
    (2, 16): "i2",
    (3, 32): "f4",
}
_SAMPLE_NAMES = {"u1": "uint8", "u2": "uint16", "i2": "int16", "f4": "float32"}


@dataclass(frozen=True)
class GeoTiffInfo:
    width: int
    height: int
    sample_format: str
    layout: str
    compression: str
    pixel_scale: Tuple[float, float]
    tiepoint: Tuple[float, float, float, float]
    epsg: int
    nodata: Optional[float]
    byteorder: str


# -----------------------------------------------
# 🔹 Function: TIFF structure parsing
# -----------------------------------------------

class _TiffFile:
    """Bounds-checked view over the bytes of a classic TIFF."""

    def __init__(self, data: bytes):
        self.data = data
        if len(data) < 8:
            raise ParseError("file too short for a TIFF header", len(data))
        order = data[:2]
        if order == b"II":
            self.endian = "<"
        elif order == b"MM":
            self.endian = ">"
        else:
            raise ParseError("not a TIFF byte-order mark", 0)
        version = self.unpack("H", 2)
        if version == 43:
            raise UnsupportedFormat("bigtiff")
        if version != 42:
            raise ParseError(f"bad TIFF version {version}", 2)
        self.first_ifd = self.unpack("I", 4)

    def check(self, offset: int, size: int) -> None:
        if offset < 0 or size < 0 or offset + size > len(self.data):
            raise ParseError(f"read of {size} bytes past end of file ({len(self.data)} bytes)", offset)

    def unpack(self, code: str, offset: int) -> int:
        size = struct.calcsize(code)
        self.check(offset, size)
        return struct.unpack_from(self.endian + code, self.data, offset)[0]

    def array(self, code: str, offset: int, count: int) -> np.ndarray:
        dtype = np.dtype(self.endian + code)
        self.check(offset, dtype.itemsize * count)
        return np.frombuffer(self.data, dtype=dtype, count=count, offset=offset)

    def read_ifd(self, offset: int) -> Dict[int, Any]:
        """Tag → decoded value (numpy array, or bytes for ASCII)."""
        if offset < 8 or offset % 2:
            raise ParseError("invalid IFD offset", offset)
        count = self.unpack("H", offset)
        self.check(offset + 2, 12 * count + 4)
        tags: Dict[int, Any] = {}
        for i in range(count):
            entry = offset + 2 + 12 * i
            tag = self.unpack("H", entry)
            ftype = self.unpack("H", entry + 2)
            n = self.unpack("I", entry + 4)
            if ftype not in _FIELD_TYPES:
                logger.debug("Skipping tag %d with unknown field type %d", tag, ftype)
                continue
            code, size = _FIELD_TYPES[ftype]
            total = size * n
            where = entry + 8 if total <= 4 else self.unpack("I", entry + 8)
            self.check(where, total)
            if ftype == 2:
                tags[tag] = self.data[where:where + n]
            elif ftype in (5, 10):
                pairs = self.array(code, where, 2 * n).astype(np.float64)
                tags[tag] = pairs[0::2] / np.where(pairs[1::2] == 0, 1, pairs[1::2])
            else:
                tags[tag] = self.array(code, where, n)
        return tags


def _scalar(tags: Dict[int, Any], tag: int, default: Optional[int] = None) -> int:
    if tag not in tags:
        if default is None:
            raise UnsupportedFormat(f"missing required tag {tag}")
        return default
    return int(tags[tag][0])


def _parse_geokeys(tags: Dict[int, Any]) -> Dict[int, Any]:
    directory = tags[TAG_GEO_KEY_DIRECTORY].astype(np.int64)
    if directory.size < 4:
        raise MissingGeoreference("GeoKeyDirectory is truncated")
    n_keys = int(directory[3])
    doubles = tags.get(TAG_GEO_DOUBLE_PARAMS)
    ascii_params = tags.get(TAG_GEO_ASCII_PARAMS, b"")
    keys: Dict[int, Any] = {}
    for k in range(n_keys):
        base = 4 + 4 * k
        if base + 4 > directory.size:
            raise MissingGeoreference("GeoKeyDirectory is truncated")
        key_id, location, count, value = (int(v) for v in directory[base:base + 4])
        if location == 0:
            keys[key_id] = value
        elif location == TAG_GEO_DOUBLE_PARAMS and doubles is not None:
            keys[key_id] = doubles[value:value + count].tolist()
        elif location == TAG_GEO_ASCII_PARAMS:
            keys[key_id] = bytes(ascii_params[value:value + count]).decode("latin-1").rstrip("|\x00")
        elif location == TAG_GEO_KEY_DIRECTORY:
            keys[key_id] = directory[value:value + count].tolist()
    return keys


def _georeference(tags: Dict[int, Any]) -> Tuple[Tuple[float, float], Tuple[float, float, float, float], int, bool]:
    for tag, name in ((TAG_MODEL_PIXEL_SCALE, "ModelPixelScale"),
                      (TAG_MODEL_TIEPOINT, "ModelTiepoint"),
                      (TAG_GEO_KEY_DIRECTORY, "GeoKeyDirectory")):
        if tag not in tags:
            raise MissingGeoreference(f"missing {name} tag ({tag})")
    scale = tags[TAG_MODEL_PIXEL_SCALE]
    if scale.size < 2 or not (scale[0] > 0 and scale[1] > 0):
        raise MissingGeoreference("ModelPixelScale entries must be > 0")
    tie = tags[TAG_MODEL_TIEPOINT]
    if tie.size < 6:
        raise MissingGeoreference("ModelTiepoint needs 6 values")
    if tie.size > 6:
        raise UnsupportedFormat(f"tiepoints={tie.size // 6}")

    keys = _parse_geokeys(tags)
    model = keys.get(GEOKEY_MODEL_TYPE)
    if model == MODEL_TYPE_GEOGRAPHIC:
        epsg = keys.get(GEOKEY_GEOGRAPHIC_TYPE)
    elif model == MODEL_TYPE_PROJECTED:
        epsg = keys.get(GEOKEY_PROJECTED_TYPE)
    else:
        epsg = keys.get(GEOKEY_PROJECTED_TYPE, keys.get(GEOKEY_GEOGRAPHIC_TYPE))
    if not isinstance(epsg, int) or epsg in (0, USER_DEFINED):
        raise MissingGeoreference("no EPSG code in the GeoKey directory")
    is_point = keys.get(GEOKEY_RASTER_TYPE) == RASTER_PIXEL_IS_POINT
    return ((float(scale[0]), float(scale[1])),
            (float(tie[0]), float(tie[1]), float(tie[3]), float(tie[4])), epsg, is_point)


def _decode_chunk(tiff: _TiffFile, offset: int, size: int, compression: int) -> bytes:
    tiff.check(offset, size)
    raw = tiff.data[offset:offset + size]
    if compression == COMPRESSION_NONE:
        return raw
    try:
        return zlib.decompress(raw)
    except zlib.error as e:
        raise ParseError(f"corrupt DEFLATE stream: {e}", offset)


def _read_pixels(tiff: _TiffFile, tags: Dict[int, Any], width: int, height: int,
                 code: str, compression: int) -> Tuple[np.ndarray, str]:
    dtype = np.dtype(tiff.endian + code)
    if TAG_TILE_OFFSETS in tags:
        tile_w = _scalar(tags, TAG_TILE_WIDTH)
        tile_h = _scalar(tags, TAG_TILE_LENGTH)
        if tile_w <= 0 or tile_h <= 0:
            raise ParseError(f"tile size {tile_w}x{tile_h} must be positive", 0)
        offsets = tags[TAG_TILE_OFFSETS]
        counts = tags.get(TAG_TILE_BYTE_COUNTS)
        if counts is None or len(counts) != len(offsets):
            raise UnsupportedFormat("missing TileByteCounts")
        across = math.ceil(width / tile_w)
        down = math.ceil(height / tile_h)
        if len(offsets) < across * down:
            raise ParseError(f"expected {across * down} tiles, found {len(offsets)}", 0)
        canvas = np.empty((down * tile_h, across * tile_w), dtype=dtype)
        need = tile_w * tile_h * dtype.itemsize
        for index in range(across * down):
            chunk = _decode_chunk(tiff, int(offsets[index]), int(counts[index]), compression)
            if len(chunk) < need:
                raise ParseError(f"tile {index} decodes to {len(chunk)} bytes, expected {need}", int(offsets[index]))
            row, col = divmod(index, across)
            tile = np.frombuffer(chunk, dtype=dtype, count=tile_w * tile_h).reshape(tile_h, tile_w)
            canvas[row * tile_h:(row + 1) * tile_h, col * tile_w:(col + 1) * tile_w] = tile
        return canvas[:height, :width], "tiles"

    if TAG_STRIP_OFFSETS not in tags:
        raise UnsupportedFormat("neither strips nor tiles")
    offsets = tags[TAG_STRIP_OFFSETS]
    counts = tags.get(TAG_STRIP_BYTE_COUNTS)
    if counts is None or len(counts) != len(offsets):
        raise UnsupportedFormat("missing StripByteCounts")
    rows_per_strip = min(_scalar(tags, TAG_ROWS_PER_STRIP, height), height)
    if rows_per_strip <= 0:
        raise ParseError(f"RowsPerStrip {rows_per_strip} must be positive", 0)
    row_bytes = width * dtype.itemsize
    parts = []
    for index in range(math.ceil(height / rows_per_strip)):
        if index >= len(offsets):
            raise ParseError(f"missing strip {index}", 0)
        rows = min(rows_per_strip, height - index * rows_per_strip)
        chunk = _decode_chunk(tiff, int(offsets[index]), int(counts[index]), compression)
        if len(chunk) < rows * row_bytes:
            raise ParseError(f"strip {index} decodes to {len(chunk)} bytes, expected {rows * row_bytes}",
                             int(offsets[index]))
        parts.append(chunk[:rows * row_bytes])
    pixels = np.frombuffer(b"".join(parts), dtype=dtype).reshape(height, width)
    return pixels, "strips"


def _nodata(tags: Dict[int, Any]) -> Optional[float]:
    raw = tags.get(TAG_GDAL_NODATA)
    if raw is None:
        return None
    text = bytes(raw).decode("ascii", errors="ignore").strip("\x00 \t\r\n")
    if not text:
        return None
    try:
        return float(text)
    except ValueError:
        logger.warning("⚠️ Ignoring unparsable GDAL_NODATA value %r", text)
        return None


def _open_tiff(path: PathLike) -> Tuple[_TiffFile, Dict[int, Any]]:
    tiff = _TiffFile(Path(path).read_bytes())
    return tiff, tiff.read_ifd(tiff.first_ifd)


def _inspect(tiff: _TiffFile, tags: Dict[int, Any]) -> Tuple[GeoTiffInfo, str, int, bool]:
    width = _scalar(tags, TAG_IMAGE_WIDTH)
    height = _scalar(tags, TAG_IMAGE_LENGTH)
    if width < 1 or height < 1:
        raise ParseError(f"invalid image size {width}x{height}", tiff.first_ifd)
    samples = _scalar(tags, TAG_SAMPLES_PER_PIXEL, 1)
    if samples != 1:
        raise UnsupportedFormat(f"samples_per_pixel={samples}")
    compression = _scalar(tags, TAG_COMPRESSION, COMPRESSION_NONE)
    if compression != COMPRESSION_NONE and compression not in COMPRESSION_DEFLATE:
        raise UnsupportedFormat(f"compression={compression}")
    predictor = _scalar(tags, TAG_PREDICTOR, 1)
    if predictor != 1:
        raise UnsupportedFormat(f"predictor={predictor}")
    bits = _scalar(tags, TAG_BITS_PER_SAMPLE, 1)
    sample_format = _scalar(tags, TAG_SAMPLE_FORMAT, 1)
    code = _SAMPLE_TYPES.get((sample_format, bits))
    if code is None:
        raise UnsupportedFormat(f"sample_format={sample_format},bits={bits}")

    pixel_scale, tiepoint, epsg, is_point = _georeference(tags)
    info = GeoTiffInfo(
        width=width, height=height, sample_format=_SAMPLE_NAMES[code],
        layout="tiles" if TAG_TILE_OFFSETS in tags else "strips",
        compression="none" if compression == COMPRESSION_NONE else "deflate",
        pixel_scale=pixel_scale, tiepoint=tiepoint, epsg=epsg, nodata=_nodata(tags),
        byteorder="little" if tiff.endian == "<" else "big",
    )
    return info, code, compression, is_point


def read_geotiff_info(path: PathLike) -> GeoTiffInfo:
    """Parse only the header/IFD of a GeoTIFF."""
    tiff, tags = _open_tiff(path)
    return _inspect(tiff, tags)[0]


def read_geotiff(path: PathLike) -> Raster2D:
    """Read a single-band GeoTIFF into a float32 Raster2D (no-data → NaN)."""
    tiff, tags = _open_tiff(path)
    info, code, compression, is_point = _inspect(tiff, tags)
    pixels, _ = _read_pixels(tiff, tags, info.width, info.height, code, compression)

    values = pixels.astype(np.float32)
    if info.nodata is not None and not math.isnan(info.nodata):
        values[pixels.astype(np.float64) == info.nodata] = np.nan

    sx, sy = info.pixel_scale
    i, j, x, y = info.tiepoint
    origin_x = x - i * sx
    origin_y = y + j * sy
    if is_point:
        # tiepoint refers to a pixel centre
        origin_x -= sx / 2.0
        origin_y += sy / 2.0
    grid = GridSpec(epsg=info.epsg, origin_x=origin_x, origin_y=origin_y,
                    pixel_size_x=sx, pixel_size_y=sy, width=info.width, height=info.height)
    logger.debug("📄 Read %s: %dx%d %s %s/%s EPSG:%d", path, info.width, info.height,
                 info.sample_format, info.layout, info.compression, info.epsg)
    return Raster2D(grid, values)


# -----------------------------------------------
# 🔹 Function: GeoTIFF writer (supported subset)
# -----------------------------------------------

_WRITE_DTYPES = {
    "uint8": (np.uint8, 1, 8),
    "uint16": (np.uint16, 1, 16),
    "int16": (np.int16, 2, 16),
    "float32": (np.float32, 3, 32),
}


def _entry(tag: int, ftype: int, values: Sequence[Any]) -> Tuple[int, int, List[Any]]:
    return (tag, ftype, list(values))


def _pack_values(endian: str, ftype: int, values: List[Any]) -> bytes:
    if ftype == 2:
        return bytes(values)
    code = {3: "H", 4: "I", 12: "d"}[ftype]
    return struct.pack(f"{endian}{len(values)}{code}", *values)


def write_geotiff(path: PathLike, raster: Raster2D, *, byteorder: str = "little", compress: bool = False,
                  tile: Optional[int] = None, rows_per_strip: Optional[int] = None,
                  dtype: str = "float32", nodata: Optional[float] = None) -> None:
    """Write a Raster2D as a single-band GeoTIFF within the readable subset."""
    if dtype not in _WRITE_DTYPES:
        raise UnsupportedFormat(f"dtype={dtype}")
    np_type, sample_format, bits = _WRITE_DTYPES[dtype]
    endian = "<" if byteorder == "little" else ">"
    grid = raster.grid

    values = np.array(raster.values, dtype=np.float64)
    fill = np.isnan(values)
    if fill.any():
        if nodata is None and dtype != "float32":
            raise UnsupportedFormat(f"fill pixels need a nodata value for dtype={dtype}")
        if nodata is not None:
            values[fill] = nodata
    pixels = values.astype(np.dtype(np_type).newbyteorder(endian))

    # image data chunks
    chunks: List[bytes] = []
    if tile:
        across = math.ceil(grid.width / tile)
        down = math.ceil(grid.height / tile)
        padded = np.zeros((down * tile, across * tile), dtype=pixels.dtype)
        padded[:grid.height, :grid.width] = pixels
        for row in range(down):
            for col in range(across):
                chunks.append(padded[row * tile:(row + 1) * tile, col * tile:(col + 1) * tile].tobytes())
    else:
        rps = rows_per_strip or grid.height
        for start in range(0, grid.height, rps):
            chunks.append(pixels[start:start + rps].tobytes())
    if compress:
        chunks = [zlib.compress(chunk, 6) for chunk in chunks]

    offsets = []
    body = bytearray()
    for chunk in chunks:
        offsets.append(8 + len(body))
        body += chunk
        if len(body) % 2:
            body += b"\x00"
    counts = [len(chunk) for chunk in chunks]

    geographic = 4000 <= grid.epsg < 5000
    geokeys = [1, 1, 0, 3,
               GEOKEY_MODEL_TYPE, 0, 1, MODEL_TYPE_GEOGRAPHIC if geographic else MODEL_TYPE_PROJECTED,
               GEOKEY_RASTER_TYPE, 0, 1, 1,
               GEOKEY_GEOGRAPHIC_TYPE if geographic else GEOKEY_PROJECTED_TYPE, 0, 1, grid.epsg]

    entries = [
        _entry(TAG_IMAGE_WIDTH, 4, [grid.width]),
        _entry(TAG_IMAGE_LENGTH, 4, [grid.height]),
        _entry(TAG_BITS_PER_SAMPLE, 3, [bits]),
        _entry(TAG_COMPRESSION, 3, [8 if compress else COMPRESSION_NONE]),
        _entry(TAG_PHOTOMETRIC, 3, [1]),
        _entry(TAG_SAMPLES_PER_PIXEL, 3, [1]),
        _entry(TAG_PLANAR_CONFIG, 3, [1]),
        _entry(TAG_SAMPLE_FORMAT, 3, [sample_format]),
        _entry(TAG_MODEL_PIXEL_SCALE, 12, [grid.pixel_size_x, grid.pixel_size_y, 0.0]),
        _entry(TAG_MODEL_TIEPOINT, 12, [0.0, 0.0, 0.0, grid.origin_x, grid.origin_y, 0.0]),
        _entry(TAG_GEO_KEY_DIRECTORY, 3, geokeys),
    ]
    if tile:
        entries += [_entry(TAG_TILE_WIDTH, 4, [tile]), _entry(TAG_TILE_LENGTH, 4, [tile]),
                    _entry(TAG_TILE_OFFSETS, 4, offsets), _entry(TAG_TILE_BYTE_COUNTS, 4, counts)]
    else:
        entries += [_entry(TAG_STRIP_OFFSETS, 4, offsets),
                    _entry(TAG_ROWS_PER_STRIP, 4, [rows_per_strip or grid.height]),
                    _entry(TAG_STRIP_BYTE_COUNTS, 4, counts)]
    if nodata is not None:
        text = repr(float(nodata)) if not float(nodata).is_integer() else str(int(nodata))
        entries.append(_entry(TAG_GDAL_NODATA, 2, list(text.encode("ascii") + b"\x00")))
    entries.sort(key=lambda e: e[0])

    # out-of-line values follow the image data, then the IFD
    extra = bytearray()
    extra_base = 8 + len(body)
    packed_entries = []
    for tag, ftype, vals in entries:
        blob = _pack_values(endian, ftype, vals)
        if len(blob) <= 4:
            field = blob.ljust(4, b"\x00")
        else:
            field = struct.pack(endian + "I", extra_base + len(extra))
            extra += blob
            if len(extra) % 2:
                extra += b"\x00"
        packed_entries.append(struct.pack(endian + "HHI", tag, ftype, len(vals)) + field)

    ifd_offset = extra_base + len(extra)
    header = (b"II" if endian == "<" else b"MM") + struct.pack(endian + "HI", 42, ifd_offset)
    ifd = struct.pack(endian + "H", len(packed_entries)) + b"".join(packed_entries) + struct.pack(endian + "I", 0)
    try:
        Path(path).write_bytes(header + bytes(body) + bytes(extra) + ifd)
    except OSError as e:
        raise WriteError(f"cannot write {path}: {e}")
    logger.debug("📄 Wrote %s (%s, %s)", path, dtype, "tiles" if tile else "strips")


# ================================
# 🔹 SHAPEFILE POLYGONS
# ================================

SHP_FILE_CODE = 9994
SHP_NULL = 0
SHP_POLYGON = 5


def read_shapefile_polygons(path: PathLike, epsg: int) -> List[Polygon]:
    """Read every Polygon record of a .shp main file; the CRS comes from configuration."""
    data = Path(path).read_bytes()
    if len(data) < 100:
        raise ParseError("file too short for a shapefile header", len(data))
    file_code = struct.unpack_from(">i", data, 0)[0]
    if file_code != SHP_FILE_CODE:
        raise ParseError(f"wrong shapefile file code {file_code}", 0)
    file_length = struct.unpack_from(">i", data, 24)[0] * 2
    shape_type = struct.unpack_from("<i", data, 32)[0]
    if shape_type not in (SHP_NULL, SHP_POLYGON):
        raise UnsupportedShapeType(shape_type)

    end = min(file_length, len(data)) if file_length >= 100 else len(data)
    polygons: List[Polygon] = []
    offset = 100
    while offset + 8 <= end:
        number, content_words = struct.unpack_from(">ii", data, offset)
        content = offset + 8
        content_end = content + content_words * 2
        if content_words < 2 or content_end > len(data):
            raise ParseError(f"record {number} runs past end of file", offset)
        record_type = struct.unpack_from("<i", data, content)[0]
        if record_type == SHP_NULL:
            logger.info("🔹 Skipping null shape record %d", number)
        elif record_type != SHP_POLYGON:
            raise UnsupportedShapeType(record_type)
        else:
            polygons.append(_read_polygon_record(data, content, content_end, epsg, number))
        offset = content_end
    logger.debug("📄 Read %d polygon(s) from %s", len(polygons), path)
    return polygons


def _read_polygon_record(data: bytes, start: int, end: int, epsg: int, number: int) -> Polygon:
    if start + 44 > end:
        raise ParseError(f"polygon record {number} is truncated", start)
    num_parts, num_points = struct.unpack_from("<ii", data, start + 36)
    parts_at = start + 44
    points_at = parts_at + 4 * num_parts
    if num_parts < 1 or num_points < 0 or points_at + 16 * num_points > end:
        raise ParseError(f"polygon record {number} is truncated", start)
    parts = list(struct.unpack_from(f"<{num_parts}i", data, parts_at)) + [num_points]
    points = np.frombuffer(data, dtype="<f8", count=2 * num_points, offset=points_at).reshape(-1, 2)
    rings = []
    for lo, hi in zip(parts[:-1], parts[1:]):
        if not 0 <= lo <= hi <= num_points:
            raise ParseError(f"polygon record {number} has invalid part index", parts_at)
        rings.append(tuple((float(x), float(y)) for x, y in points[lo:hi]))
    return Polygon(rings=tuple(rings), epsg=epsg)


# ================================
# 🔹 SCENE METADATA
# ================================

THERMAL_LABELS = ("B10", "B11")


def _parse_mtl(text: str) -> Dict[str, str]:
    """Flat KEY = value pairs; GROUP markers are ignored and the first occurrence of a key wins."""
    values: Dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or "=" not in line:
            continue
        key, _, value = line.partition("=")
        key = key.strip().upper()
        if key in ("GROUP", "END_GROUP"):
            continue
        values.setdefault(key, value.strip().strip('"'))
    return values


def _number(values: Dict[str, Any], key: str, source: str) -> float:
    if key not in values or values[key] in (None, ""):
        raise MissingKey(key, source)
    try:
        return float(values[key])
    except (TypeError, ValueError):
        raise MissingKey(f"{key} (not a number: {values[key]!r})", source)


def _optional_number(values: Dict[str, Any], key: str, default: float, source: str) -> float:
    return _number(values, key, source) if key in values else default


def _metadata_from_mtl(values: Dict[str, str], sensor: Sensor, source: str) -> RadiometricParams:
    if not sensor.is_landsat:
        return RadiometricParams(
            reflectance_scale=_optional_number(values, "SCALE", config.SENTINEL2_SCALE, source),
            reflectance_offset=_optional_number(values, "OFFSET", config.SENTINEL2_OFFSET, source))
    thermal = {}
    for band, label in ((10, "B10"), (11, "B11")):
        keys = [f"K1_CONSTANT_BAND_{band}", f"K2_CONSTANT_BAND_{band}",
                f"RADIANCE_MULT_BAND_{band}", f"RADIANCE_ADD_BAND_{band}"]
        if label == "B11" and not all(k in values for k in keys):
            continue
        k1, k2, ml, al = (_number(values, k, source) for k in keys)
        thermal[label] = ThermalCalibration(k1=k1, k2=k2, ml=ml, al=al)
    return RadiometricParams(
        reflectance_scale=_optional_number(values, "REFLECTANCE_MULT_BAND_1", config.LANDSAT_SCALE, source),
        reflectance_offset=_optional_number(values, "REFLECTANCE_ADD_BAND_1", config.LANDSAT_OFFSET, source),
        thermal=thermal,
    )


def _metadata_from_sidecar(doc: Dict[str, Any], sensor: Sensor, source: str) -> RadiometricParams:
    scale = _number(doc, "scale", source)
    offset = _optional_number(doc, "offset", 0.0, source)
    if not sensor.is_landsat:
        return RadiometricParams(reflectance_scale=scale, reflectance_offset=offset)
    thermal = {"B10": ThermalCalibration(*(_number(doc, k, source) for k in ("K1", "K2", "ML", "AL")))}
    for label, extra in (doc.get("thermal") or {}).items():
        thermal[str(label).upper()] = ThermalCalibration(
            *(_number(extra, k, f"{source} thermal.{label}") for k in ("K1", "K2", "ML", "AL")))
    return RadiometricParams(reflectance_scale=scale, reflectance_offset=offset, thermal=thermal)


def read_metadata(path: PathLike, sensor: Union[str, Sensor]) -> RadiometricParams:
    """Radiometric constants from a Landsat MTL text file or a JSON sidecar."""
    sensor = Sensor.parse(sensor)
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    source = path.name
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON sidecar: {e.msg}", e.pos)
        if not isinstance(doc, dict):
            raise ParseError("JSON sidecar must be an object", 0)
        params = _metadata_from_sidecar(doc, sensor, source)
    else:
        params = _metadata_from_mtl(_parse_mtl(text), sensor, source)
    logger.debug("📄 Radiometry for %s from %s: scale=%g offset=%g thermal=%s", sensor.value, source,
                 params.reflectance_scale, params.reflectance_offset, sorted(params.thermal))
    return params
