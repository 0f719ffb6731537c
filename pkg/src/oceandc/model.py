"""Shared domain types: grids, rasters, scenes and the 3D/4D data cubes.

Every type here is immutable once built. Arrays are copied on construction and
flagged read-only, so cubes and rasters can be handed to worker threads freely.
"""

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from types import MappingProxyType
from typing import Any, Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .bands import BAND_COUNT, THERMAL_BANDS, BandId, Sensor, band_id_of, sensor_band_mapping
from .errors import EmptyGeometry, InvalidValue, MissingKey, UnknownBand

FILL = np.float32(np.nan)
DTYPE = np.float32

# Snap tolerance, in pixels, when aligning coordinates to a pixel lattice
_EPS = 1e-9


def as_utc(moment: datetime) -> datetime:
    """Naive datetimes are taken as UTC; aware ones are converted."""
    if not isinstance(moment, datetime):
        raise InvalidValue(f"expected a datetime, got {type(moment).__name__}")
    if moment.tzinfo is None:
        return moment.replace(tzinfo=timezone.utc)
    return moment.astimezone(timezone.utc)


def _frozen_array(values: Any, ndim: int, what: str) -> np.ndarray:
    array = np.array(values, dtype=DTYPE, copy=True)
    if array.ndim != ndim:
        raise InvalidValue(f"{what} must be {ndim}-dimensional, got shape {array.shape}")
    # Non-finite samples are not valid data
    array[~np.isfinite(array)] = FILL
    array.setflags(write=False)
    return array


# ================================
# 🔹 GEOMETRY
# ================================

@dataclass(frozen=True)
class BBox:
    min_x: float
    min_y: float
    max_x: float
    max_y: float
    epsg: int

    def __post_init__(self):
        values = (self.min_x, self.min_y, self.max_x, self.max_y)
        if not all(math.isfinite(v) for v in values):
            raise EmptyGeometry(f"bounding box has non-finite coordinates: {values}")
        if not (self.min_x < self.max_x and self.min_y < self.max_y):
            raise EmptyGeometry(f"bounding box has zero area: {values}")

    def intersects(self, other: "BBox") -> bool:
        return (self.min_x < other.max_x and other.min_x < self.max_x
                and self.min_y < other.max_y and other.min_y < self.max_y)

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.min_x, self.min_y, self.max_x, self.max_y)


@dataclass(frozen=True)
class Polygon:
    """Polygon rings as stored (closing vertex kept), in a declared CRS."""

    rings: Tuple[Tuple[Tuple[float, float], ...], ...]
    epsg: int

    def __post_init__(self):
        rings = tuple(tuple((float(x), float(y)) for x, y in ring) for ring in self.rings)
        if not rings or any(len(ring) < 3 for ring in rings):
            raise InvalidValue("a polygon needs at least one ring of 3 or more vertices")
        object.__setattr__(self, "rings", rings)

    @classmethod
    def from_vertices(cls, vertices: Sequence[Tuple[float, float]], epsg: int, close: bool = True) -> "Polygon":
        ring = list(vertices)
        if close and ring and ring[0] != ring[-1]:
            ring.append(ring[0])
        return cls(rings=(tuple(ring),), epsg=epsg)

    @property
    def vertices(self) -> List[Tuple[float, float]]:
        return [vertex for ring in self.rings for vertex in ring]


# ================================
# 🔹 GRIDS & RASTERS
# ================================

@dataclass(frozen=True)
class GridSpec:
    """CRS + north-up affine geotransform + dimensions.

    ``origin_x``/``origin_y`` are the outer corner of pixel (0, 0); rows advance
    towards -y.
    """

    epsg: int
    origin_x: float
    origin_y: float
    pixel_size_x: float
    pixel_size_y: float
    width: int
    height: int

    def __post_init__(self):
        if int(self.width) < 1 or int(self.height) < 1:
            raise InvalidValue(f"grid dimensions must be >= 1, got {self.width}x{self.height}")
        if not (self.pixel_size_x > 0 and self.pixel_size_y > 0):
            raise InvalidValue(f"pixel sizes must be > 0, got {self.pixel_size_x}, {self.pixel_size_y}")
        for name in ("origin_x", "origin_y", "pixel_size_x", "pixel_size_y"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidValue(f"{name} must be finite")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "epsg", int(self.epsg))
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))

    @classmethod
    def covering(cls, bbox: BBox, resolution: float, epsg: Optional[int] = None) -> "GridSpec":
        """Smallest grid aligned to multiples of ``resolution`` that contains ``bbox``."""
        if not resolution > 0:
            raise InvalidValue(f"resolution must be > 0, got {resolution}")
        origin_x = math.floor(bbox.min_x / resolution + _EPS) * resolution
        origin_y = math.ceil(bbox.max_y / resolution - _EPS) * resolution
        width = max(1, math.ceil((bbox.max_x - origin_x) / resolution - _EPS))
        height = max(1, math.ceil((origin_y - bbox.min_y) / resolution - _EPS))
        return cls(epsg=bbox.epsg if epsg is None else epsg, origin_x=origin_x, origin_y=origin_y,
                   pixel_size_x=resolution, pixel_size_y=resolution, width=width, height=height)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.height, self.width)

    @property
    def bounds(self) -> BBox:
        return BBox(self.origin_x, self.origin_y - self.height * self.pixel_size_y,
                    self.origin_x + self.width * self.pixel_size_x, self.origin_y, self.epsg)

    def pixel_center(self, col: float, row: float) -> Tuple[float, float]:
        return (self.origin_x + (col + 0.5) * self.pixel_size_x,
                self.origin_y - (row + 0.5) * self.pixel_size_y)

    def x_centers(self) -> np.ndarray:
        return self.origin_x + (np.arange(self.width, dtype=np.float64) + 0.5) * self.pixel_size_x

    def y_centers(self) -> np.ndarray:
        return self.origin_y - (np.arange(self.height, dtype=np.float64) + 0.5) * self.pixel_size_y

    def to_pixel(self, x: Any, y: Any) -> Tuple[Any, Any]:
        """Fractional (col, row) of map coordinates; floor gives the containing pixel."""
        return ((np.asarray(x, dtype=np.float64) - self.origin_x) / self.pixel_size_x,
                (self.origin_y - np.asarray(y, dtype=np.float64)) / self.pixel_size_y)

    def with_shape(self, origin_x: float, origin_y: float, width: int, height: int) -> "GridSpec":
        return GridSpec(self.epsg, origin_x, origin_y, self.pixel_size_x, self.pixel_size_y, width, height)


@dataclass(frozen=True, eq=False)
class Raster2D:
    """One band B(x, y): float32 values (NaN = fill) on a GridSpec."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = _frozen_array(self.values, 2, "raster values")
        if values.shape != self.grid.shape:
            raise InvalidValue(f"values shape {values.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "values", values)

    @classmethod
    def full(cls, grid: GridSpec, value: float = np.nan) -> "Raster2D":
        return cls(grid, np.full(grid.shape, value, dtype=DTYPE))

    def fill_fraction(self) -> float:
        return float(np.isnan(self.values).mean())

    def is_all_fill(self) -> bool:
        return bool(np.isnan(self.values).all())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Raster2D):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.values, other.values, equal_nan=True)

    __hash__ = None


# ================================
# 🔹 SCENES
# ================================

@dataclass(frozen=True)
class ThermalCalibration:
    """Radiance rescaling (ML, AL) and Planck constants (K1, K2) of one thermal band."""

    k1: float
    k2: float
    ml: float
    al: float

    def __post_init__(self):
        if not (self.k1 > 0 and self.k2 > 0):
            raise InvalidValue("thermal constants K1 and K2 must be > 0")


@dataclass(frozen=True)
class RadiometricParams:
    reflectance_scale: float
    reflectance_offset: float = 0.0
    # native thermal label (e.g. "B10") -> calibration; Landsat only
    thermal: Mapping[str, ThermalCalibration] = field(default_factory=dict)

    def __post_init__(self):
        if self.reflectance_scale == 0 or not math.isfinite(self.reflectance_scale):
            raise InvalidValue("reflectance_scale must be a finite, non-zero number")
        object.__setattr__(self, "thermal", MappingProxyType(dict(self.thermal)))

    def thermal_for(self, label: str) -> ThermalCalibration:
        try:
            return self.thermal[label]
        except KeyError:
            raise MissingKey(f"K1/K2/ML/AL for {label}")


@dataclass(frozen=True)
class Scene:
    """One acquisition: native band rasters plus calibration metadata."""

    sensor: Sensor
    acquired_at: datetime
    native_bands: Mapping[str, Raster2D]
    radiometry: RadiometricParams
    scene_id: str = ""

    def __post_init__(self):
        sensor = Sensor.parse(self.sensor)
        object.__setattr__(self, "sensor", sensor)
        object.__setattr__(self, "acquired_at", as_utc(self.acquired_at))
        mapping = sensor_band_mapping(sensor)
        bands = {}
        for label, raster in self.native_bands.items():
            key = str(label).upper()
            if key not in mapping:
                raise UnknownBand(label, sensor=sensor.value)
            if key in bands:
                raise InvalidValue(f"native band {key} given twice")
            bands[key] = raster
        if not bands:
            raise InvalidValue("a scene needs at least one native band")
        thermal_labels = [label for label in bands if mapping[label] in THERMAL_BANDS]
        if sensor.is_landsat:
            for label in thermal_labels:
                self.radiometry.thermal_for(label)
        elif self.radiometry.thermal:
            raise InvalidValue(f"thermal calibration given for {sensor.value}, which has no thermal bands")
        object.__setattr__(self, "native_bands", MappingProxyType(bands))
        if not self.scene_id:
            stamp = self.acquired_at.strftime("%Y%m%dT%H%M%SZ")
            object.__setattr__(self, "scene_id", f"{sensor.value}_{stamp}")

    def band_for(self, band: BandId) -> Optional[Raster2D]:
        """Native raster feeding a catalogue band, or None when the sensor lacks it."""
        for label, target in sensor_band_mapping(self.sensor).items():
            if target == band:
                return self.native_bands.get(label)
        return None


# ================================
# 🔹 DATA CUBES
# ================================

@dataclass(frozen=True, eq=False)
class SceneCube:
    """DC(b, y, x): 43 planes of one scene on one grid."""

    grid: GridSpec
    time: datetime
    bands: np.ndarray
    sensor: Sensor
    scene_id: str

    def __post_init__(self):
        bands = _frozen_array(self.bands, 3, "scene cube")
        if bands.shape != (BAND_COUNT,) + self.grid.shape:
            raise InvalidValue(f"scene cube shape {bands.shape} != {(BAND_COUNT,) + self.grid.shape}")
        object.__setattr__(self, "bands", bands)
        object.__setattr__(self, "time", as_utc(self.time))
        object.__setattr__(self, "sensor", Sensor.parse(self.sensor))

    def plane(self, band: Union[BandId, int, str]) -> Raster2D:
        return Raster2D(self.grid, self.bands[band_id_of(band) - 1])


class Selection(NamedTuple):
    """Result of an on-demand cube query."""

    grid: GridSpec
    times: Tuple[datetime, ...]
    bands: Tuple[BandId, ...]
    data: np.ndarray


@dataclass(frozen=True, eq=False)
class HyperCube:
    """HDC(t, b, y, x): time-ordered stack of scene cubes sharing one grid."""

    grid: GridSpec
    times: Tuple[datetime, ...]
    data: np.ndarray
    sensors: Tuple[Sensor, ...]
    scene_ids: Tuple[str, ...]

    def __post_init__(self):
        times = tuple(as_utc(t) for t in self.times)
        if not times:
            raise InvalidValue("a hypercube needs at least one time slice")
        if any(later <= earlier for earlier, later in zip(times, times[1:])):
            raise InvalidValue("hypercube times must be strictly increasing")
        data = _frozen_array(self.data, 4, "hypercube")
        expected = (len(times), BAND_COUNT) + self.grid.shape
        if data.shape != expected:
            raise InvalidValue(f"hypercube shape {data.shape} != {expected}")
        sensors = tuple(Sensor.parse(s) for s in self.sensors)
        scene_ids = tuple(str(s) for s in self.scene_ids)
        if len(sensors) != len(times) or len(scene_ids) != len(times):
            raise InvalidValue("one sensor and one scene id are required per time slice")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "sensors", sensors)
        object.__setattr__(self, "scene_ids", scene_ids)

    @property
    def shape(self) -> Tuple[int, int, int, int]:
        return self.data.shape

    def plane(self, t: int, band: Union[BandId, int, str]) -> Raster2D:
        return Raster2D(self.grid, self.data[t, band_id_of(band) - 1])

    def fill_fractions(self) -> np.ndarray:
        """(T, 43) share of fill pixels per slice and band."""
        return np.isnan(self.data).mean(axis=(2, 3))

    def select(self, bands: Optional[Iterable[Union[BandId, int, str]]] = None,
               start: Optional[datetime] = None, end: Optional[datetime] = None) -> Selection:
        """Band subset and inclusive time window, as a plain array view."""
        chosen = tuple(band_id_of(b) for b in bands) if bands is not None else tuple(BandId)
        lo = as_utc(start) if start is not None else None
        hi = as_utc(end) if end is not None else None
        keep = [i for i, t in enumerate(self.times)
                if (lo is None or t >= lo) and (hi is None or t <= hi)]
        data = self.data[np.ix_(keep, [b - 1 for b in chosen])] if keep else \
            np.empty((0, len(chosen)) + self.grid.shape, dtype=DTYPE)
        return Selection(self.grid, tuple(self.times[i] for i in keep), chosen, data)

    def to_xarray(self):
        """Labelled ``xarray.Dataset`` view of the cube (requires xarray)."""
        import xarray as xr

        times = np.array([t.replace(tzinfo=None) for t in self.times], dtype="datetime64[ns]")
        dataset = xr.Dataset(
            {"oceandc": (("time", "band", "y", "x"), np.array(self.data))},
            coords={
                "time": times,
                "band": np.arange(1, BAND_COUNT + 1, dtype=np.int32),
                "y": self.grid.y_centers(),
                "x": self.grid.x_centers(),
                "band_name": ("band", [b.label for b in BandId]),
                "sensor": ("time", [s.value for s in self.sensors]),
                "scene_id": ("time", list(self.scene_ids)),
            },
            attrs={"crs": f"EPSG:{self.grid.epsg}"},
        )
        return dataset


def band_table() -> Dict[int, str]:
    return {int(b): b.label for b in BandId}
