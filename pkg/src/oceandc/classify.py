"""Threshold classification of NDWI, WRI-2 and OSI rasters into thematic codes.

Codes start at 1 in interval order; 0 means "outside every interval" and fill
stays fill. Class rasters use the cube's float32 plane type.
"""

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from .bands import BandId, Sensor, band_id_of
from .errors import InvalidValue, NoScheme, SchemeMismatch
from .model import Raster2D

UNCLASSIFIED = 0
INF = math.inf


class SensorScope(str, Enum):
    ALL = "all"
    LANDSAT = "Landsat"
    SENTINEL2 = "Sentinel2"


@dataclass(frozen=True)
class ClassInterval:
    lo: float
    hi: float
    label: str
    code: int
    lo_closed: bool = True
    hi_closed: bool = False

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise InvalidValue(f"interval {self.label!r}: lower bound {self.lo} above upper bound {self.hi}")
        if self.code < 1:
            raise InvalidValue(f"interval {self.label!r}: class codes start at 1")

    def mask(self, values: np.ndarray) -> np.ndarray:
        lower = values >= self.lo if self.lo_closed else values > self.lo
        upper = values <= self.hi if self.hi_closed else values < self.hi
        return lower & upper

    def contains(self, value: float) -> bool:
        return bool(self.mask(np.asarray([value], dtype=np.float64))[0])

    def notation(self) -> str:
        left = "[" if self.lo_closed and math.isfinite(self.lo) else "("
        right = "]" if self.hi_closed and math.isfinite(self.hi) else ")"
        return f"{left}{self.lo:g}, {self.hi:g}{right}"


@dataclass(frozen=True)
class ClassScheme:
    index: BandId
    sensor_scope: SensorScope
    classes: Tuple[ClassInterval, ...]
    name: str = ""

    def __post_init__(self):
        labels = [c.label for c in self.classes]
        codes = [c.code for c in self.classes]
        if not self.classes:
            raise InvalidValue("a scheme needs at least one class")
        if len(set(labels)) != len(labels) or len(set(codes)) != len(codes):
            raise InvalidValue(f"scheme {self.name or self.index.label}: duplicate labels or codes")
        for a, b in zip(self.classes, self.classes[1:]):
            touching = a.hi == b.lo and (a.hi_closed and b.lo_closed)
            if a.hi > b.lo or touching:
                raise InvalidValue(f"scheme {self.name or self.index.label}: {a.label!r} overlaps {b.label!r}")
        if not self.name:
            object.__setattr__(self, "name", self.index.label)

    def label_of(self, code: int) -> str:
        for c in self.classes:
            if c.code == code:
                return c.label
        return "unclassified"


def _interval(lo, hi, label, code, lo_closed=True, hi_closed=False) -> ClassInterval:
    return ClassInterval(lo, hi, label, code, lo_closed, hi_closed)


# ================================
# 🔹 BUILT-IN SCHEMES
# ================================

NDWI_SCHEME = ClassScheme(BandId.NDWI, SensorScope.ALL, (
    _interval(-1.0, -0.3, "Drought, Non-Aqueous Surfaces", 1),
    _interval(-0.3, 0.0, "Moderate drought, non-aqueous surfaces", 2),
    _interval(0.0, 0.2, "Flooding, humidity", 3),
    _interval(0.2, 1.0, "Water Surface", 4, hi_closed=True),
))

WRI_SCHEME = ClassScheme(BandId.WRI_2, SensorScope.ALL, (
    _interval(-1.0, -0.75, "Critical water areas", 1),
    _interval(-0.75, -0.25, "Normal water quality", 2),
    _interval(-0.25, 0.0, "Wet ground / Vegetation", 3),
    _interval(0.0, 1.0, "Ground / Infrastructures", 4, hi_closed=True),
))

OSI_LANDSAT_SCHEME = ClassScheme(BandId.OSI, SensorScope.LANDSAT, (
    _interval(-INF, 1.9, "building/infrastructures", 1, lo_closed=False),
    _interval(1.9, 2.5, "vegetation regions", 2, hi_closed=True),
    _interval(2.5, INF, "water bodies", 3, lo_closed=False),
), name="OSI-Landsat")

OSI_SENTINEL2_SCHEME = ClassScheme(BandId.OSI, SensorScope.SENTINEL2, (
    _interval(0.75, 1.0, "vegetation regions", 1),
    _interval(1.0, 1.9, "building/infrastructures", 2),
    _interval(1.9, 2.5, "water bodies, emitting strongly in blue", 3),
    _interval(2.5, INF, "water bodies, absorbing blue", 4),
), name="OSI-Sentinel2")

BUILTIN_SCHEMES: Tuple[ClassScheme, ...] = (NDWI_SCHEME, WRI_SCHEME, OSI_LANDSAT_SCHEME, OSI_SENTINEL2_SCHEME)


def scheme_index(name: Union[BandId, int, str]) -> BandId:
    """Band a scheme name refers to; a bare "WRI" means WRI-2."""
    if isinstance(name, str) and name.strip().upper() == "WRI":
        return BandId.WRI_2
    return band_id_of(name)


def scheme_for(index: Union[BandId, int, str], sensor: Optional[Union[str, Sensor]] = None) -> ClassScheme:
    """Built-in scheme for an index; OSI needs the sensor to pick its table."""
    band = scheme_index(index)
    if band is BandId.NDWI:
        return NDWI_SCHEME
    if band is BandId.WRI_2:
        return WRI_SCHEME
    if band is BandId.OSI:
        if sensor is None:
            raise NoScheme("OSI thresholds differ per sensor; pass a sensor")
        return OSI_LANDSAT_SCHEME if Sensor.parse(sensor).is_landsat else OSI_SENTINEL2_SCHEME
    raise NoScheme(f"no classification scheme for {band.label}")


# -----------------------------------------------
# 🔹 Function: Classification
# -----------------------------------------------

def classify(raster: Raster2D, scheme: ClassScheme,
             band: Optional[Union[BandId, int, str]] = None) -> Raster2D:
    """Class code per pixel; 0 outside every interval, fill stays fill."""
    if band is not None and scheme_index(band) != scheme.index:
        raise SchemeMismatch(f"scheme {scheme.name} classifies {scheme.index.label}, "
                             f"raster holds {scheme_index(band).label}")
    values = raster.values
    codes = np.full(values.shape, UNCLASSIFIED, dtype=np.float32)
    with np.errstate(invalid="ignore"):
        for interval in scheme.classes:
            codes[interval.mask(values)] = interval.code
    codes[np.isnan(values)] = np.nan
    return Raster2D(raster.grid, codes)


def class_histogram(codes: Raster2D, scheme: ClassScheme) -> Dict[str, int]:
    """Pixel count per class label (fill excluded, "unclassified" for code 0)."""
    values = codes.values[~np.isnan(codes.values)]
    counts = {"unclassified": int(np.count_nonzero(values == UNCLASSIFIED))}
    for interval in scheme.classes:
        counts[interval.label] = int(np.count_nonzero(values == interval.code))
    return counts


# -----------------------------------------------
# 🔹 Function: JSON export
# -----------------------------------------------

def _bound(value: float) -> Any:
    return value if math.isfinite(value) else ("-inf" if value < 0 else "inf")


def scheme_to_dict(scheme: ClassScheme) -> Dict[str, Any]:
    return {
        "name": scheme.name,
        "index": scheme.index.label,
        "band_id": int(scheme.index),
        "sensor_scope": scheme.sensor_scope.value,
        "unclassified_code": UNCLASSIFIED,
        "classes": [
            {
                "code": c.code,
                "label": c.label,
                "interval": c.notation(),
                "lo": _bound(c.lo),
                "hi": _bound(c.hi),
                "lo_closed": c.lo_closed,
                "hi_closed": c.hi_closed,
            }
            for c in scheme.classes
        ],
    }


def schemes_as_json(schemes: Optional[List[ClassScheme]] = None, indent: int = 2) -> str:
    return json.dumps([scheme_to_dict(s) for s in (schemes or BUILTIN_SCHEMES)], indent=indent,
                      ensure_ascii=False)
