"""The 43-entry band catalogue and the sensor → catalogue band mappings."""

from enum import Enum, IntEnum
from types import MappingProxyType
from typing import Dict, Mapping, Tuple, Union

from .errors import InvalidValue, UnknownBand


class BandId(IntEnum):
    """Position of a plane on the cube's band axis (1-based, 43 entries)."""

    COASTAL_AEROSOL = 1
    BLUE = 2
    GREEN = 3
    RED = 4
    NIR = 5
    SWIR_1 = 6
    SWIR_2 = 7
    CIRRUS = 8
    VRE_1 = 9
    VRE_2 = 10
    VRE_3 = 11
    VRE_4 = 12
    WATER_VAPOUR = 13
    PANCHROMATIC = 14
    TIRS_1 = 15
    TIRS_2 = 16
    NDVI = 17
    NDWI = 18
    NDVI_VRE_1 = 19
    NDVI_VRE_2 = 20
    NDVI_VRE_3 = 21
    NDVI_VRE_4 = 22
    LSWI_1 = 23
    LSWI_2 = 24
    ARVI = 25
    MSAVI2 = 26
    MTVI2 = 27
    VARI = 28
    TGI = 29
    LST_1 = 30
    LST_2 = 31
    LST_CELSIUS = 32
    LST_FAHRENHEIT = 33
    VCI = 34
    MNDWI_1 = 35
    MNDWI_2 = 36
    WRI_1 = 37
    WRI_2 = 38
    NDTI = 39
    AWEI = 40
    OSI = 41
    NBR_1 = 42
    NBR_2 = 43

    @property
    def label(self) -> str:
        """Canonical catalogue label, e.g. ``"SWIR-1"``."""
        return _LABELS[self]

    @property
    def is_sensor_band(self) -> bool:
        return self.value <= 16

    @property
    def is_product(self) -> bool:
        return self.value >= 17


BAND_COUNT = 43

_LABELS: Dict[BandId, str] = {
    BandId.COASTAL_AEROSOL: "COASTAL AEROSOL",
    BandId.BLUE: "BLUE",
    BandId.GREEN: "GREEN",
    BandId.RED: "RED",
    BandId.NIR: "NIR",
    BandId.SWIR_1: "SWIR-1",
    BandId.SWIR_2: "SWIR-2",
    BandId.CIRRUS: "CIRRUS",
    BandId.VRE_1: "VRE-1",
    BandId.VRE_2: "VRE-2",
    BandId.VRE_3: "VRE-3",
    BandId.VRE_4: "VRE-4",
    BandId.WATER_VAPOUR: "WATER VAPOUR",
    BandId.PANCHROMATIC: "PANCHROMATIC",
    BandId.TIRS_1: "TIRS-1",
    BandId.TIRS_2: "TIRS-2",
    BandId.NDVI: "NDVI",
    BandId.NDWI: "NDWI",
    BandId.NDVI_VRE_1: "NDVI (VRE-1)",
    BandId.NDVI_VRE_2: "NDVI (VRE-2)",
    BandId.NDVI_VRE_3: "NDVI (VRE-3)",
    BandId.NDVI_VRE_4: "NDVI (VRE-4)",
    BandId.LSWI_1: "LSWI-1",
    BandId.LSWI_2: "LSWI-2",
    BandId.ARVI: "ARVI",
    BandId.MSAVI2: "MSAVI2",
    BandId.MTVI2: "MTVI2",
    BandId.VARI: "VARI",
    BandId.TGI: "TGI",
    BandId.LST_1: "LST-1",
    BandId.LST_2: "LST-2",
    BandId.LST_CELSIUS: "LST-CELSIUS",
    BandId.LST_FAHRENHEIT: "LST-FAHRENHEIT",
    BandId.VCI: "VCI",
    BandId.MNDWI_1: "MNDWI-1",
    BandId.MNDWI_2: "MNDWI-2",
    BandId.WRI_1: "WRI-1",
    BandId.WRI_2: "WRI-2",
    BandId.NDTI: "NDTI",
    BandId.AWEI: "AWEI",
    BandId.OSI: "OSI",
    BandId.NBR_1: "NBR-1",
    BandId.NBR_2: "NBR-2",
}

# Spellings found in the published product table
_ALIASES: Dict[str, BandId] = {
    "WATER VAROUR": BandId.WATER_VAPOUR,
    "PANCHROMATICS": BandId.PANCHROMATIC,
    "LST-FHRENHEIT": BandId.LST_FAHRENHEIT,
    "MNDW-2": BandId.MNDWI_2,
}


def _normalize(label: str) -> str:
    return " ".join(label.replace("_", " ").split()).upper()


_BY_LABEL: Dict[str, BandId] = {_normalize(label): band for band, label in _LABELS.items()}
_BY_LABEL.update({_normalize(alias): band for alias, band in _ALIASES.items()})


def band_id_of(name: Union[str, int, BandId]) -> BandId:
    """Look up a catalogue entry by label (case-insensitive) or numeric id."""
    if isinstance(name, BandId):
        return name
    if isinstance(name, int) and not isinstance(name, bool):
        try:
            return BandId(name)
        except ValueError:
            raise UnknownBand(name)
    if not isinstance(name, str):
        raise UnknownBand(name)
    band = _BY_LABEL.get(_normalize(name))
    if band is None:
        raise UnknownBand(name)
    return band


# ================================
# 🔹 SENSORS
# ================================

class Sensor(str, Enum):
    LANDSAT8 = "Landsat8"
    LANDSAT9 = "Landsat9"
    SENTINEL2 = "Sentinel2"

    @property
    def is_landsat(self) -> bool:
        return self in (Sensor.LANDSAT8, Sensor.LANDSAT9)

    @classmethod
    def parse(cls, value: Union[str, "Sensor"]) -> "Sensor":
        if isinstance(value, Sensor):
            return value
        key = str(value).replace("-", "").replace("_", "").replace(" ", "").lower()
        for sensor in cls:
            if sensor.value.lower() == key:
                return sensor
        raise InvalidValue(f"unsupported sensor {value!r}; expected one of {[s.value for s in cls]}")


_SENTINEL2_BANDS: Mapping[str, BandId] = MappingProxyType({
    "B01": BandId.COASTAL_AEROSOL,
    "B02": BandId.BLUE,
    "B03": BandId.GREEN,
    "B04": BandId.RED,
    "B05": BandId.VRE_1,
    "B06": BandId.VRE_2,
    "B07": BandId.VRE_3,
    "B08": BandId.NIR,
    "B8A": BandId.VRE_4,
    "B09": BandId.WATER_VAPOUR,
    "B10": BandId.CIRRUS,
    "B11": BandId.SWIR_1,
    "B12": BandId.SWIR_2,
})

_LANDSAT_BANDS: Mapping[str, BandId] = MappingProxyType({
    "B1": BandId.COASTAL_AEROSOL,
    "B2": BandId.BLUE,
    "B3": BandId.GREEN,
    "B4": BandId.RED,
    "B5": BandId.NIR,
    "B6": BandId.SWIR_1,
    "B7": BandId.SWIR_2,
    "B8": BandId.PANCHROMATIC,
    "B9": BandId.CIRRUS,
    "B10": BandId.TIRS_1,
    "B11": BandId.TIRS_2,
})

THERMAL_BANDS: Tuple[BandId, ...] = (BandId.TIRS_1, BandId.TIRS_2)


def sensor_band_mapping(sensor: Union[str, Sensor]) -> Mapping[str, BandId]:
    """Native band label → catalogue BandId for a sensor (read-only)."""
    sensor = Sensor.parse(sensor)
    if sensor is Sensor.SENTINEL2:
        return _SENTINEL2_BANDS
    return _LANDSAT_BANDS


def native_label_for(sensor: Union[str, Sensor], band: BandId) -> str:
    """Reverse lookup: the sensor's native label feeding a catalogue band."""
    for label, target in sensor_band_mapping(sensor).items():
        if target == band:
            return label
    raise UnknownBand(band.label, sensor=Sensor.parse(sensor).value)
