"""Spectral, thermal and temporal products (catalogue IDs 17–43).

Reflectance recipes work in float32 with float32 constants so a plain scalar
evaluation of the same formula reproduces them bit for bit. Zero
denominators, fill inputs and negative radicands give fill, never an
exception.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import config
from .bands import BandId, Sensor, band_id_of
from .errors import InsufficientHistory, InvalidValue, MissingInput, UnknownBand
from .model import SceneCube, GridSpec, RadiometricParams, Raster2D

F32 = np.float32

# Thermal constants
TIRS_1_WAVELENGTH_UM = 10.895
TIRS_2_WAVELENGTH_UM = 12.005
RHO_UM_K = 14388.0  # h·c / k_B
KELVIN_OFFSET = 273.15

# NDVI thresholds → surface emissivity
EMISSIVITY_WATER = 0.991
EMISSIVITY_SOIL = 0.966
EMISSIVITY_MIXED = 0.973
EMISSIVITY_VEGETATION = 0.993
NDVI_SOIL_MAX = 0.2
NDVI_MIXED_MAX = 0.5

ND_RANGE = (-1.0, 1.0)
VCI_RANGE = (0.0, 100.0)

Planes = Mapping[BandId, Raster2D]


# ================================
# 🔹 RECIPES
# ================================

def _nd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a - b) / (a + b)


def _arvi(nir, red, blue):
    rb = F32(2.0) * red - blue
    return (nir - rb) / (nir + rb)


def _msavi2(nir, red):
    t = F32(2.0) * nir + F32(1.0)
    return (t - np.sqrt(t * t - F32(8.0) * (nir - red))) / F32(2.0)


def _mtvi2(nir, red, green):
    t = F32(2.0) * nir + F32(1.0)
    numerator = F32(1.5) * (F32(1.2) * (nir - green) - F32(2.5) * (red - green))
    return numerator / np.sqrt(t * t - (F32(6.0) * nir - F32(5.0) * np.sqrt(red)) - F32(0.5))


def _vari(green, red, blue):
    return (green - red) / (green + red - blue)


def _tgi(green, red, blue):
    return green - F32(0.39) * red - F32(0.61) * blue


def _wri_1(green, red, nir, swir1):
    return (green + red) / (nir + swir1)


def _wri_2(green, red, nir, swir2):
    # difference in the numerator, unlike WRI-1
    return (green - red) / (nir + swir2)


def _awei(green, swir1, nir, swir2):
    return F32(4.0) * (green - swir1) - (F32(0.25) * nir + F32(2.75) * swir2)


def _osi(red, green, blue):
    return (red + green) / blue


# -----------------------------------------------
# 🔹 Function: Thermal chain
# -----------------------------------------------

def emissivity_from_ndvi(ndvi: np.ndarray) -> np.ndarray:
    """NDVI threshold emissivity: water < 0 ≤ soil < 0.2 ≤ mixed ≤ 0.5 < vegetation."""
    ndvi = np.asarray(ndvi, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        emissivity = np.select(
            [ndvi < 0.0, ndvi < NDVI_SOIL_MAX, ndvi <= NDVI_MIXED_MAX, ndvi > NDVI_MIXED_MAX],
            [EMISSIVITY_WATER, EMISSIVITY_SOIL, EMISSIVITY_MIXED, EMISSIVITY_VEGETATION],
            default=np.nan,
        )
    return emissivity


def land_surface_temperature(bt: np.ndarray, emissivity: np.ndarray, wavelength_um: float) -> np.ndarray:
    """Single-channel emissivity correction: T / (1 + (λ·T/ρ)·ln ε)."""
    bt = np.asarray(bt, dtype=np.float64)
    with np.errstate(all="ignore"):
        return bt / (1.0 + (wavelength_um * bt / RHO_UM_K) * np.log(emissivity))


def _lst(wavelength_um: float) -> Callable[..., np.ndarray]:
    def recipe(bt, ndvi):
        return land_surface_temperature(bt, emissivity_from_ndvi(ndvi), wavelength_um)
    return recipe


def _celsius(lst1):
    return np.asarray(lst1, dtype=np.float64) - KELVIN_OFFSET


def _fahrenheit(lst1):
    return np.asarray(lst1, dtype=np.float64) * 9.0 / 5.0 - 459.67


# ================================
# 🔹 PRODUCT LEDGER
# ================================

@dataclass(frozen=True)
class IndexDefinition:
    band_id: BandId
    inputs: Tuple[BandId, ...]
    recipe: Optional[Callable[..., np.ndarray]]
    formula: str
    valid_range: Optional[Tuple[float, float]] = None
    # computed across the time axis when scenes are stacked
    temporal: bool = False

    def __post_init__(self):
        if not self.band_id.is_product:
            raise InvalidValue(f"{self.band_id.label} is a sensor band, not a product")
        if not self.inputs:
            raise InvalidValue(f"{self.band_id.label} needs at least one input band")


def _define(band: BandId, inputs: Tuple[BandId, ...], recipe, formula: str,
            valid_range: Optional[Tuple[float, float]] = None, temporal: bool = False) -> IndexDefinition:
    return IndexDefinition(band, inputs, recipe, formula, valid_range, temporal)


B = BandId

INDEX_DEFINITIONS: Dict[BandId, IndexDefinition] = {d.band_id: d for d in (
    _define(B.NDVI, (B.NIR, B.RED), _nd, "(NIR-RED)/(NIR+RED)", ND_RANGE),
    _define(B.NDWI, (B.NIR, B.SWIR_1), _nd, "(NIR-SWIR1)/(NIR+SWIR1)", ND_RANGE),
    _define(B.NDVI_VRE_1, (B.VRE_1, B.RED), _nd, "(VRE1-RED)/(VRE1+RED)", ND_RANGE),
    _define(B.NDVI_VRE_2, (B.VRE_2, B.RED), _nd, "(VRE2-RED)/(VRE2+RED)", ND_RANGE),
    _define(B.NDVI_VRE_3, (B.VRE_3, B.RED), _nd, "(VRE3-RED)/(VRE3+RED)", ND_RANGE),
    _define(B.NDVI_VRE_4, (B.VRE_4, B.RED), _nd, "(VRE4-RED)/(VRE4+RED)", ND_RANGE),
    _define(B.LSWI_1, (B.NIR, B.SWIR_1), _nd, "(NIR-SWIR1)/(NIR+SWIR1)", ND_RANGE),
    _define(B.LSWI_2, (B.NIR, B.SWIR_2), _nd, "(NIR-SWIR2)/(NIR+SWIR2)", ND_RANGE),
    _define(B.ARVI, (B.NIR, B.RED, B.BLUE), _arvi, "(NIR-(2RED-BLUE))/(NIR+(2RED-BLUE))"),
    _define(B.MSAVI2, (B.NIR, B.RED), _msavi2, "(2NIR+1-sqrt((2NIR+1)^2-8(NIR-RED)))/2"),
    _define(B.MTVI2, (B.NIR, B.RED, B.GREEN), _mtvi2,
            "1.5(1.2(NIR-GREEN)-2.5(RED-GREEN))/sqrt((2NIR+1)^2-(6NIR-5sqrt(RED))-0.5)"),
    _define(B.VARI, (B.GREEN, B.RED, B.BLUE), _vari, "(GREEN-RED)/(GREEN+RED-BLUE)"),
    _define(B.TGI, (B.GREEN, B.RED, B.BLUE), _tgi, "GREEN-0.39RED-0.61BLUE"),
    _define(B.LST_1, (B.TIRS_1, B.NDVI), _lst(TIRS_1_WAVELENGTH_UM), "BT1/(1+(10.895·BT1/14388)·ln ε)"),
    _define(B.LST_2, (B.TIRS_2, B.NDVI), _lst(TIRS_2_WAVELENGTH_UM), "BT2/(1+(12.005·BT2/14388)·ln ε)"),
    _define(B.LST_CELSIUS, (B.LST_1,), _celsius, "LST1-273.15"),
    _define(B.LST_FAHRENHEIT, (B.LST_1,), _fahrenheit, "LST1·9/5-459.67"),
    _define(B.VCI, (B.NDVI,), None, "100(NDVI-min_t NDVI)/(max_t NDVI-min_t NDVI)", VCI_RANGE, temporal=True),
    _define(B.MNDWI_1, (B.GREEN, B.SWIR_1), _nd, "(GREEN-SWIR1)/(GREEN+SWIR1)", ND_RANGE),
    _define(B.MNDWI_2, (B.GREEN, B.SWIR_2), _nd, "(GREEN-SWIR2)/(GREEN+SWIR2)", ND_RANGE),
    _define(B.WRI_1, (B.GREEN, B.RED, B.NIR, B.SWIR_1), _wri_1, "(GREEN+RED)/(NIR+SWIR1)"),
    _define(B.WRI_2, (B.GREEN, B.RED, B.NIR, B.SWIR_2), _wri_2, "(GREEN-RED)/(NIR+SWIR2)"),
    _define(B.NDTI, (B.RED, B.GREEN), _nd, "(RED-GREEN)/(RED+GREEN)", ND_RANGE),
    _define(B.AWEI, (B.GREEN, B.SWIR_1, B.NIR, B.SWIR_2), _awei, "4(GREEN-SWIR1)-(0.25NIR+2.75SWIR2)"),
    _define(B.OSI, (B.RED, B.GREEN, B.BLUE), _osi, "(RED+GREEN)/BLUE"),
    _define(B.NBR_1, (B.NIR, B.SWIR_2), _nd, "(NIR-SWIR2)/(NIR+SWIR2)", ND_RANGE),
    _define(B.NBR_2, (B.SWIR_1, B.SWIR_2), _nd, "(SWIR1-SWIR2)/(SWIR1+SWIR2)", ND_RANGE),
)}

# Catalogue order already puts NDVI before LST and LST-1 before its unit conversions
PRODUCT_ORDER: Tuple[BandId, ...] = tuple(sorted(INDEX_DEFINITIONS))


# ================================
# 🔹 OPERATIONS
# ================================

def _finalize(grid: GridSpec, values: np.ndarray, valid_range: Optional[Tuple[float, float]]) -> Raster2D:
    out = np.asarray(values, dtype=np.float32).copy()
    out[~np.isfinite(out)] = np.nan
    if valid_range is not None:
        np.clip(out, F32(valid_range[0]), F32(valid_range[1]), out=out)
    return Raster2D(grid, out)


def scale_to_reflectance(raster: Raster2D, params: RadiometricParams) -> Raster2D:
    """DN → reflectance; values outside the reflectance window become fill."""
    values = raster.values.astype(np.float64) * params.reflectance_scale + params.reflectance_offset
    values[(values < config.REFLECTANCE_MIN) | (values > config.REFLECTANCE_MAX)] = np.nan
    return Raster2D(raster.grid, values.astype(np.float32))


def brightness_temperature(tirs: Raster2D, params: RadiometricParams, label: str = "B10",
                           sensor: Union[str, Sensor] = Sensor.LANDSAT8) -> Raster2D:
    """Top-of-atmosphere brightness temperature in Kelvin from thermal DNs."""
    sensor = Sensor.parse(sensor)
    if not sensor.is_landsat:
        raise MissingInput("TIRS-1", sensor=sensor.value, product="brightness temperature")
    cal = params.thermal_for(label)
    radiance = cal.ml * tirs.values.astype(np.float64) + cal.al
    with np.errstate(all="ignore"):
        kelvin = cal.k2 / np.log(cal.k1 / radiance + 1.0)
    kelvin[~(radiance > 0)] = np.nan
    return _finalize(tirs.grid, kelvin, None)


def _as_planes(bands: Union[Planes, SceneCube]) -> Planes:
    if isinstance(bands, SceneCube):
        return {b: bands.plane(b) for b in BandId}
    return bands


def compute_index(bands: Union[Planes, SceneCube], band_id: Union[BandId, int, str],
                  sensor: Optional[Union[str, Sensor]] = None) -> Raster2D:
    """Evaluate one product from the harmonized planes available so far."""
    band = band_id_of(band_id)
    definition = INDEX_DEFINITIONS.get(band)
    if definition is None:
        raise UnknownBand(band.label)
    sensor_name = Sensor.parse(sensor).value if sensor is not None else None
    if definition.temporal:
        raise InsufficientHistory(f"{band.label} needs an NDVI time series; it is computed when scenes are stacked")

    planes = _as_planes(bands)
    inputs = []
    for required in definition.inputs:
        raster = planes.get(required)
        if raster is None or raster.is_all_fill():
            raise MissingInput(required.label, sensor=sensor_name, product=band.label)
        inputs.append(raster)
    grid = inputs[0].grid
    if any(r.grid != grid for r in inputs[1:]):
        raise InvalidValue(f"inputs of {band.label} are not on one grid")

    arrays = [r.values for r in inputs]
    with np.errstate(all="ignore"):
        values = definition.recipe(*arrays)
    return _finalize(grid, values, definition.valid_range)


def lst_products(bt1: Optional[Raster2D], bt2: Optional[Raster2D], ndvi: Raster2D) -> Dict[BandId, Raster2D]:
    """LST-1, LST-2, LST-CELSIUS and LST-FAHRENHEIT from brightness temperatures and NDVI."""
    if bt1 is None or bt1.is_all_fill():
        raise MissingInput("TIRS-1", product="LST-1")
    planes = {BandId.TIRS_1: bt1, BandId.NDVI: ndvi}
    out = {BandId.LST_1: compute_index(planes, BandId.LST_1)}
    if bt2 is not None and not bt2.is_all_fill():
        planes[BandId.TIRS_2] = bt2
        out[BandId.LST_2] = compute_index(planes, BandId.LST_2)
    else:
        out[BandId.LST_2] = Raster2D.full(bt1.grid)
    planes[BandId.LST_1] = out[BandId.LST_1]
    out[BandId.LST_CELSIUS] = compute_index(planes, BandId.LST_CELSIUS)
    out[BandId.LST_FAHRENHEIT] = compute_index(planes, BandId.LST_FAHRENHEIT)
    return out


# -----------------------------------------------
# 🔹 Function: Vegetation Condition Index
# -----------------------------------------------

def vci_array(ndvi: np.ndarray) -> np.ndarray:
    """VCI over a (T, H, W) NDVI stack; min/max use non-fill steps only."""
    ndvi = np.asarray(ndvi, dtype=np.float64)
    if ndvi.ndim != 3 or ndvi.shape[0] < 2:
        raise InsufficientHistory(f"VCI needs at least 2 time steps, got {ndvi.shape[0] if ndvi.ndim else 0}")
    valid = np.isfinite(ndvi)
    count = valid.sum(axis=0)
    lo = np.where(valid, ndvi, np.inf).min(axis=0)
    hi = np.where(valid, ndvi, -np.inf).max(axis=0)
    span = hi - lo
    usable = (count >= 2) & (span > 0)
    with np.errstate(all="ignore"):
        vci = 100.0 * (ndvi - lo) / span
    vci[~(valid & usable[np.newaxis])] = np.nan
    return np.clip(vci, *VCI_RANGE).astype(np.float32)


def vci(ndvi_series: Sequence[Raster2D]) -> List[Raster2D]:
    """Per-step VCI rasters for a time-ordered NDVI series on one grid."""
    if len(ndvi_series) < 2:
        raise InsufficientHistory(f"VCI needs at least 2 time steps, got {len(ndvi_series)}")
    grid = ndvi_series[0].grid
    if any(r.grid != grid for r in ndvi_series[1:]):
        raise InvalidValue("NDVI series rasters are not on one grid")
    stack = vci_array(np.stack([r.values for r in ndvi_series]))
    return [Raster2D(grid, plane) for plane in stack]
