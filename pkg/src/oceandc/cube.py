"""Scene assembly (43-plane SceneCube) and time stacking (HyperCube)."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, List, Optional, Sequence, Set, Union

import numpy as np

from .bands import BAND_COUNT, THERMAL_BANDS, BandId, band_id_of, sensor_band_mapping
from .errors import DuplicateTimestamp, GridMismatch, InvalidValue, MissingInput, OceanDCError
from .harmonize import harmonize_scene
from .indices import (INDEX_DEFINITIONS, PRODUCT_ORDER, brightness_temperature, compute_index,
                      scale_to_reflectance, vci_array)
from .model import GridSpec, HyperCube, Scene, SceneCube

logger = logging.getLogger(__name__)

BandLike = Union[BandId, int, str]


def _wanted(products: Optional[Iterable[BandLike]]) -> Set[BandId]:
    if products is None:
        return set(INDEX_DEFINITIONS)
    return {band_id_of(p) for p in products}


# ================================
# 🔹 SCENE CUBE
# ================================

def assemble_scene(scene: Scene, products: Optional[Iterable[BandLike]] = None) -> SceneCube:
    """Build DC(b, y, x) from a harmonized scene.

    Planes 1–16 hold reflectance (thermal planes: brightness temperature in
    Kelvin); planes 17–43 hold the requested products. Anything the sensor
    cannot provide stays fill.
    """
    rasters = list(scene.native_bands.values())
    grid = rasters[0].grid
    for label, raster in scene.native_bands.items():
        if raster.grid != grid:
            raise GridMismatch(scene.scene_id, f"band {label} is not on the grid of the other bands")

    mapping = sensor_band_mapping(scene.sensor)
    planes = {}
    for label, raster in scene.native_bands.items():
        band = mapping[label]
        try:
            if band in THERMAL_BANDS:
                planes[band] = brightness_temperature(raster, scene.radiometry, label, scene.sensor)
            else:
                planes[band] = scale_to_reflectance(raster, scene.radiometry)
        except OceanDCError as e:
            raise e.add_context(stage="calibrate", scene=scene.scene_id, band=label)

    wanted = _wanted(products)
    for band in PRODUCT_ORDER:
        if INDEX_DEFINITIONS[band].temporal:
            continue
        try:
            planes[band] = compute_index(planes, band, scene.sensor)
        except MissingInput as e:
            logger.debug("%s: %s left as fill (%s)", scene.scene_id, band.label, e)
        except OceanDCError as e:
            raise e.add_context(stage="indices", scene=scene.scene_id, band=band.label)

    data = np.full((BAND_COUNT,) + grid.shape, np.nan, dtype=np.float32)
    for band, raster in planes.items():
        if band.is_product and band not in wanted:
            continue
        data[band - 1] = raster.values
    return SceneCube(grid=grid, time=scene.acquired_at, bands=data, sensor=scene.sensor, scene_id=scene.scene_id)


# ================================
# 🔹 HYPERCUBE
# ================================

def stack(cubes: Sequence[SceneCube], compute_vci: bool = True) -> HyperCube:
    """Sort scene cubes by time and stack them; VCI is filled in across the time axis."""
    if not cubes:
        raise InvalidValue("nothing to stack: no scene cubes given")
    grid = cubes[0].grid
    for cube in cubes[1:]:
        if cube.grid != grid:
            raise GridMismatch(cube.scene_id, f"{cube.grid.shape} vs {grid.shape}")

    ordered = sorted(cubes, key=lambda c: c.time)
    for earlier, later in zip(ordered, ordered[1:]):
        if earlier.time == later.time:
            raise DuplicateTimestamp(f"scenes {earlier.scene_id} and {later.scene_id} share the timestamp "
                                     f"{later.time.isoformat()}")

    data = np.stack([c.bands for c in ordered])
    vci_plane = BandId.VCI - 1
    if compute_vci and len(ordered) >= 2:
        data[:, vci_plane] = vci_array(data[:, BandId.NDVI - 1])
    else:
        data[:, vci_plane] = np.nan
    cube = HyperCube(grid=grid, times=tuple(c.time for c in ordered), data=data,
                     sensors=tuple(c.sensor for c in ordered), scene_ids=tuple(c.scene_id for c in ordered))
    logger.info("✅ Stacked %d scene(s) into a %s hypercube", len(ordered), "x".join(map(str, cube.shape)))
    return cube


def build_hypercube(scenes: Sequence[Scene], target: GridSpec,
                    products: Optional[Iterable[BandLike]] = None, jobs: int = 1) -> HyperCube:
    """Harmonize and assemble every scene (``jobs`` in parallel), then stack."""
    wanted = _wanted(products)

    def prepare(scene: Scene) -> SceneCube:
        return assemble_scene(harmonize_scene(scene, target), wanted)

    if jobs > 1 and len(scenes) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            cubes: List[SceneCube] = list(pool.map(prepare, scenes))
    else:
        cubes = [prepare(scene) for scene in scenes]
    return stack(cubes, compute_vci=BandId.VCI in wanted)


def coverage(cube: Union[SceneCube, HyperCube]) -> List[BandId]:
    """Bands holding at least one valid pixel (any slice)."""
    data = cube.bands[np.newaxis] if isinstance(cube, SceneCube) else cube.data
    valid = ~np.isnan(data).all(axis=(0, 2, 3))
    return [BandId(i + 1) for i in np.flatnonzero(valid)]
