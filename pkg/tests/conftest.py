import json
import struct
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pytest

from oceandc.model import GridSpec, RadiometricParams, Raster2D, Scene, ThermalCalibration
from oceandc.raster_io import write_geotiff

# ================================
# 🔹 SYNTHETIC SCENE SETUP
# ================================

UTM34N = 32634
ORIGIN_X = 600000.0
ORIGIN_Y = 4200000.0
AOI_SIZE = 600.0
TARGET_RESOLUTION = 10.0

THERMAL = {
    "B10": ThermalCalibration(k1=774.8853, k2=1321.0789, ml=3.342e-4, al=0.1),
    "B11": ThermalCalibration(k1=480.8883, k2=1201.1442, ml=3.342e-4, al=0.1),
}

SENTINEL2_RESOLUTION = {
    "B01": 60, "B02": 10, "B03": 10, "B04": 10, "B05": 20, "B06": 20, "B07": 20,
    "B08": 10, "B8A": 20, "B09": 60, "B10": 60, "B11": 20, "B12": 20,
}
LANDSAT_RESOLUTION = {
    "B1": 30, "B2": 30, "B3": 30, "B4": 30, "B5": 30, "B6": 30, "B7": 30,
    "B8": 15, "B9": 30, "B10": 30, "B11": 30,
}

MTL_TEMPLATE = """GROUP = LANDSAT_METADATA_FILE
  GROUP = LEVEL2_SURFACE_REFLECTANCE_PARAMETERS
    REFLECTANCE_MULT_BAND_1 = 2.75E-05
    REFLECTANCE_ADD_BAND_1 = -0.2
  END_GROUP = LEVEL2_SURFACE_REFLECTANCE_PARAMETERS
  GROUP = LEVEL1_RADIOMETRIC_RESCALING
    RADIANCE_MULT_BAND_10 = 3.3420E-04
    RADIANCE_ADD_BAND_10 = 0.10000
    RADIANCE_MULT_BAND_11 = 3.3420E-04
    RADIANCE_ADD_BAND_11 = 0.10000
  END_GROUP = LEVEL1_RADIOMETRIC_RESCALING
  GROUP = LEVEL1_THERMAL_CONSTANTS
    K1_CONSTANT_BAND_10 = 774.8853
    K2_CONSTANT_BAND_10 = 1321.0789
    K1_CONSTANT_BAND_11 = 480.8883
    K2_CONSTANT_BAND_11 = 1201.1442
  END_GROUP = LEVEL1_THERMAL_CONSTANTS
END_GROUP = LANDSAT_METADATA_FILE
END
"""


def grid_at(resolution: float, size: float = AOI_SIZE, epsg: int = UTM34N,
            origin: Tuple[float, float] = (ORIGIN_X, ORIGIN_Y)) -> GridSpec:
    n = int(round(size / resolution))
    return GridSpec(epsg, origin[0], origin[1], resolution, resolution, n, n)


def dn_raster(rng: np.random.Generator, resolution: float, lo: int, hi: int) -> Raster2D:
    grid = grid_at(resolution)
    return Raster2D(grid, rng.integers(lo, hi, size=grid.shape).astype(np.float32))


def sentinel2_scene(rng: np.random.Generator, when: datetime, scene_id: str = "") -> Scene:
    # DN 500..3500 → reflectance 0.05..0.35
    bands = {label: dn_raster(rng, res, 500, 3500) for label, res in SENTINEL2_RESOLUTION.items()}
    return Scene(sensor="Sentinel2", acquired_at=when, native_bands=bands,
                 radiometry=RadiometricParams(0.0001, 0.0), scene_id=scene_id)


def landsat_scene(rng: np.random.Generator, when: datetime, scene_id: str = "", sensor: str = "Landsat8") -> Scene:
    bands = {}
    for label, res in LANDSAT_RESOLUTION.items():
        if label in THERMAL:
            bands[label] = dn_raster(rng, res, 28000, 32000)
        else:
            # DN 9100..20000 → reflectance ~0.05..0.35
            bands[label] = dn_raster(rng, res, 9100, 20000)
    return Scene(sensor=sensor, acquired_at=when, native_bands=bands,
                 radiometry=RadiometricParams(0.0000275, -0.2, THERMAL), scene_id=scene_id)


def utc(*args) -> datetime:
    return datetime(*args, tzinfo=timezone.utc)


# -----------------------------------------------
# 🔹 Function: File writers
# -----------------------------------------------

def write_polygon_shapefile(path: Path, polygons: Sequence[Sequence[Sequence[Tuple[float, float]]]],
                            header_type: int = 5) -> Path:
    """Minimal .shp main file: one Polygon record per entry (list of rings)."""
    records = bytearray()
    all_points = [p for polygon in polygons for ring in polygon for p in ring] or [(0.0, 0.0)]
    xs = [p[0] for p in all_points]
    ys = [p[1] for p in all_points]
    for number, rings in enumerate(polygons, start=1):
        points = [p for ring in rings for p in ring]
        parts, start = [], 0
        for ring in rings:
            parts.append(start)
            start += len(ring)
        content = struct.pack("<i", 5)
        content += struct.pack("<4d", min(x for x, _ in points), min(y for _, y in points),
                               max(x for x, _ in points), max(y for _, y in points))
        content += struct.pack("<ii", len(parts), len(points))
        content += struct.pack(f"<{len(parts)}i", *parts)
        content += b"".join(struct.pack("<2d", x, y) for x, y in points)
        records += struct.pack(">ii", number, len(content) // 2) + content

    header = struct.pack(">7i", 9994, 0, 0, 0, 0, 0, (100 + len(records)) // 2)
    header += struct.pack("<ii", 1000, header_type)
    header += struct.pack("<8d", min(xs), min(ys), max(xs), max(ys), 0.0, 0.0, 0.0, 0.0)
    path.write_bytes(header + bytes(records))
    return path


def square(x0: float, y0: float, x1: float, y1: float) -> List[List[Tuple[float, float]]]:
    # clockwise outer ring, closed
    return [[(x0, y0), (x0, y1), (x1, y1), (x1, y0), (x0, y0)]]


def write_scene_files(directory: Path, scene: Scene) -> Dict[str, object]:
    """GeoTIFF per band plus metadata; returns the scene's build-config entry."""
    directory.mkdir(parents=True, exist_ok=True)
    bands = {}
    for label, raster in scene.native_bands.items():
        path = directory / f"{label}.tif"
        write_geotiff(path, raster, dtype="uint16")
        bands[label] = str(path.relative_to(directory.parent))
    if scene.sensor.is_landsat:
        metadata = directory / "MTL.txt"
        metadata.write_text(MTL_TEMPLATE, encoding="utf-8")
    else:
        metadata = directory / "metadata.json"
        metadata.write_text(json.dumps({"scale": 0.0001, "offset": 0.0}), encoding="utf-8")
    return {
        "sensor": scene.sensor.value,
        "acquired_at": scene.acquired_at.isoformat(),
        "bands": bands,
        "metadata": str(metadata.relative_to(directory.parent)),
        "scene_id": scene.scene_id,
    }


# ================================
# 🔹 FIXTURES
# ================================

@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def target_grid():
    return grid_at(TARGET_RESOLUTION)


@pytest.fixture
def mixed_scenes(rng):
    return [
        sentinel2_scene(rng, utc(2022, 6, 12, 9, 10), "S2A_20220612"),
        landsat_scene(rng, utc(2022, 6, 5, 9, 0), "LC08_20220605"),
        sentinel2_scene(rng, utc(2022, 7, 2, 9, 10), "S2B_20220702"),
    ]


@pytest.fixture
def build_workspace(tmp_path, mixed_scenes):
    """AOI shapefile, band files, metadata and a build config for the mixed scenes."""
    write_polygon_shapefile(tmp_path / "aoi.shp",
                            [square(ORIGIN_X + 20, ORIGIN_Y - AOI_SIZE + 20, ORIGIN_X + AOI_SIZE - 20, ORIGIN_Y - 20)])
    scenes = [write_scene_files(tmp_path / scene.scene_id, scene) for scene in mixed_scenes]
    cfg = {
        "aoi": {"path": "aoi.shp", "epsg": UTM34N},
        "target_resolution": TARGET_RESOLUTION,
        "scenes": scenes,
        "output": "cube.nc",
        "classifications": [{"index": "NDWI", "output": "ndwi.tif"}],
    }
    path = tmp_path / "build.json"
    path.write_text(json.dumps(cfg, indent=2), encoding="utf-8")
    return path
