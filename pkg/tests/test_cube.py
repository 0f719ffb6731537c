import time

import numpy as np
import pytest

from oceandc.bands import BAND_COUNT, BandId
from oceandc.cube import assemble_scene, build_hypercube, coverage, stack
from oceandc.errors import DuplicateTimestamp, GridMismatch, InvalidValue
from oceandc.harmonize import harmonize_scene
from oceandc.indices import vci_array
from oceandc.model import GridSpec, RadiometricParams, Raster2D, Scene, SceneCube
from oceandc.netcdf_io import write_netcdf

from conftest import (LANDSAT_RESOLUTION, ORIGIN_X, ORIGIN_Y, SENTINEL2_RESOLUTION, THERMAL, UTM34N, grid_at,
                      landsat_scene, sentinel2_scene, utc)

SENTINEL2_ONLY_FILL = {14, 15, 16, 30, 31, 32, 33}
LANDSAT_ONLY_FILL = {9, 10, 11, 12, 13, 19, 20, 21, 22}
# divisible by every native pixel size, wider than 512 target pixels
LARGE_EXTENT = 5400.0


def _fill_only(cube, t):
    return {i + 1 for i in np.flatnonzero(cube.fill_fractions()[t] == 1.0)}


def _empty_cube(grid, when, scene_id="s"):
    return SceneCube(grid, when, np.zeros((BAND_COUNT,) + grid.shape, dtype=np.float32), "Sentinel2", scene_id)


# ================================
# 🔹 SCENE ASSEMBLY
# ================================

def test_sentinel2_planes(rng, target_grid):
    scene = sentinel2_scene(rng, utc(2022, 6, 12))
    cube = assemble_scene(harmonize_scene(scene, target_grid))
    assert cube.bands.shape == (BAND_COUNT, 60, 60)
    expected_blue = (scene.native_bands["B02"].values.astype(np.float64) * 0.0001).astype(np.float32)
    np.testing.assert_array_equal(cube.plane(BandId.BLUE).values, expected_blue)
    assert set(range(1, BAND_COUNT + 1)) - {int(b) for b in coverage(cube)} == SENTINEL2_ONLY_FILL | {34}


def test_landsat_thermal_planes_hold_kelvin(rng, target_grid):
    cube = assemble_scene(harmonize_scene(landsat_scene(rng, utc(2022, 6, 5)), target_grid))
    for band in (BandId.TIRS_1, BandId.TIRS_2, BandId.LST_1, BandId.LST_2):
        values = cube.plane(band).values
        assert 250.0 < np.nanmin(values) and np.nanmax(values) < 350.0
    celsius = cube.plane(BandId.LST_CELSIUS).values
    np.testing.assert_allclose(celsius, cube.plane(BandId.LST_1).values - 273.15, atol=1e-4)


def test_assemble_requires_harmonized_scene(rng):
    with pytest.raises(GridMismatch):
        assemble_scene(sentinel2_scene(rng, utc(2022, 6, 12), "raw"))


def test_products_filter_leaves_others_fill(rng, target_grid):
    cube = assemble_scene(harmonize_scene(sentinel2_scene(rng, utc(2022, 6, 12)), target_grid), ["NDWI"])
    covered = {int(b) for b in coverage(cube)}
    assert BandId.NDWI in covered
    assert not covered & (set(range(17, BAND_COUNT + 1)) - {BandId.NDWI})
    assert set(range(1, 14)) <= covered


# ================================
# 🔹 STACKING
# ================================

def test_mixed_sensor_hypercube(mixed_scenes, target_grid):
    cube = build_hypercube(mixed_scenes, target_grid)
    assert cube.shape == (3, BAND_COUNT, 60, 60)
    assert cube.scene_ids == ("LC08_20220605", "S2A_20220612", "S2B_20220702")
    assert [s.value for s in cube.sensors] == ["Landsat8", "Sentinel2", "Sentinel2"]
    assert list(cube.times) == sorted(cube.times)
    assert _fill_only(cube, 0) == LANDSAT_ONLY_FILL
    assert _fill_only(cube, 1) == SENTINEL2_ONLY_FILL
    assert _fill_only(cube, 2) == SENTINEL2_ONLY_FILL


def test_vci_is_computed_across_time(mixed_scenes, target_grid):
    cube = build_hypercube(mixed_scenes, target_grid)
    expected = vci_array(cube.data[:, BandId.NDVI - 1])
    np.testing.assert_array_equal(cube.data[:, BandId.VCI - 1], expected)
    finite = cube.data[:, BandId.VCI - 1][np.isfinite(cube.data[:, BandId.VCI - 1])]
    assert finite.min() >= 0.0 and finite.max() <= 100.0


def test_single_scene_has_no_vci(rng, target_grid):
    cube = build_hypercube([sentinel2_scene(rng, utc(2022, 6, 12))], target_grid)
    assert cube.shape[0] == 1
    assert cube.fill_fractions()[0, BandId.VCI - 1] == 1.0


def test_parallel_build_matches_serial(mixed_scenes, target_grid):
    serial = build_hypercube(mixed_scenes, target_grid, jobs=1)
    parallel = build_hypercube(mixed_scenes, target_grid, jobs=3)
    assert np.array_equal(serial.data, parallel.data, equal_nan=True)
    assert serial.times == parallel.times


def test_stack_rejects_grid_mismatch(target_grid):
    other = GridSpec(UTM34N, 0.0, 100.0, 10.0, 10.0, 10, 10)
    with pytest.raises(GridMismatch) as excinfo:
        stack([_empty_cube(target_grid, utc(2022, 1, 1)), _empty_cube(other, utc(2022, 2, 1), "odd")])
    assert "odd" in str(excinfo.value)


def test_stack_rejects_duplicate_timestamp(target_grid):
    with pytest.raises(DuplicateTimestamp):
        stack([_empty_cube(target_grid, utc(2022, 1, 1), "a"), _empty_cube(target_grid, utc(2022, 1, 1), "b")])


def test_stack_needs_cubes():
    with pytest.raises(InvalidValue):
        stack([])


# ================================
# 🔹 END-TO-END TIMING
# ================================

def _large_scene(rng, sensor, when, resolutions, radiometry, lo, hi):
    bands = {}
    for label, res in resolutions.items():
        grid = grid_at(float(res), size=LARGE_EXTENT)
        low, high = (28000, 32000) if label in radiometry.thermal else (lo, hi)
        bands[label] = Raster2D(grid, rng.integers(low, high, size=grid.shape).astype(np.float32))
    return Scene(sensor=sensor, acquired_at=when, native_bands=bands, radiometry=radiometry)


# Test that a 512x512 mixed-sensor build and write stays under ten seconds
@pytest.mark.slow
def test_512_build_is_fast(rng, tmp_path):
    scenes = [
        _large_scene(rng, "Sentinel2", utc(2022, 6, 12), SENTINEL2_RESOLUTION, RadiometricParams(0.0001, 0.0),
                     500, 3500),
        _large_scene(rng, "Sentinel2", utc(2022, 6, 22), SENTINEL2_RESOLUTION, RadiometricParams(0.0001, 0.0),
                     500, 3500),
        _large_scene(rng, "Landsat8", utc(2022, 6, 5), LANDSAT_RESOLUTION,
                     RadiometricParams(0.0000275, -0.2, THERMAL), 9100, 20000),
    ]
    target = GridSpec(UTM34N, ORIGIN_X, ORIGIN_Y, 10.0, 10.0, 512, 512)
    started = time.perf_counter()
    cube = build_hypercube(scenes, target)
    write_netcdf(cube, tmp_path / "cube.nc", history="test")
    elapsed = time.perf_counter() - started
    assert cube.shape == (3, BAND_COUNT, 512, 512)
    assert elapsed < 10.0
