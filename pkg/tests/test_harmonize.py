import numpy as np
import pytest

from oceandc.errors import (AllFillWarning, CrsMismatch, EmptyGeometry, EmptyIntersection, NonIntegerRatio,
                            OceanDCError)
from oceandc.harmonize import (clip_raster, compute_clip_box, harmonize_band, harmonize_scene, reproject_raster,
                               resample_nn, target_grid_for)
from oceandc.geodesy import transform_bbox
from oceandc.model import BBox, GridSpec, Polygon, Raster2D

from conftest import ORIGIN_X, ORIGIN_Y, UTM34N, grid_at, landsat_scene, sentinel2_scene, utc


def _raster(values, pixel=30.0, origin=(0.0, 90.0), epsg=UTM34N):
    values = np.asarray(values, dtype=np.float32)
    grid = GridSpec(epsg, origin[0], origin[1], pixel, pixel, values.shape[1], values.shape[0])
    return Raster2D(grid, values)


# ================================
# 🔹 AOI
# ================================

def test_clip_box_of_triangle():
    box = compute_clip_box([Polygon.from_vertices([(10, 20), (30, 5), (25, 40)], UTM34N)])
    assert box.as_tuple() == (10, 5, 30, 40)


def test_clip_box_of_two_polygons():
    box = compute_clip_box([
        Polygon.from_vertices([(0, 0), (1, 0), (1, 1)], UTM34N),
        Polygon.from_vertices([(5, 5), (9, 5), (9, 7)], UTM34N),
    ])
    assert box.as_tuple() == (0, 0, 9, 7)


def test_clip_box_errors():
    with pytest.raises(EmptyGeometry):
        compute_clip_box([])
    with pytest.raises(EmptyGeometry):
        compute_clip_box([Polygon.from_vertices([(3, 3), (3, 3), (3, 3)], UTM34N, close=False)])
    with pytest.raises(CrsMismatch):
        compute_clip_box([Polygon.from_vertices([(0, 0), (1, 0), (1, 1)], UTM34N),
                          Polygon.from_vertices([(0, 0), (1, 0), (1, 1)], 4326)])


def test_target_grid_in_aoi_crs():
    grid = target_grid_for(BBox(600003.0, 4199405.0, 600597.0, 4199999.0, UTM34N), 10.0)
    assert (grid.origin_x, grid.origin_y) == (600000.0, 4200000.0)
    assert grid.shape == (60, 60)


def test_target_grid_from_geographic_aoi():
    grid = target_grid_for(BBox(23.40, 37.80, 23.50, 37.90, 4326), 10.0, epsg=UTM34N)
    assert grid.epsg == UTM34N
    assert grid.origin_x % 10.0 == 0.0 and grid.origin_y % 10.0 == 0.0
    assert 850 < grid.width < 950


# ================================
# 🔹 REPROJECTION / CLIP / RESAMPLE
# ================================

def test_reproject_identity_is_exact(rng):
    src = _raster(rng.random((3, 4)))
    assert reproject_raster(src, src.grid) == src


def test_reproject_shift_by_one_pixel():
    src = _raster([[1, 2, 3], [4, 5, 6]])
    dst = src.grid.with_shape(src.grid.origin_x + 30.0, src.grid.origin_y, 3, 2)
    out = reproject_raster(src, dst)
    np.testing.assert_array_equal(out.values[:, :2], [[2, 3], [5, 6]])
    assert np.isnan(out.values[:, 2]).all()


def test_reproject_disjoint_warns():
    src = _raster([[1, 2], [3, 4]])
    dst = src.grid.with_shape(10000.0, 10000.0, 2, 2)
    with pytest.warns(AllFillWarning):
        out = reproject_raster(src, dst)
    assert out.is_all_fill()


def test_reproject_fill_never_becomes_valid():
    src = _raster([[np.nan, 2], [3, np.nan]])
    dst = GridSpec(UTM34N, 0.0, 90.0, 10.0, 10.0, 6, 6)
    out = reproject_raster(src, dst)
    assert np.isnan(out.values[:3, :3]).all()
    assert (out.values[:3, 3:] == 2).all()


def test_reproject_across_zones_copies_source_values(rng):
    grid = GridSpec(UTM34N, 720000.0, 4200000.0, 30.0, 30.0, 40, 40)
    src = Raster2D(grid, rng.random(grid.shape))
    dst = GridSpec.covering(transform_bbox(grid.bounds, 32635), 30.0)
    out = reproject_raster(src, dst)
    valid = out.values[~np.isnan(out.values)]
    assert valid.size > 0
    assert np.isnan(out.values).any()
    assert np.isin(valid, src.values).all()


def test_clip_full_extent_is_identity():
    src = _raster([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
    assert clip_raster(src, src.grid.bounds) == src


def test_clip_inside_one_pixel():
    src = _raster([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
    out = clip_raster(src, BBox(35.0, 35.0, 55.0, 55.0, UTM34N))
    assert out.values.shape == (1, 1)
    assert out.values[0, 0] == 5
    assert (out.grid.origin_x, out.grid.origin_y) == (30.0, 60.0)


def test_clip_snaps_outward_and_is_idempotent():
    src = _raster(np.arange(25).reshape(5, 5), origin=(0.0, 150.0))
    box = BBox(20.0, 40.0, 70.0, 100.0, UTM34N)
    once = clip_raster(src, box)
    assert once.values.shape == (3, 3)
    np.testing.assert_array_equal(once.values, np.arange(25).reshape(5, 5)[1:4, 0:3])
    assert clip_raster(once, box) == once


def test_clip_errors():
    src = _raster([[1, 2], [3, 4]])
    with pytest.raises(EmptyIntersection):
        clip_raster(src, BBox(1000.0, 1000.0, 2000.0, 2000.0, UTM34N))
    with pytest.raises(CrsMismatch):
        clip_raster(src, BBox(0.0, 0.0, 1.0, 1.0, 4326))


def test_resample_60m_to_10m():
    src = _raster([[7.5]], pixel=60.0, origin=(0.0, 60.0))
    out = resample_nn(src, 10.0)
    assert out.values.shape == (6, 6)
    assert (out.values == 7.5).all()
    assert (out.grid.origin_x, out.grid.origin_y, out.grid.pixel_size_x) == (0.0, 60.0, 10.0)


def test_resample_blocks():
    src = _raster([[1, 2], [3, 4]], pixel=30.0, origin=(0.0, 60.0))
    out = resample_nn(src, 10.0)
    expected = np.kron(np.array([[1, 2], [3, 4]]), np.ones((3, 3)))
    np.testing.assert_array_equal(out.values, expected)


@pytest.mark.parametrize("k", [2, 3, 6])
def test_resample_histogram_scales(rng, k):
    values = rng.integers(0, 20, size=(7, 5)).astype(np.float32)
    values[0, 0] = np.nan
    src = _raster(values, pixel=10.0 * k, origin=(0.0, 70.0 * k))
    out = resample_nn(src, 10.0)
    src_values, src_counts = np.unique(values[~np.isnan(values)], return_counts=True)
    out_values, out_counts = np.unique(out.values[~np.isnan(out.values)], return_counts=True)
    np.testing.assert_array_equal(out_values, src_values)
    np.testing.assert_array_equal(out_counts, src_counts * k * k)
    assert np.isnan(out.values).sum() == k * k


def test_resample_identity_and_errors():
    src = _raster([[1, 2]], pixel=10.0, origin=(0.0, 10.0))
    assert resample_nn(src, 10.0) is src
    with pytest.raises(NonIntegerRatio) as excinfo:
        resample_nn(_raster([[1]], pixel=15.0, origin=(0.0, 15.0)), 10.0)
    assert excinfo.value.ratio == pytest.approx(1.5)
    with pytest.raises(NonIntegerRatio):
        resample_nn(_raster([[1]], pixel=5.0, origin=(0.0, 5.0)), 10.0)


# ================================
# 🔹 SCENE HARMONIZATION
# ================================

def test_band_already_on_target_is_unchanged(rng, target_grid):
    raster = Raster2D(target_grid, rng.random(target_grid.shape))
    assert harmonize_band(raster, target_grid) == raster


def test_coarse_band_becomes_blocks(target_grid):
    coarse = grid_at(60.0)
    values = np.arange(coarse.width * coarse.height, dtype=np.float32).reshape(coarse.shape)
    out = harmonize_band(Raster2D(coarse, values), target_grid)
    assert out.grid == target_grid
    np.testing.assert_array_equal(out.values, np.kron(values, np.ones((6, 6), dtype=np.float32)))


# Test that a target origin off the native lattice keeps each centre in its containing pixel
def test_offset_target_origin_picks_containing_pixel():
    src = _raster([[1, 2, 3]], pixel=20.0, origin=(0.0, 20.0))
    target = GridSpec(UTM34N, 10.0, 20.0, 10.0, 10.0, 4, 2)
    out = harmonize_band(src, target)
    assert out.grid == target
    # centres x = 15, 25, 35, 45 fall in source pixels 0, 1, 1, 2
    assert out.values[0].tolist() == [1.0, 2.0, 2.0, 3.0]
    assert out.values[1].tolist() == [1.0, 2.0, 2.0, 3.0]


@pytest.mark.parametrize("shift", [10.0, 20.0, 30.0, 40.0, 50.0])
def test_offset_target_matches_direct_sampling(target_grid, shift):
    coarse = grid_at(60.0)
    values = np.arange(coarse.width * coarse.height, dtype=np.float32).reshape(coarse.shape)
    target = GridSpec(UTM34N, target_grid.origin_x + shift, target_grid.origin_y - shift, 10.0, 10.0,
                      target_grid.width - 6, target_grid.height - 6)
    out = harmonize_band(Raster2D(coarse, values), target)
    np.testing.assert_array_equal(out.values, reproject_raster(Raster2D(coarse, values), target).values)
    idx = ((shift + 5.0 + 10.0 * np.arange(54)) // 60.0).astype(int)
    np.testing.assert_array_equal(out.values, values[np.ix_(idx, idx)])


def test_non_integer_ratio_band_is_reprojected(rng, target_grid):
    pan = grid_at(15.0)
    out = harmonize_band(Raster2D(pan, rng.random(pan.shape)), target_grid)
    assert out.grid == target_grid
    assert not np.isnan(out.values).any()


def test_sentinel2_scene_shares_target_grid(rng):
    scene = sentinel2_scene(rng, utc(2022, 6, 12))
    target = GridSpec(UTM34N, ORIGIN_X + 20.0, ORIGIN_Y - 20.0, 10.0, 10.0, 56, 56)
    harmonized = harmonize_scene(scene, target)
    assert set(harmonized.native_bands) == set(scene.native_bands)
    for raster in harmonized.native_bands.values():
        assert raster.grid == target
        assert not np.isnan(raster.values).any()
    # B02 is native 10 m, so a shifted window is a plain crop
    np.testing.assert_array_equal(harmonized.native_bands["B02"].values,
                                  scene.native_bands["B02"].values[2:58, 2:58])


def test_landsat_scene_keeps_radiometry(rng, target_grid):
    scene = landsat_scene(rng, utc(2022, 6, 5))
    harmonized = harmonize_scene(scene, target_grid)
    assert harmonized.radiometry is scene.radiometry
    assert harmonized.scene_id == scene.scene_id
    assert {r.grid for r in harmonized.native_bands.values()} == {target_grid}


def test_scene_outside_aoi_names_band(rng):
    scene = sentinel2_scene(rng, utc(2022, 6, 12), "S2_far")
    far = GridSpec(UTM34N, ORIGIN_X + 100000.0, ORIGIN_Y, 10.0, 10.0, 10, 10)
    with pytest.raises(EmptyIntersection) as excinfo:
        harmonize_scene(scene, far)
    assert excinfo.value.context["stage"] == "harmonize"
    assert excinfo.value.context["scene"] == "S2_far"
    assert excinfo.value.context["band"] in scene.native_bands
    assert isinstance(excinfo.value, OceanDCError)
