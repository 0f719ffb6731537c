import struct

import numpy as np
import pytest

import oceandc.netcdf_io as netcdf_io
from oceandc.bands import BAND_COUNT, BandId
from oceandc.errors import NotNetcdf, ParseError, SchemaError, TooLarge, WriteError
from oceandc.model import GridSpec, HyperCube
from oceandc.netcdf_io import DATA_VARIABLE, read_netcdf, write_netcdf

from conftest import UTM34N, utc


@pytest.fixture
def cube(rng):
    grid = GridSpec(UTM34N, 600000.0, 4200000.0, 10.0, 10.0, 7, 5)
    data = rng.normal(size=(2, BAND_COUNT) + grid.shape).astype(np.float32)
    data[:, BandId.PANCHROMATIC - 1] = np.nan
    data[1, :, 0, 0] = np.nan
    return HyperCube(grid, (utc(2022, 6, 5, 9, 0), utc(2022, 6, 12, 9, 10, 30)), data,
                     ("Landsat8", "Sentinel2"), ("LC08_20220605", "S2A_20220612"))


# ================================
# 🔹 WRITE / READ
# ================================

def test_file_starts_with_cdf2_magic(cube, tmp_path):
    path = tmp_path / "cube.nc"
    write_netcdf(cube, path, history="test")
    assert path.read_bytes()[:4] == bytes([0x43, 0x44, 0x46, 0x02])


def test_round_trip_is_bitwise(cube, tmp_path):
    path = tmp_path / "cube.nc"
    write_netcdf(cube, path, history="test")
    back = read_netcdf(path)
    assert back.grid == cube.grid
    assert back.times == cube.times
    assert back.sensors == cube.sensors
    assert back.scene_ids == cube.scene_ids
    assert back.data.tobytes() == cube.data.tobytes()


@pytest.mark.parametrize("seed", range(50))
def test_random_cubes_round_trip(tmp_path, seed):
    rng = np.random.default_rng(seed)
    t, h, w = (int(v) for v in rng.integers(1, 6, size=3))
    grid = GridSpec(int(rng.choice([32634, 32735, 4326])), float(rng.integers(0, 1000)) * 10.0,
                    float(rng.integers(0, 1000)) * 10.0, 10.0, 20.0, w, h)
    data = rng.normal(scale=1e3, size=(t, BAND_COUNT, h, w)).astype(np.float32)
    data[rng.random(data.shape) < 0.2] = np.nan
    times = tuple(utc(2020, 1, 1 + i, 10, 30) for i in range(t))
    scene_ids = tuple(f"tile 34S, pass {i}" if i % 2 else f"scene{i}" for i in range(t))
    original = HyperCube(grid, times, data, ("Sentinel2",) * t, scene_ids)
    path = tmp_path / "cube.nc"
    write_netcdf(original, path, history="test")
    back = read_netcdf(path)
    assert back.grid == grid
    assert back.scene_ids == scene_ids
    assert back.times == times
    assert back.data.tobytes() == original.data.tobytes()


# Test that scene ids survive separators, unicode and differing lengths
def test_scene_ids_keep_any_characters(cube, tmp_path):
    ids = ("tile 34S, pass 2", "S2B_MSIL2A;αβ")
    labelled = HyperCube(cube.grid, cube.times, cube.data, cube.sensors, ids)
    write_netcdf(labelled, tmp_path / "ids.nc", history="test")
    assert read_netcdf(tmp_path / "ids.nc").scene_ids == ids


def test_geographic_grid_round_trip(tmp_path):
    grid = GridSpec(4326, 23.4, 37.9, 0.0001, 0.0001, 3, 2)
    data = np.zeros((1, BAND_COUNT, 2, 3), dtype=np.float32)
    original = HyperCube(grid, (utc(2022, 1, 1),), data, ("Sentinel2",), ("s",))
    write_netcdf(original, tmp_path / "geo.nc", history="test")
    assert read_netcdf(tmp_path / "geo.nc").grid == grid


def test_output_is_deterministic(cube, tmp_path):
    write_netcdf(cube, tmp_path / "a.nc", history="fixed")
    write_netcdf(cube, tmp_path / "b.nc", history="fixed")
    assert (tmp_path / "a.nc").read_bytes() == (tmp_path / "b.nc").read_bytes()


def test_history_from_environment(cube, tmp_path, monkeypatch):
    monkeypatch.setattr("oceandc.config.HISTORY", "from env")
    write_netcdf(cube, tmp_path / "a.nc")
    assert b"from env" in (tmp_path / "a.nc").read_bytes()


# -----------------------------------------------
# 🔹 Function: Independent reader
# -----------------------------------------------

def test_scipy_reads_our_file(cube, tmp_path):
    netcdf = pytest.importorskip("scipy.io")
    path = tmp_path / "cube.nc"
    write_netcdf(cube, path, history="test")
    with netcdf.netcdf_file(str(path), "r", mmap=False) as nc:
        assert nc.version_byte == 2
        values = nc.variables[DATA_VARIABLE].data
        assert values.shape == cube.shape
        assert np.array_equal(values.astype(np.float32), cube.data, equal_nan=True)
        np.testing.assert_array_equal(nc.variables["x"].data, cube.grid.x_centers())
        np.testing.assert_array_equal(nc.variables["band"].data, np.arange(1, BAND_COUNT + 1))
        assert nc.variables[DATA_VARIABLE].grid_mapping == b"crs"
        assert nc.Conventions == b"CF-1.8"
        labels = nc.variables["scene_id"].data
        assert [b"".join(row).rstrip(b"\x00").decode() for row in labels] == list(cube.scene_ids)


def test_we_read_scipy_classic_file(tmp_path):
    netcdf = pytest.importorskip("scipy.io")
    path = tmp_path / "classic.nc"
    data = np.arange(2 * BAND_COUNT * 3 * 4, dtype=np.float32).reshape(2, BAND_COUNT, 3, 4)
    with netcdf.netcdf_file(str(path), "w", version=1) as nc:
        nc.sensors = "Sentinel2,Landsat9"
        nc.scene_ids = "a,b"
        for name, size in (("time", 2), ("band", BAND_COUNT), ("y", 3), ("x", 4)):
            nc.createDimension(name, size)
        nc.createVariable("time", "d", ("time",))[:] = [0.0, 86400.0]
        nc.createVariable("band", "i", ("band",))[:] = np.arange(1, BAND_COUNT + 1)
        nc.createVariable("y", "d", ("y",))[:] = [95.0, 85.0, 75.0]
        nc.createVariable("x", "d", ("x",))[:] = [5.0, 15.0, 25.0, 35.0]
        crs = nc.createVariable("crs", "i", ())
        crs.assignValue(0)
        crs.epsg_code = "EPSG:32634"
        nc.createVariable(DATA_VARIABLE, "f", ("time", "band", "y", "x"))[:] = data
    cube = read_netcdf(path)
    assert cube.grid == GridSpec(UTM34N, 0.0, 100.0, 10.0, 10.0, 4, 3)
    assert cube.times == (utc(1970, 1, 1), utc(1970, 1, 2))
    assert [s.value for s in cube.sensors] == ["Sentinel2", "Landsat9"]
    np.testing.assert_array_equal(cube.data, data)


# ================================
# 🔹 ERRORS
# ================================

def test_not_netcdf(tmp_path):
    path = tmp_path / "plain.nc"
    path.write_bytes(b"hello world, not a cube")
    with pytest.raises(NotNetcdf):
        read_netcdf(path)
    path.write_bytes(b"CDF\x05" + bytes(28))
    with pytest.raises(NotNetcdf):
        read_netcdf(path)


def test_empty_classic_file_misses_variables(tmp_path):
    path = tmp_path / "empty.nc"
    path.write_bytes(b"CDF\x01" + struct.pack(">i", 0) + bytes(24))
    with pytest.raises(SchemaError):
        read_netcdf(path)


# Test that a band dimension other than 43 is rejected
def test_band_dimension_12_is_schema_error(tmp_path):
    netcdf = pytest.importorskip("scipy.io")
    path = tmp_path / "twelve.nc"
    with netcdf.netcdf_file(str(path), "w", version=2) as nc:
        nc.sensors = "Sentinel2"
        nc.scene_ids = "a"
        for name, size in (("time", 1), ("band", 12), ("y", 2), ("x", 2)):
            nc.createDimension(name, size)
        nc.createVariable("time", "d", ("time",))[:] = [0.0]
        nc.createVariable("band", "i", ("band",))[:] = np.arange(1, 13)
        nc.createVariable("y", "d", ("y",))[:] = [15.0, 5.0]
        nc.createVariable("x", "d", ("x",))[:] = [5.0, 15.0]
        crs = nc.createVariable("crs", "i", ())
        crs.assignValue(0)
        crs.epsg_code = "EPSG:32634"
        nc.createVariable(DATA_VARIABLE, "f", ("time", "band", "y", "x"))[:] = np.zeros((1, 12, 2, 2))
    with pytest.raises(SchemaError):
        read_netcdf(path)


def test_truncated_files(cube, tmp_path):
    path = tmp_path / "cube.nc"
    write_netcdf(cube, path, history="test")
    raw = path.read_bytes()
    (tmp_path / "head.nc").write_bytes(raw[:200])
    with pytest.raises(ParseError):
        read_netcdf(tmp_path / "head.nc")
    (tmp_path / "tail.nc").write_bytes(raw[:-16])
    with pytest.raises(ParseError):
        read_netcdf(tmp_path / "tail.nc")


def test_too_large(cube, tmp_path, monkeypatch):
    monkeypatch.setattr(netcdf_io, "MAX_VSIZE", 1024)
    with pytest.raises(TooLarge):
        write_netcdf(cube, tmp_path / "big.nc", history="test")
    assert not (tmp_path / "big.nc").exists()


def test_write_error(cube, tmp_path):
    with pytest.raises(WriteError):
        write_netcdf(cube, tmp_path / "missing" / "cube.nc", history="test")
