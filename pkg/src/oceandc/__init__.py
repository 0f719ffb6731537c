"""Harmonized Landsat 8/9 and Sentinel-2 data cubes for coastal monitoring."""

from .bands import BAND_COUNT, BandId, Sensor
from .classify import classify, scheme_for
from .cube import assemble_scene, build_hypercube, stack
from .errors import OceanDCError
from .harmonize import harmonize_scene
from .indices import compute_index
from .model import BBox, GridSpec, HyperCube, Raster2D, Scene, SceneCube
from .netcdf_io import read_netcdf, write_netcdf

__version__ = "0.1"

__all__ = [
    "BAND_COUNT",
    "BBox",
    "BandId",
    "GridSpec",
    "HyperCube",
    "OceanDCError",
    "Raster2D",
    "Scene",
    "SceneCube",
    "Sensor",
    "assemble_scene",
    "build_hypercube",
    "classify",
    "compute_index",
    "harmonize_scene",
    "read_netcdf",
    "scheme_for",
    "stack",
    "write_netcdf",
]
