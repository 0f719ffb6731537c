"""Spatial harmonization: AOI box, nearest-neighbour reprojection, clipping and
pseudo-resolution resampling onto one shared target grid.

Pipeline order per band is reproject → clip → resample. A band in the target
CRS whose pixel edges fall on target pixel edges (native size an integer
multiple k of the target resolution) is clipped and split into k×k blocks.
Any other band is reprojected straight onto the target grid with the same
nearest-neighbour rule, so each target centre takes its containing source pixel.
"""

import logging
import math
import warnings
from typing import Optional, Sequence

import numpy as np

from .errors import (AllFillWarning, CrsMismatch, EmptyGeometry, EmptyIntersection, NonIntegerRatio,
                     OceanDCError)
from .geodesy import transform_bbox, transform_points
from .model import BBox, GridSpec, Polygon, Raster2D, Scene

logger = logging.getLogger(__name__)

# Tolerances: pixel-lattice snapping and integer-ratio detection
_SNAP_EPS = 1e-9
_RATIO_EPS = 1e-6


# -----------------------------------------------
# 🔹 Function: AOI
# -----------------------------------------------

def compute_clip_box(polygons: Sequence[Polygon]) -> BBox:
    """Min/max box over every vertex of every polygon."""
    if not polygons:
        raise EmptyGeometry("no polygons given for the area of interest")
    epsgs = {p.epsg for p in polygons}
    if len(epsgs) > 1:
        raise CrsMismatch(f"AOI polygons use different CRSs: {sorted(epsgs)}")
    vertices = np.array([v for polygon in polygons for v in polygon.vertices], dtype=np.float64)
    return BBox(float(vertices[:, 0].min()), float(vertices[:, 1].min()),
                float(vertices[:, 0].max()), float(vertices[:, 1].max()), epsgs.pop())


def target_grid_for(aoi: BBox, resolution: float, epsg: Optional[int] = None) -> GridSpec:
    """Target grid: the AOI box in the target CRS, snapped outward to multiples of ``resolution``."""
    epsg = aoi.epsg if epsg is None else int(epsg)
    return GridSpec.covering(transform_bbox(aoi, epsg), resolution)


# -----------------------------------------------
# 🔹 Function: Single-raster operations
# -----------------------------------------------

def reproject_raster(src: Raster2D, dst_grid: GridSpec) -> Raster2D:
    """Nearest-neighbour reprojection: each destination centre copies the source pixel containing it."""
    if src.grid == dst_grid:
        return Raster2D(dst_grid, src.values)

    xs, ys = np.meshgrid(dst_grid.x_centers(), dst_grid.y_centers())
    if src.grid.epsg != dst_grid.epsg:
        pts = transform_points(np.column_stack([xs.ravel(), ys.ravel()]), dst_grid.epsg, src.grid.epsg)
        xs = pts[:, 0].reshape(dst_grid.shape)
        ys = pts[:, 1].reshape(dst_grid.shape)

    col, row = src.grid.to_pixel(xs, ys)
    col = np.floor(col)
    row = np.floor(row)
    hit = (np.isfinite(col) & np.isfinite(row)
           & (col >= 0) & (col < src.grid.width) & (row >= 0) & (row < src.grid.height))

    out = np.full(dst_grid.shape, np.nan, dtype=np.float32)
    out[hit] = src.values[row[hit].astype(np.intp), col[hit].astype(np.intp)]
    if not hit.any():
        logger.warning("⚠️ Reprojection EPSG:%d → EPSG:%d hit no source pixel", src.grid.epsg, dst_grid.epsg)
        warnings.warn(AllFillWarning("reprojection produced no valid destination pixel"), stacklevel=2)
    return Raster2D(dst_grid, out)


def clip_raster(src: Raster2D, bbox: BBox) -> Raster2D:
    """Smallest pixel-aligned window of ``src`` that contains ``bbox`` (outward snap)."""
    grid = src.grid
    if bbox.epsg != grid.epsg:
        raise CrsMismatch(f"clip box is EPSG:{bbox.epsg}, raster is EPSG:{grid.epsg}")
    if not grid.bounds.intersects(bbox):
        raise EmptyIntersection(f"clip box {bbox.as_tuple()} does not intersect raster extent "
                                f"{grid.bounds.as_tuple()}")
    c0 = max(0, math.floor((bbox.min_x - grid.origin_x) / grid.pixel_size_x + _SNAP_EPS))
    c1 = min(grid.width, math.ceil((bbox.max_x - grid.origin_x) / grid.pixel_size_x - _SNAP_EPS))
    r0 = max(0, math.floor((grid.origin_y - bbox.max_y) / grid.pixel_size_y + _SNAP_EPS))
    r1 = min(grid.height, math.ceil((grid.origin_y - bbox.min_y) / grid.pixel_size_y - _SNAP_EPS))
    if c1 <= c0 or r1 <= r0:
        raise EmptyIntersection(f"clip box {bbox.as_tuple()} covers no whole pixel")
    if (c0, r0, c1, r1) == (0, 0, grid.width, grid.height):
        return src
    clipped = grid.with_shape(grid.origin_x + c0 * grid.pixel_size_x,
                              grid.origin_y - r0 * grid.pixel_size_y, c1 - c0, r1 - r0)
    return Raster2D(clipped, src.values[r0:r1, c0:c1])


def _integer_ratio(pixel_size: float, target_res: float) -> Optional[int]:
    ratio = pixel_size / target_res
    k = round(ratio)
    if k >= 1 and abs(ratio - k) < _RATIO_EPS:
        return int(k)
    return None


def resample_nn(src: Raster2D, target_res: float) -> Raster2D:
    """Pseudo-resolution: split every pixel into a k×k block of its own value."""
    if not target_res > 0:
        raise NonIntegerRatio(float("nan"))
    kx = _integer_ratio(src.grid.pixel_size_x, target_res)
    ky = _integer_ratio(src.grid.pixel_size_y, target_res)
    if kx is None:
        raise NonIntegerRatio(src.grid.pixel_size_x / target_res)
    if ky is None:
        raise NonIntegerRatio(src.grid.pixel_size_y / target_res)
    if kx == 1 and ky == 1:
        return src
    grid = GridSpec(src.grid.epsg, src.grid.origin_x, src.grid.origin_y,
                    src.grid.pixel_size_x / kx, src.grid.pixel_size_y / ky,
                    src.grid.width * kx, src.grid.height * ky)
    return Raster2D(grid, np.repeat(np.repeat(src.values, ky, axis=0), kx, axis=1))


# -----------------------------------------------
# 🔹 Function: Scene harmonization
# -----------------------------------------------

def _aligned_factor(grid: GridSpec, target: GridSpec) -> Optional[int]:
    """Block factor k when source pixel edges fall on target pixel edges, else None."""
    if grid.epsg != target.epsg or target.pixel_size_x != target.pixel_size_y:
        return None
    kx = _integer_ratio(grid.pixel_size_x, target.pixel_size_x)
    ky = _integer_ratio(grid.pixel_size_y, target.pixel_size_y)
    if kx is None or kx != ky:
        return None
    shift_x = (grid.origin_x - target.origin_x) / target.pixel_size_x
    shift_y = (target.origin_y - grid.origin_y) / target.pixel_size_y
    if abs(shift_x - round(shift_x)) > _RATIO_EPS or abs(shift_y - round(shift_y)) > _RATIO_EPS:
        return None
    return kx


def _fit_to_grid(raster: Raster2D, target: GridSpec) -> Raster2D:
    """Place a raster sharing the target lattice onto the exact target window."""
    if raster.grid == target:
        return raster
    dc = int(round((raster.grid.origin_x - target.origin_x) / target.pixel_size_x))
    dr = int(round((target.origin_y - raster.grid.origin_y) / target.pixel_size_y))
    out = np.full(target.shape, np.nan, dtype=np.float32)
    t_r0, t_c0 = max(0, dr), max(0, dc)
    t_r1 = min(target.height, dr + raster.grid.height)
    t_c1 = min(target.width, dc + raster.grid.width)
    if t_r1 > t_r0 and t_c1 > t_c0:
        out[t_r0:t_r1, t_c0:t_c1] = raster.values[t_r0 - dr:t_r1 - dr, t_c0 - dc:t_c1 - dc]
    return Raster2D(target, out)


def harmonize_band(raster: Raster2D, target: GridSpec) -> Raster2D:
    """Bring one native band onto ``target`` (reproject → clip → resample).

    Every target centre ends up with the value of the source pixel containing it.
    """
    footprint = transform_bbox(raster.grid.bounds, target.epsg)
    if not footprint.intersects(target.bounds):
        raise EmptyIntersection(f"raster footprint {footprint.as_tuple()} misses the target grid "
                                f"{target.bounds.as_tuple()}")

    k = _aligned_factor(raster.grid, target)
    if k is None:
        logger.debug("Pixel lattice %g @ (%g, %g) does not nest in the target grid; reprojecting directly",
                     raster.grid.pixel_size_x, raster.grid.origin_x, raster.grid.origin_y)
        return reproject_raster(raster, target)

    # same CRS and nested lattices: reprojection is the identity
    clipped = clip_raster(raster, target.bounds)
    fine = resample_nn(clipped, target.pixel_size_x)
    return _fit_to_grid(fine, target)


def harmonize_scene(scene: Scene, target: GridSpec) -> Scene:
    """Harmonize every native band of a scene onto one shared target grid."""
    bands = {}
    for label, raster in scene.native_bands.items():
        try:
            bands[label] = harmonize_band(raster, target)
        except OceanDCError as e:
            raise e.add_context(stage="harmonize", scene=scene.scene_id, band=label)
    logger.info("🔹 Harmonized %s: %d band(s) onto %dx%d @ %g (EPSG:%d)", scene.scene_id, len(bands),
                target.width, target.height, target.pixel_size_x, target.epsg)
    return Scene(sensor=scene.sensor, acquired_at=scene.acquired_at, native_bands=bands,
                 radiometry=scene.radiometry, scene_id=scene.scene_id)
