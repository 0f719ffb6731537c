"""Minimal EPSG registry (WGS-84 + UTM zones) and transverse Mercator math.

The projection uses the Krüger series in the third flattening n, truncated at
order 6, which stays below a millimetre inside the UTM validity domain.
Angles are degrees at the API boundary and radians internally.
"""

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Any, Tuple

import numpy as np

from .errors import InvalidValue, OutOfProjectionDomain, UnsupportedCrs
from .model import BBox

WGS84_A = 6378137.0
WGS84_INV_F = 298.257223563
UTM_K0 = 0.9996
UTM_FALSE_EASTING = 500000.0
UTM_FALSE_NORTHING_SOUTH = 10000000.0

MAX_LATITUDE = 84.0
MAX_LON_OFFSET = 60.0

GEOGRAPHIC_EPSG = 4326
UTM_NORTH_EPSG = range(32601, 32661)
UTM_SOUTH_EPSG = range(32701, 32761)


class CrsKind(str, Enum):
    GEOGRAPHIC = "geographic"
    TRANSVERSE_MERCATOR = "projected-TM"


@dataclass(frozen=True)
class CrsDef:
    epsg: int
    kind: CrsKind
    a: float = WGS84_A
    f: float = 1.0 / WGS84_INV_F
    lon0: float = 0.0
    k0: float = 1.0
    false_easting: float = 0.0
    false_northing: float = 0.0

    def __post_init__(self):
        if not (self.a > 0 and 0 < self.f < 1 and self.k0 > 0):
            raise InvalidValue(f"invalid ellipsoid/scale for EPSG:{self.epsg}")

    @property
    def is_geographic(self) -> bool:
        return self.kind is CrsKind.GEOGRAPHIC

    @property
    def utm_zone(self) -> int:
        return self.epsg % 100 if not self.is_geographic else 0

    @property
    def units(self) -> str:
        return "degree" if self.is_geographic else "metre"


@lru_cache(maxsize=256)
def epsg_lookup(code: int) -> CrsDef:
    """Registry lookup: 4326, 32601–32660 (UTM north), 32701–32760 (UTM south)."""
    try:
        code = int(code)
    except (TypeError, ValueError):
        raise UnsupportedCrs(code)
    if code == GEOGRAPHIC_EPSG:
        return CrsDef(epsg=code, kind=CrsKind.GEOGRAPHIC)
    if code in UTM_NORTH_EPSG or code in UTM_SOUTH_EPSG:
        zone = code % 100
        south = code in UTM_SOUTH_EPSG
        return CrsDef(
            epsg=code,
            kind=CrsKind.TRANSVERSE_MERCATOR,
            lon0=-183.0 + 6.0 * zone,
            k0=UTM_K0,
            false_easting=UTM_FALSE_EASTING,
            false_northing=UTM_FALSE_NORTHING_SOUTH if south else 0.0,
        )
    raise UnsupportedCrs(code)


def utm_epsg_for(lon: float, lat: float) -> int:
    """EPSG code of the UTM zone containing a point."""
    zone = int((lon + 180.0) // 6.0) % 60 + 1
    return (32600 if lat >= 0 else 32700) + zone


# -----------------------------------------------
# 🔹 Krüger series coefficients
# -----------------------------------------------

@lru_cache(maxsize=8)
def _series(a: float, f: float) -> Tuple[float, float, Tuple[float, ...], Tuple[float, ...]]:
    """Rectifying radius A, eccentricity e, forward alphas and inverse betas."""
    n = f / (2.0 - f)
    n2, n3, n4, n5, n6 = n ** 2, n ** 3, n ** 4, n ** 5, n ** 6
    big_a = a / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0)
    alpha = (
        n / 2 - 2 * n2 / 3 + 5 * n3 / 16 + 41 * n4 / 180 - 127 * n5 / 288 + 7891 * n6 / 37800,
        13 * n2 / 48 - 3 * n3 / 5 + 557 * n4 / 1440 + 281 * n5 / 630 - 1983433 * n6 / 1935360,
        61 * n3 / 240 - 103 * n4 / 140 + 15061 * n5 / 26880 + 167603 * n6 / 181440,
        49561 * n4 / 161280 - 179 * n5 / 168 + 6601661 * n6 / 7257600,
        34729 * n5 / 80640 - 3418889 * n6 / 1995840,
        212378941 * n6 / 319334400,
    )
    beta = (
        n / 2 - 2 * n2 / 3 + 37 * n3 / 96 - n4 / 360 - 81 * n5 / 512 + 96199 * n6 / 604800,
        n2 / 48 + n3 / 15 - 437 * n4 / 1440 + 46 * n5 / 105 - 1118711 * n6 / 3870720,
        17 * n3 / 480 - 37 * n4 / 840 - 209 * n5 / 4480 + 5569 * n6 / 90720,
        4397 * n4 / 161280 - 11 * n5 / 504 - 830251 * n6 / 7257600,
        4583 * n5 / 161280 - 108847 * n6 / 3991680,
        20648693 * n6 / 638668800,
    )
    e = math.sqrt(f * (2.0 - f))
    return big_a, e, alpha, beta


def _require_tm(crs: CrsDef) -> None:
    if crs.kind is not CrsKind.TRANSVERSE_MERCATOR:
        raise UnsupportedCrs(f"{crs.epsg} (not a transverse Mercator CRS)")


def _wrap_degrees(delta: np.ndarray) -> np.ndarray:
    return (delta + 180.0) % 360.0 - 180.0


def _unwrap(values: np.ndarray, scalar: bool) -> Any:
    return float(values) if scalar else values


# -----------------------------------------------
# 🔹 Function: Forward projection
# -----------------------------------------------

def tm_forward(lat: Any, lon: Any, crs: CrsDef) -> Tuple[Any, Any]:
    """Geographic degrees → (easting, northing) metres. Accepts scalars or arrays."""
    _require_tm(crs)
    scalar = np.ndim(lat) == 0 and np.ndim(lon) == 0
    lat = np.asarray(lat, dtype=np.float64)
    lon = np.asarray(lon, dtype=np.float64)
    dlon = _wrap_degrees(lon - crs.lon0)
    if np.any(~np.isfinite(lat)) or np.any(~np.isfinite(lon)):
        raise OutOfProjectionDomain("non-finite geographic coordinate")
    if np.any(np.abs(lat) > MAX_LATITUDE) or np.any(np.abs(dlon) > MAX_LON_OFFSET):
        raise OutOfProjectionDomain(
            f"point outside the series domain (|lat| <= {MAX_LATITUDE}, |lon - {crs.lon0}| <= {MAX_LON_OFFSET})")

    big_a, e, alpha, _ = _series(crs.a, crs.f)
    phi = np.radians(lat)
    lam = np.radians(dlon)

    # conformal latitude, via tau' = tan(chi)
    sin_phi = np.sin(phi)
    tau_p = np.sinh(np.arctanh(sin_phi) - e * np.arctanh(e * sin_phi))
    xi_p = np.arctan2(tau_p, np.cos(lam))
    eta_p = np.arctanh(np.sin(lam) / np.sqrt(tau_p ** 2 + np.cos(lam) ** 2))

    xi = xi_p.copy()
    eta = eta_p.copy()
    for j, coef in enumerate(alpha, start=1):
        xi += coef * np.sin(2 * j * xi_p) * np.cosh(2 * j * eta_p)
        eta += coef * np.cos(2 * j * xi_p) * np.sinh(2 * j * eta_p)

    easting = crs.false_easting + crs.k0 * big_a * eta
    northing = crs.false_northing + crs.k0 * big_a * xi
    return _unwrap(easting, scalar), _unwrap(northing, scalar)


# -----------------------------------------------
# 🔹 Function: Inverse projection
# -----------------------------------------------

def tm_inverse(easting: Any, northing: Any, crs: CrsDef) -> Tuple[Any, Any]:
    """(easting, northing) metres → geographic (lat, lon) degrees."""
    _require_tm(crs)
    scalar = np.ndim(easting) == 0 and np.ndim(northing) == 0
    x = np.asarray(easting, dtype=np.float64) - crs.false_easting
    y = np.asarray(northing, dtype=np.float64) - crs.false_northing
    if np.any(~np.isfinite(x)) or np.any(~np.isfinite(y)):
        raise OutOfProjectionDomain("non-finite projected coordinate")

    big_a, e, _, beta = _series(crs.a, crs.f)
    xi = y / (crs.k0 * big_a)
    eta = x / (crs.k0 * big_a)
    if np.any(np.abs(xi) > math.pi / 2 + 1e-12) or np.any(np.abs(eta) > 2.0):
        raise OutOfProjectionDomain("projected point outside the series domain")

    xi_p = xi.copy()
    eta_p = eta.copy()
    for j, coef in enumerate(beta, start=1):
        xi_p -= coef * np.sin(2 * j * xi) * np.cosh(2 * j * eta)
        eta_p -= coef * np.cos(2 * j * xi) * np.sinh(2 * j * eta)

    sinh_eta = np.sinh(eta_p)
    cos_xi = np.cos(xi_p)
    tau_p = np.sin(xi_p) / np.sqrt(sinh_eta ** 2 + cos_xi ** 2)
    lam = np.arctan2(sinh_eta, cos_xi)

    # Newton iteration for tau = tan(phi) from the conformal tau'
    e2m = 1.0 - e * e
    tau = tau_p.copy()
    for _ in range(8):
        sigma = np.sinh(e * np.arctanh(e * tau / np.sqrt(1.0 + tau ** 2)))
        tau_i = tau * np.sqrt(1.0 + sigma ** 2) - sigma * np.sqrt(1.0 + tau ** 2)
        delta = ((tau_p - tau_i) / np.sqrt(1.0 + tau_i ** 2)
                 * (1.0 + e2m * tau ** 2) / (e2m * np.sqrt(1.0 + tau ** 2)))
        tau = tau + delta
        if np.all(np.abs(delta) <= 1e-14 * np.maximum(1.0, np.abs(tau))):
            break

    lat = np.degrees(np.arctan(tau))
    lon = _wrap_degrees(np.degrees(lam) + crs.lon0)
    if np.any(np.abs(lat) > MAX_LATITUDE + 1e-9) or np.any(np.abs(np.degrees(lam)) > MAX_LON_OFFSET + 1e-9):
        raise OutOfProjectionDomain("projected point maps outside the series domain")
    return _unwrap(lat, scalar), _unwrap(lon, scalar)


# -----------------------------------------------
# 🔹 Function: Batch transforms
# -----------------------------------------------

def transform_points(points: Any, src_epsg: int, dst_epsg: int) -> np.ndarray:
    """Transform an (N, 2) array of (x, y) points; geographic points are (lon, lat)."""
    pts = np.array(points, dtype=np.float64, copy=True)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidValue(f"points must have shape (N, 2), got {pts.shape}")
    src = epsg_lookup(src_epsg)
    dst = epsg_lookup(dst_epsg)
    if src.epsg == dst.epsg:
        return pts

    if src.is_geographic:
        lon, lat = pts[:, 0], pts[:, 1]
    else:
        lat, lon = tm_inverse(pts[:, 0], pts[:, 1], src)

    if dst.is_geographic:
        return np.column_stack([np.asarray(lon, dtype=np.float64), np.asarray(lat, dtype=np.float64)])
    easting, northing = tm_forward(lat, lon, dst)
    return np.column_stack([np.asarray(easting, dtype=np.float64), np.asarray(northing, dtype=np.float64)])


def transform_bbox(bbox: BBox, dst_epsg: int, densify: int = 21) -> BBox:
    """Reproject a box by transforming densified edges and taking the min/max."""
    if bbox.epsg == int(dst_epsg):
        return bbox
    steps = np.linspace(0.0, 1.0, max(2, densify))
    xs = bbox.min_x + steps * (bbox.max_x - bbox.min_x)
    ys = bbox.min_y + steps * (bbox.max_y - bbox.min_y)
    edges = np.concatenate([
        np.column_stack([xs, np.full_like(xs, bbox.min_y)]),
        np.column_stack([xs, np.full_like(xs, bbox.max_y)]),
        np.column_stack([np.full_like(ys, bbox.min_x), ys]),
        np.column_stack([np.full_like(ys, bbox.max_x), ys]),
    ])
    out = transform_points(edges, bbox.epsg, dst_epsg)
    return BBox(float(out[:, 0].min()), float(out[:, 1].min()),
                float(out[:, 0].max()), float(out[:, 1].max()), int(dst_epsg))

