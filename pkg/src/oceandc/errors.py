"""Error hierarchy shared by every oceandc module.

Each error keeps a ``context`` mapping (stage / scene / band) that pipeline
stages fill in while the exception travels up, so the CLI can report where a
build failed without wrapping the original exception type.
"""

from typing import Any, Dict, Optional

# Exit codes used by the CLI
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PIPELINE = 3
EXIT_IO = 4


class OceanDCError(Exception):
    """Base class for all toolkit errors."""

    exit_code = EXIT_PIPELINE

    def __init__(self, message: str = "", **context: Any):
        super().__init__(message)
        self.message = message
        self.context: Dict[str, Any] = {k: v for k, v in context.items() if v is not None}

    def add_context(self, **context: Any) -> "OceanDCError":
        """Attach stage/scene/band information without overwriting what is already known."""
        for key, value in context.items():
            if value is not None and key not in self.context:
                self.context[key] = value
        return self

    def __str__(self) -> str:
        if not self.context:
            return self.message
        where = ", ".join(f"{k}={v}" for k, v in sorted(self.context.items()))
        return f"{self.message} [{where}]"


# ================================
# 🔹 CATALOGUE / MODEL
# ================================

class UnknownBand(OceanDCError, LookupError):
    def __init__(self, label: Any, sensor: Optional[str] = None):
        detail = f" for sensor {sensor}" if sensor else ""
        super().__init__(f"unknown band {label!r}{detail}")
        self.label = label


class InvalidValue(OceanDCError, ValueError):
    """A model invariant was violated at construction time."""


class EmptyGeometry(OceanDCError, ValueError):
    pass


class CrsMismatch(OceanDCError, ValueError):
    pass


# ================================
# 🔹 FILE FORMATS
# ================================

class UnsupportedFormat(OceanDCError, ValueError):
    def __init__(self, feature: str):
        super().__init__(feature)
        self.feature = feature


class ParseError(OceanDCError, ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class MissingGeoreference(OceanDCError, ValueError):
    pass


class UnsupportedShapeType(OceanDCError, ValueError):
    def __init__(self, shape_type: int):
        super().__init__(f"unsupported shape type {shape_type} (only 5 = Polygon is read)")
        self.shape_type = shape_type


class MissingKey(OceanDCError, LookupError):
    def __init__(self, key: str, source: str = ""):
        where = f" in {source}" if source else ""
        super().__init__(f"missing mandatory key {key}{where}")
        self.key = key


# ================================
# 🔹 GEODESY / HARMONIZATION
# ================================

class UnsupportedCrs(OceanDCError, ValueError):
    def __init__(self, epsg: Any):
        super().__init__(f"unsupported CRS EPSG:{epsg}")
        self.epsg = epsg


class OutOfProjectionDomain(OceanDCError, ValueError):
    pass


class EmptyIntersection(OceanDCError, ValueError):
    pass


class NonIntegerRatio(OceanDCError, ValueError):
    def __init__(self, ratio: float):
        super().__init__(f"source/target pixel size ratio {ratio:g} is not an integer >= 1")
        self.ratio = ratio


class AllFillWarning(UserWarning):
    """Reprojection produced no valid destination pixel."""


# ================================
# 🔹 PRODUCTS / CUBES
# ================================

class MissingInput(OceanDCError, ValueError):
    def __init__(self, band: str, sensor: Optional[str] = None, product: Optional[str] = None):
        msg = f"required input {band} is not available"
        if sensor:
            msg += f" for {sensor}"
        if product:
            msg += f" (needed by {product})"
        super().__init__(msg)
        self.band = band
        self.sensor = sensor


class InsufficientHistory(OceanDCError, ValueError):
    pass


class SchemeMismatch(OceanDCError, ValueError):
    pass


class NoScheme(OceanDCError, LookupError):
    pass


class DuplicateTimestamp(OceanDCError, ValueError):
    pass


class GridMismatch(OceanDCError, ValueError):
    def __init__(self, scene: str, detail: str = ""):
        super().__init__(f"scene {scene} does not share the cube grid{': ' + detail if detail else ''}")
        self.scene = scene


# ================================
# 🔹 NETCDF / CLI
# ================================

class WriteError(OceanDCError, OSError):
    exit_code = EXIT_IO


class TooLarge(OceanDCError, ValueError):
    pass


class NotNetcdf(OceanDCError, ValueError):
    exit_code = EXIT_IO


class SchemaError(OceanDCError, ValueError):
    exit_code = EXIT_IO


class ConfigError(OceanDCError, ValueError):
    exit_code = EXIT_CONFIG


class TimeIndexError(OceanDCError, IndexError):
    exit_code = EXIT_CONFIG
