import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# ================================
# 🔹 CONFIGURATION & INITIAL SETUP
# ================================


def _float_env(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"{name} must be a number, got {raw!r}")


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}")
    if value < 1:
        raise ValueError(f"{name} must be >= 1, got {value}")
    return value


LOG_LEVEL = os.getenv("OCEANDC_LOG_LEVEL", "INFO").upper()
JOBS = _int_env("OCEANDC_JOBS", os.cpu_count() or 1)

# Pins the NetCDF "history" attribute so repeated builds are byte-identical
HISTORY = os.getenv("OCEANDC_HISTORY") or None

# Radiometric defaults (Landsat Collection-2 Level-2 / Sentinel-2 L2A quantification)
LANDSAT_SCALE = _float_env("OCEANDC_LANDSAT_SCALE", 0.0000275)
LANDSAT_OFFSET = _float_env("OCEANDC_LANDSAT_OFFSET", -0.2)
SENTINEL2_SCALE = _float_env("OCEANDC_SENTINEL2_SCALE", 0.0001)
SENTINEL2_OFFSET = _float_env("OCEANDC_SENTINEL2_OFFSET", 0.0)

# Reflectance window; values outside become fill
REFLECTANCE_MIN = _float_env("OCEANDC_REFLECTANCE_MIN", -0.2)
REFLECTANCE_MAX = _float_env("OCEANDC_REFLECTANCE_MAX", 1.6)

if REFLECTANCE_MIN >= REFLECTANCE_MAX:
    raise ValueError("OCEANDC_REFLECTANCE_MIN must be lower than OCEANDC_REFLECTANCE_MAX.")
