"""``oceandc`` command line: build, info, classify, schemes."""

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from . import config
from .bands import BandId, Sensor, band_id_of
from .classify import class_histogram, classify, scheme_for, scheme_index, schemes_as_json
from .cube import build_hypercube
from .errors import (EXIT_IO, EXIT_OK, ConfigError, DuplicateTimestamp, NoScheme, OceanDCError,
                     TimeIndexError, UnknownBand)
from .harmonize import compute_clip_box, target_grid_for
from .model import HyperCube, Scene, as_utc
from .netcdf_io import read_netcdf, write_netcdf
from .raster_io import read_geotiff, read_metadata, read_shapefile_polygons, write_geotiff

logger = logging.getLogger(__name__)

CLASS_NODATA = 255


# ================================
# 🔹 BUILD CONFIGURATION
# ================================

class AoiConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    path: Path
    epsg: int


class SceneConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sensor: Sensor
    acquired_at: datetime
    bands: Dict[str, Path] = Field(min_length=1)
    metadata: Path
    scene_id: str = ""

    @field_validator("sensor", mode="before")
    @classmethod
    def parse_sensor(cls, v):
        return Sensor.parse(v)


class ClassificationConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    index: str
    output: Path
    time: Optional[int] = Field(default=None, ge=0)

    @field_validator("index")
    @classmethod
    def known_index(cls, v: str) -> str:
        try:
            # OSI has a table for every sensor
            scheme_for(v, Sensor.SENTINEL2)
        except (UnknownBand, NoScheme) as e:
            raise ValueError(str(e))
        return v


class BuildConfig(BaseModel):
    """Declarative description of one cube build (JSON)."""

    model_config = ConfigDict(extra="forbid")

    aoi: AoiConfig
    target_epsg: Optional[int] = None
    target_resolution: float = Field(gt=0)
    scenes: List[SceneConfig] = Field(min_length=1)
    output: Path
    products: Optional[List[BandId]] = None
    classifications: List[ClassificationConfig] = Field(default_factory=list)

    @field_validator("products", mode="before")
    @classmethod
    def parse_products(cls, v):
        if v is None:
            return v
        if not isinstance(v, list):
            raise ValueError("products must be a list of band ids or labels")
        try:
            return [band_id_of(p) for p in v]
        except UnknownBand as e:
            raise ValueError(str(e))

    def resolved(self, base: Path) -> "BuildConfig":
        """Copy with every relative path anchored at ``base``."""
        def fix(p: Path) -> Path:
            return p if p.is_absolute() else base / p

        return self.model_copy(update={
            "aoi": self.aoi.model_copy(update={"path": fix(self.aoi.path)}),
            "output": fix(self.output),
            "scenes": [s.model_copy(update={"bands": {k: fix(v) for k, v in s.bands.items()},
                                            "metadata": fix(s.metadata)}) for s in self.scenes],
            "classifications": [c.model_copy(update={"output": fix(c.output)}) for c in self.classifications],
        })


def _json_path(loc: Sequence[Any]) -> str:
    path = "$"
    for part in loc:
        path += f"[{part}]" if isinstance(part, int) else f".{part}"
    return path


def load_build_config(path: Path) -> BuildConfig:
    """Parse and validate a build configuration; failures name the JSON path."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}", stage="config")
    try:
        cfg = BuildConfig.model_validate(raw)
    except ValidationError as e:
        problems = "; ".join(f"{_json_path(err['loc'])}: {err['msg']}" for err in e.errors())
        raise ConfigError(problems, stage="config")

    seen: Dict[datetime, int] = {}
    for i, scene in enumerate(cfg.scenes):
        moment = as_utc(scene.acquired_at)
        if moment in seen:
            raise DuplicateTimestamp(f"$.scenes[{i}].acquired_at repeats $.scenes[{seen[moment]}].acquired_at "
                                     f"({moment.isoformat()})", stage="config")
        seen[moment] = i
    return cfg.resolved(Path(path).resolve().parent)


# ================================
# 🔹 HELPERS
# ================================

@contextmanager
def _stage(name: str, **context: Any) -> Iterator[None]:
    try:
        yield
    except OceanDCError as e:
        e.add_context(stage=name, **context)
        raise


def _load_scene(scene_cfg: SceneConfig) -> Scene:
    label = scene_cfg.scene_id or None
    with _stage("read", scene=label):
        radiometry = read_metadata(scene_cfg.metadata, scene_cfg.sensor)
        bands = {}
        for native, path in scene_cfg.bands.items():
            with _stage("read", band=native):
                bands[native] = read_geotiff(path)
        return Scene(sensor=scene_cfg.sensor, acquired_at=scene_cfg.acquired_at, native_bands=bands,
                     radiometry=radiometry, scene_id=scene_cfg.scene_id)


def _slice_summary(cube: HyperCube) -> List[Dict[str, Any]]:
    fill = cube.fill_fractions()
    return [
        {
            "time": t.isoformat(),
            "sensor": sensor.value,
            "scene_id": scene_id,
            "fill_percent": round(float(fill[i].mean()) * 100.0, 2),
        }
        for i, (t, sensor, scene_id) in enumerate(zip(cube.times, cube.sensors, cube.scene_ids))
    ]


def _write_class_raster(cube: HyperCube, index: str, t: int, out: Path) -> Dict[str, int]:
    if not 0 <= t < len(cube.times):
        raise TimeIndexError(f"time index {t} out of range for {len(cube.times)} slice(s)", stage="classify")
    band = scheme_index(index)
    with _stage("classify", scene=cube.scene_ids[t], band=band.label):
        scheme = scheme_for(band, cube.sensors[t])
        codes = classify(cube.plane(t, band), scheme, band)
        write_geotiff(out, codes, dtype="uint8", nodata=CLASS_NODATA)
    histogram = class_histogram(codes, scheme)
    logger.info("✅ %s slice %d classified with %s → %s", band.label, t, scheme.name, out)
    return histogram


# ================================
# 🔹 COMMANDS
# ================================

def cmd_build(config_path: Path, jobs: Optional[int] = None, as_json: bool = False) -> int:
    cfg = load_build_config(config_path)
    jobs = jobs or config.JOBS

    with _stage("aoi"):
        polygons = read_shapefile_polygons(cfg.aoi.path, cfg.aoi.epsg)
        aoi = compute_clip_box(polygons)
        target = target_grid_for(aoi, cfg.target_resolution, cfg.target_epsg)
    logger.info("🔹 Target grid %dx%d @ %g, EPSG:%d", target.width, target.height, target.pixel_size_x, target.epsg)

    if jobs > 1 and len(cfg.scenes) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            scenes = list(pool.map(_load_scene, cfg.scenes))
    else:
        scenes = [_load_scene(s) for s in cfg.scenes]

    with _stage("cube"):
        cube = build_hypercube(scenes, target, cfg.products, jobs=jobs)
    with _stage("write"):
        write_netcdf(cube, cfg.output)

    written = []
    for item in cfg.classifications:
        steps = [item.time] if item.time is not None else list(range(len(cube.times)))
        for t in steps:
            out = item.output
            if item.time is None and len(cube.times) > 1:
                out = out.with_name(f"{out.stem}_t{t}{out.suffix}")
            _write_class_raster(cube, item.index, t, out)
            written.append(str(out))

    summary = {
        "output": str(cfg.output),
        "shape": list(cube.shape),
        "epsg": cube.grid.epsg,
        "resolution": cube.grid.pixel_size_x,
        "slices": _slice_summary(cube),
        "classifications": written,
    }
    if as_json:
        print(json.dumps(summary, indent=2))
    else:
        t, b, h, w = cube.shape
        print(f"✅ Cube written to {cfg.output}")
        print(f"   T={t}, bands={b}, grid={w}x{h} @ {cube.grid.pixel_size_x:g} (EPSG:{cube.grid.epsg})")
        for row in summary["slices"]:
            print(f"   {row['time']}  {row['sensor']:<10} {row['scene_id']:<32} fill {row['fill_percent']:6.2f}%")
        for path in written:
            print(f"   📄 {path}")
    return EXIT_OK


def cmd_info(path: Path, as_json: bool = False) -> int:
    with _stage("read"):
        cube = read_netcdf(path)
    fill = cube.fill_fractions() * 100.0
    t, b, h, w = cube.shape
    if as_json:
        print(json.dumps({
            "path": str(path),
            "dimensions": {"time": t, "band": b, "y": h, "x": w},
            "epsg": cube.grid.epsg,
            "origin": [cube.grid.origin_x, cube.grid.origin_y],
            "pixel_size": [cube.grid.pixel_size_x, cube.grid.pixel_size_y],
            "times": [m.isoformat() for m in cube.times],
            "sensors": [s.value for s in cube.sensors],
            "scene_ids": list(cube.scene_ids),
            "bands": [
                {"id": int(band), "label": band.label, "fill_percent": [round(float(v), 2) for v in fill[:, band - 1]]}
                for band in BandId
            ],
        }, indent=2))
        return EXIT_OK

    print(f"📄 {path}")
    print(f"   dimensions: time={t} band={b} y={h} x={w}")
    print(f"   EPSG:{cube.grid.epsg}  origin=({cube.grid.origin_x:g}, {cube.grid.origin_y:g})  "
          f"pixel={cube.grid.pixel_size_x:g}x{cube.grid.pixel_size_y:g}")
    for i, (moment, sensor, scene_id) in enumerate(zip(cube.times, cube.sensors, cube.scene_ids)):
        print(f"   t{i}: {moment.isoformat()}  {sensor.value}  {scene_id}")
    print("   fill % per band and slice:")
    for band in BandId:
        cells = " ".join(f"{v:6.1f}" for v in fill[:, band - 1])
        print(f"   {int(band):>2} {band.label:<16} {cells}")
    return EXIT_OK


def cmd_classify(path: Path, index: str, time: int, out: Path, as_json: bool = False) -> int:
    with _stage("read"):
        cube = read_netcdf(path)
    histogram = _write_class_raster(cube, index, time, out)
    if as_json:
        print(json.dumps({"output": str(out), "counts": histogram}, indent=2, ensure_ascii=False))
    else:
        print(f"✅ Class raster written to {out}")
        for label, count in histogram.items():
            print(f"   {label:<40} {count}")
    return EXIT_OK


def cmd_schemes() -> int:
    print(schemes_as_json())
    return EXIT_OK


# ================================
# 🔹 ENTRY POINT
# ================================

def _diagnostic(error: BaseException) -> str:
    context = getattr(error, "context", {})
    return json.dumps({
        "error": type(error).__name__,
        "message": getattr(error, "message", "") or str(error),
        "stage": context.get("stage"),
        "scene": context.get("scene"),
        "band": context.get("band"),
    }, default=str)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oceandc", description="Harmonized Landsat/Sentinel-2 data cubes.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build", help="build a NetCDF hypercube from a JSON configuration")
    build.add_argument("--config", required=True, type=Path)
    build.add_argument("--jobs", type=int, default=None, help=f"parallel scenes (default {config.JOBS})")
    build.add_argument("--json", action="store_true", help="machine-readable summary")

    info = sub.add_parser("info", help="describe a cube file")
    info.add_argument("path", type=Path)
    info.add_argument("--json", action="store_true")

    cls = sub.add_parser("classify", help="write a class-code GeoTIFF for one index and slice")
    cls.add_argument("path", type=Path)
    cls.add_argument("--index", required=True)
    cls.add_argument("--time", type=int, default=0)
    cls.add_argument("--out", required=True, type=Path)
    cls.add_argument("--json", action="store_true")

    sub.add_parser("schemes", help="print the built-in classification schemes as JSON")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else config.LOG_LEVEL, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "build":
            if args.jobs is not None and args.jobs < 1:
                raise ConfigError("--jobs must be >= 1", stage="config")
            return cmd_build(args.config, args.jobs, args.json)
        if args.command == "info":
            return cmd_info(args.path, args.json)
        if args.command == "classify":
            return cmd_classify(args.path, args.index, args.time, args.out, args.json)
        return cmd_schemes()
    except OceanDCError as e:
        logger.error("❌ %s", e)
        print(_diagnostic(e), file=sys.stderr)
        return e.exit_code
    except OSError as e:
        logger.error("❌ %s", e)
        print(_diagnostic(e), file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
