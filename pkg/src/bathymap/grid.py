"""Raster grids: georeferencing, masks, lake labeling, and file I/O.

Axis convention (pinned for the whole toolkit): row 0 is the northernmost
row, ``origin_x``/``origin_y`` are the map coordinates of the outer
top-left corner of pixel (0, 0), and y decreases as row increases.
``world_to_pixel`` uses exact floor semantics, so a point on an interior
pixel edge belongs to the pixel with the larger index along that axis and
the far south/east outer edges are out of bounds.

Band values are 32-bit floats throughout; the default nodata sentinel is
-9999.0, which no physical reflectance or depth value can reach.

Two on-disk formats:

* the portable "bgrid" pair - a text header at ``<path>`` and a flat
  little-endian float32 payload at ``<path>.bin``, band-sequential and
  row-major. Round-trips are bit-exact; every golden test uses it.
* optional GeoTIFF via rasterio or GDAL when one of them is importable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import DataError, FormatError, GeometryMismatchError

DEFAULT_NODATA = -9999.0

BGRID_MAGIC = "BGRID1"

_CONNECT4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.uint8)


@dataclass(frozen=True)
class GridGeometry:
    """Placement of a raster on the map plane.

    origin_x, origin_y: outer corner of pixel (0, 0) in meters (top-left).
    pixel_size: meters per pixel, square pixels.
    crs_tag: opaque identifier; carried, never interpreted.
    """

    origin_x: float
    origin_y: float
    pixel_size: float
    n_rows: int
    n_cols: int
    crs_tag: str = "unspecified"

    def __post_init__(self):
        if self.pixel_size <= 0:
            raise DataError(f"pixel_size must be positive, got {self.pixel_size}")
        if self.n_rows < 1 or self.n_cols < 1:
            raise DataError(f"grid must be at least 1x1, got {self.n_rows}x{self.n_cols}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)


def world_to_pixel(geom: GridGeometry, x: float, y: float) -> tuple[int, int] | None:
    """Return (row, col) of the pixel whose footprint contains (x, y),
    or None when the point falls outside the grid extent."""
    col = math.floor((x - geom.origin_x) / geom.pixel_size)
    row = math.floor((geom.origin_y - y) / geom.pixel_size)
    if 0 <= row < geom.n_rows and 0 <= col < geom.n_cols:
        return row, col
    return None


def world_to_pixel_arrays(
    geom: GridGeometry, x: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized ``world_to_pixel``: (rows, cols, in_bounds mask).

    Row/col values are only meaningful where the mask is True.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    cols = np.floor((x - geom.origin_x) / geom.pixel_size).astype(np.int64)
    rows = np.floor((geom.origin_y - y) / geom.pixel_size).astype(np.int64)
    ok = (rows >= 0) & (rows < geom.n_rows) & (cols >= 0) & (cols < geom.n_cols)
    return rows, cols, ok


def pixel_to_world(geom: GridGeometry, row: int, col: int) -> tuple[float, float]:
    """Map coordinates of the center of pixel (row, col)."""
    x = geom.origin_x + (col + 0.5) * geom.pixel_size
    y = geom.origin_y - (row + 0.5) * geom.pixel_size
    return x, y


@dataclass
class Grid:
    """A georeferenced raster of one or more named float32 bands.

    Immutable by convention after construction: pipeline stages share Grid
    objects across workers and never write into the arrays of an input.
    """

    geometry: GridGeometry
    bands: dict[str, np.ndarray]
    nodata: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        fixed = {}
        for name, arr in self.bands.items():
            arr = np.asarray(arr, dtype=np.float32)
            if arr.shape != self.geometry.shape:
                raise GeometryMismatchError(
                    f"band {name!r} shape {arr.shape} != geometry {self.geometry.shape}"
                )
            fixed[name] = arr
            self.nodata.setdefault(name, DEFAULT_NODATA)
        self.bands = fixed

    @property
    def band_names(self) -> list[str]:
        return list(self.bands)

    def band(self, name: str) -> np.ndarray:
        try:
            return self.bands[name]
        except KeyError:
            raise DataError(f"no band named {name!r}; have {self.band_names}") from None

    def valid_mask(self, name: str) -> np.ndarray:
        """True where the band holds a real observation."""
        arr = self.band(name)
        return (arr != np.float32(self.nodata[name])) & np.isfinite(arr)

    def select(self, names: list[str]) -> "Grid":
        """A Grid view holding only the requested bands (arrays shared)."""
        return Grid(
            self.geometry,
            {n: self.band(n) for n in names},
            {n: self.nodata[n] for n in names},
        )


def single_band_grid(
    geometry: GridGeometry,
    values: np.ndarray,
    name: str = "value",
    nodata: float = DEFAULT_NODATA,
) -> Grid:
    return Grid(geometry, {name: values}, {name: nodata})


@dataclass
class LakeLabelGrid:
    """Dense 4-connected component labels over a water mask; 0 = land."""

    geometry: GridGeometry
    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int32)
        if self.labels.shape != self.geometry.shape:
            raise GeometryMismatchError(
                f"labels shape {self.labels.shape} != geometry {self.geometry.shape}"
            )

    @property
    def n_lakes(self) -> int:
        return int(self.labels.max(initial=0))

    def lake_ids(self) -> list[int]:
        ids = np.unique(self.labels)
        return [int(i) for i in ids if i > 0]


def label_lakes(water_mask: Grid, band: str | None = None) -> LakeLabelGrid:
    """Label 4-connected water bodies 1..K.

    Mask cells are {0, 1, nodata}; nodata counts as land. Labels are
    assigned in row-major order of each component's first-encountered
    pixel, so repeated runs on the same mask are identical.
    """
    name = band or water_mask.band_names[0]
    arr = water_mask.band(name)
    wet = water_mask.valid_mask(name) & (arr > 0.5)

    raw, k = ndimage.label(wet, structure=_CONNECT4)
    if k == 0:
        return LakeLabelGrid(water_mask.geometry, np.zeros(wet.shape, dtype=np.int32))

    # Re-map scipy's labels into first-encounter row-major order; scipy
    # happens to scan that way today but does not document it.
    flat = raw.ravel()
    first_seen = np.full(k + 1, flat.size, dtype=np.int64)
    np.minimum.at(first_seen, flat, np.arange(flat.size, dtype=np.int64))
    order = np.argsort(first_seen[1:], kind="stable")
    remap = np.zeros(k + 1, dtype=np.int32)
    remap[order + 1] = np.arange(1, k + 1, dtype=np.int32)
    return LakeLabelGrid(water_mask.geometry, remap[raw])


# ---------------------------------------------------------------------------
# Portable bgrid format
# ---------------------------------------------------------------------------


def _payload_path(path: Path) -> Path:
    return path.with_name(path.name + ".bin")


def _format_float(v: float) -> str:
    return repr(float(v))


def write_grid(grid: Grid, path: str | Path) -> None:
    """Write ``grid`` to the portable format (or GeoTIFF for .tif/.tiff).

    The text header goes to ``path`` and the float32 payload to
    ``path + ".bin"``. write followed by read reproduces geometry, band
    names, nodata, and every cell bit-for-bit.
    """
    path = Path(path)
    if path.suffix.lower() in (".tif", ".tiff"):
        write_geotiff(grid, path)
        return

    geom = grid.geometry
    names = grid.band_names
    lines = [
        f"magic: {BGRID_MAGIC}",
        f"n_rows: {geom.n_rows}",
        f"n_cols: {geom.n_cols}",
        f"n_bands: {len(names)}",
        f"band_names: {','.join(names)}",
        f"pixel_size: {_format_float(geom.pixel_size)}",
        f"origin_x: {_format_float(geom.origin_x)}",
        f"origin_y: {_format_float(geom.origin_y)}",
        f"crs_tag: {geom.crs_tag}",
        f"nodata: {','.join(_format_float(grid.nodata[n]) for n in names)}",
        "byte_order: little-endian",
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with open(_payload_path(path), "wb") as f:
        for name in names:
            f.write(np.ascontiguousarray(grid.bands[name], dtype="<f4").tobytes())


def _parse_header(path: Path) -> dict[str, str]:
    fields: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise FormatError(f"{path}:{lineno}: expected 'key: value', got {line!r}")
        key, _, value = line.partition(":")
        fields[key.strip()] = value.strip()
    return fields


def read_grid(path: str | Path) -> Grid:
    """Read a grid written by :func:`write_grid`."""
    path = Path(path)
    if path.suffix.lower() in (".tif", ".tiff"):
        return read_geotiff(path)
    if not path.exists():
        raise FormatError(f"no such grid header: {path}")

    fields = _parse_header(path)
    magic = fields.get("magic")
    if magic != BGRID_MAGIC:
        raise FormatError(f"{path}: unknown format version {magic!r}, expected {BGRID_MAGIC}")
    try:
        n_rows = int(fields["n_rows"])
        n_cols = int(fields["n_cols"])
        n_bands = int(fields["n_bands"])
        names = fields["band_names"].split(",") if fields["band_names"] else []
        geom = GridGeometry(
            origin_x=float(fields["origin_x"]),
            origin_y=float(fields["origin_y"]),
            pixel_size=float(fields["pixel_size"]),
            n_rows=n_rows,
            n_cols=n_cols,
            crs_tag=fields["crs_tag"],
        )
        nodata_vals = [float(v) for v in fields["nodata"].split(",")]
        byte_order = fields["byte_order"]
    except KeyError as exc:
        raise FormatError(f"{path}: missing header field {exc}") from None
    except ValueError as exc:
        raise FormatError(f"{path}: bad header value ({exc})") from None

    if byte_order != "little-endian":
        raise FormatError(f"{path}: unsupported byte order {byte_order!r}")
    if len(names) != n_bands or len(nodata_vals) != n_bands:
        raise FormatError(
            f"{path}: n_bands={n_bands} but {len(names)} band names and "
            f"{len(nodata_vals)} nodata values"
        )

    payload = _payload_path(path)
    if not payload.exists():
        raise FormatError(f"missing payload file: {payload}")
    raw = np.fromfile(payload, dtype="<f4")
    expected = n_bands * n_rows * n_cols
    if raw.size != expected:
        raise FormatError(
            f"{payload}: payload holds {raw.size} values, header implies {expected}"
        )

    plane = n_rows * n_cols
    bands = {
        name: raw[i * plane : (i + 1) * plane].reshape(n_rows, n_cols).astype(np.float32)
        for i, name in enumerate(names)
    }
    return Grid(geom, bands, dict(zip(names, nodata_vals)))


# ---------------------------------------------------------------------------
# Optional GeoTIFF interop
# ---------------------------------------------------------------------------


def _geotiff_backend():
    try:
        import rasterio

        return "rasterio", rasterio
    except ImportError:
        pass
    try:
        from osgeo import gdal

        return "gdal", gdal
    except ImportError:
        return None, None


def geotiff_available() -> bool:
    return _geotiff_backend()[0] is not None


def write_geotiff(grid: Grid, path: str | Path) -> None:
    backend, mod = _geotiff_backend()
    if backend is None:
        raise FormatError(
            "GeoTIFF support needs rasterio or GDAL installed; "
            "use the portable bgrid format instead"
        )
    path = str(path)
    geom = grid.geometry
    names = grid.band_names
    if backend == "rasterio":
        from rasterio.transform import from_origin

        transform = from_origin(geom.origin_x, geom.origin_y, geom.pixel_size, geom.pixel_size)
        with mod.open(
            path,
            "w",
            driver="GTiff",
            height=geom.n_rows,
            width=geom.n_cols,
            count=len(names),
            dtype="float32",
            transform=transform,
            nodata=grid.nodata[names[0]],
        ) as dst:
            for i, name in enumerate(names, 1):
                dst.write(grid.bands[name], i)
                dst.set_band_description(i, name)
    else:
        driver = mod.GetDriverByName("GTiff")
        ds = driver.Create(path, geom.n_cols, geom.n_rows, len(names), mod.GDT_Float32)
        ds.SetGeoTransform((geom.origin_x, geom.pixel_size, 0, geom.origin_y, 0, -geom.pixel_size))
        for i, name in enumerate(names, 1):
            band = ds.GetRasterBand(i)
            band.WriteArray(grid.bands[name])
            band.SetNoDataValue(grid.nodata[name])
            band.SetDescription(name)
        ds.FlushCache()
        ds = None


def read_geotiff(path: str | Path) -> Grid:
    backend, mod = _geotiff_backend()
    if backend is None:
        raise FormatError(
            "GeoTIFF support needs rasterio or GDAL installed; "
            "use the portable bgrid format instead"
        )
    path = str(path)
    if backend == "rasterio":
        with mod.open(path) as src:
            geom = GridGeometry(
                origin_x=src.transform.c,
                origin_y=src.transform.f,
                pixel_size=src.transform.a,
                n_rows=src.height,
                n_cols=src.width,
                crs_tag=str(src.crs) if src.crs else "unspecified",
            )
            bands: dict[str, np.ndarray] = {}
            nodata: dict[str, float] = {}
            for i in range(1, src.count + 1):
                name = src.descriptions[i - 1] or f"band_{i}"
                bands[name] = src.read(i).astype(np.float32)
                nodata[name] = float(src.nodata) if src.nodata is not None else DEFAULT_NODATA
            return Grid(geom, bands, nodata)
    ds = mod.Open(path)
    if ds is None:
        raise FormatError(f"GDAL could not open {path}")
    gt = ds.GetGeoTransform()
    geom = GridGeometry(
        origin_x=gt[0],
        origin_y=gt[3],
        pixel_size=gt[1],
        n_rows=ds.RasterYSize,
        n_cols=ds.RasterXSize,
        crs_tag=ds.GetProjection() or "unspecified",
    )
    bands = {}
    nodata = {}
    for i in range(1, ds.RasterCount + 1):
        band = ds.GetRasterBand(i)
        name = band.GetDescription() or f"band_{i}"
        bands[name] = band.ReadAsArray().astype(np.float32)
        nd = band.GetNoDataValue()
        nodata[name] = float(nd) if nd is not None else DEFAULT_NODATA
    return Grid(geom, bands, nodata)
