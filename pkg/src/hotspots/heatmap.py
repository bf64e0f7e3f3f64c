"""
Gaussian-kernel density rasters.

Each cell centre collects ``exp(-(dlon**2 + dlat**2) / alpha)`` from every
event, with distances in raw degrees by default.  The kernel is evaluated as
the product of its separable row and column factors.  Events further than
``cutoff_sigmas * sqrt(alpha)`` from a centre are skipped.  Row 0 is the
northern edge of the box.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _accel
from ._accel import njit
from .errors import ParameterError
from .geo import KM_PER_DEG, BBox, GeoPoint, Points, as_latlon

KERNEL_SPACES = ("degrees", "km")


@dataclass(frozen=True)
class HeatmapParams:
    """Raster settings.

    ``alpha`` is in squared degrees, or squared km when ``kernel_space`` is
    ``"km"`` (local equirectangular km around the box centre).
    ``cutoff_sigmas=None`` disables the cutoff.
    """

    alpha: float = 1e-4
    width: int = 512
    height: int = 512
    bbox: Optional[BBox] = None
    normalize: bool = True
    cutoff_sigmas: Optional[float] = 5.0
    kernel_space: str = "degrees"

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ParameterError(f"alpha must be > 0, got {self.alpha}")
        for name in ("width", "height"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ParameterError(f"{name} must be an integer >= 1, got {v}")
        if self.cutoff_sigmas is not None and not self.cutoff_sigmas > 0:
            raise ParameterError(f"cutoff_sigmas must be > 0 or None, got {self.cutoff_sigmas}")
        if self.kernel_space not in KERNEL_SPACES:
            raise ParameterError(f"kernel_space must be one of {KERNEL_SPACES}, got {self.kernel_space!r}")


@dataclass(frozen=True, eq=False)
class Raster:
    width: int
    height: int
    bbox: BBox
    values: np.ndarray  # (height, width), row 0 = north
    normalized: bool = field(default=False)

    @property
    def cell_width(self) -> float:
        return (self.bbox.max_lon - self.bbox.min_lon) / self.width

    @property
    def cell_height(self) -> float:
        return (self.bbox.max_lat - self.bbox.min_lat) / self.height

    def cell_center(self, row: int, col: int) -> GeoPoint:
        return GeoPoint(
            self.bbox.max_lat - (row + 0.5) * self.cell_height,
            self.bbox.min_lon + (col + 0.5) * self.cell_width,
        )

    def cell_of(self, lat: float, lon: float) -> tuple[int, int]:
        row = int((self.bbox.max_lat - lat) / self.cell_height)
        col = int((lon - self.bbox.min_lon) / self.cell_width)
        return min(max(row, 0), self.height - 1), min(max(col, 0), self.width - 1)


def kernel_value(cell_center: GeoPoint, event: GeoPoint, alpha: float) -> float:
    if not alpha > 0:
        raise ParameterError(f"alpha must be > 0, got {alpha}")
    dx = cell_center.lon - event.lon
    dy = cell_center.lat - event.lat
    return math.exp(-(dx * dx + dy * dy) / alpha)


def _window_bounds(e, lo_edge, step, count, reach, flip):
    # index range of centres within reach of e along one axis (1 cell margin)
    if flip:
        a = (lo_edge - e - reach) / step - 0.5
        b = (lo_edge - e + reach) / step - 0.5
    else:
        a = (e - reach - lo_edge) / step - 0.5
        b = (e + reach - lo_edge) / step - 0.5
    lo = max(int(math.floor(a)) - 1, 0)
    hi = min(int(math.ceil(b)) + 1, count - 1)
    return lo, hi


_window = njit(_window_bounds)


@njit
def _accumulate_numba(ex, ey, x0, dx, ytop, dy, alpha, reach, out):
    height, width = out.shape
    r2 = reach * reach
    col_d2 = np.empty(width)
    col_k = np.empty(width)
    for e in range(ex.size):
        if math.isinf(reach):
            ilo, ihi, jlo, jhi = 0, height - 1, 0, width - 1
        else:
            ilo, ihi = _window(ey[e], ytop, dy, height, reach, True)
            jlo, jhi = _window(ex[e], x0, dx, width, reach, False)
        for j in range(jlo, jhi + 1):
            ddx = (x0 + (j + 0.5) * dx) - ex[e]
            col_d2[j] = ddx * ddx
            col_k[j] = math.exp(-col_d2[j] / alpha)
        for i in range(ilo, ihi + 1):
            ddy = (ytop - (i + 0.5) * dy) - ey[e]
            row_d2 = ddy * ddy
            row_k = math.exp(-row_d2 / alpha)
            for j in range(jlo, jhi + 1):
                if col_d2[j] + row_d2 <= r2:
                    out[i, j] += row_k * col_k[j]


def _accumulate_numpy(ex, ey, x0, dx, ytop, dy, alpha, reach, out):
    height, width = out.shape
    r2 = reach * reach
    col_c = x0 + (np.arange(width) + 0.5) * dx
    row_c = ytop - (np.arange(height) + 0.5) * dy
    for e in range(ex.size):
        if math.isinf(reach):
            ilo, ihi, jlo, jhi = 0, height - 1, 0, width - 1
        else:
            ilo, ihi = _window_bounds(ey[e], ytop, dy, height, reach, True)
            jlo, jhi = _window_bounds(ex[e], x0, dx, width, reach, False)
        if ilo > ihi or jlo > jhi:
            continue
        ddy = row_c[ilo : ihi + 1] - ey[e]
        ddx = col_c[jlo : jhi + 1] - ex[e]
        row_d2 = (ddy * ddy)[:, None]
        col_d2 = (ddx * ddx)[None, :]
        contrib = np.exp(-row_d2 / alpha) * np.exp(-col_d2 / alpha)
        out[ilo : ihi + 1, jlo : jhi + 1] += np.where(col_d2 + row_d2 <= r2, contrib, 0.0)


def render(points: Points, params: HeatmapParams) -> Raster:
    """Sum kernel contributions of ``points`` onto the raster grid.

    With ``params.normalize`` the grid is divided by its maximum (an
    all-zero grid stays zero).
    """
    if params.bbox is None:
        raise ParameterError("HeatmapParams.bbox is required for rendering")
    box = params.bbox
    lat, lon = as_latlon(points)
    if params.kernel_space == "km":
        sy = KM_PER_DEG
        sx = KM_PER_DEG * math.cos(math.radians(box.center[0]))
    else:
        sx = sy = 1.0
    w, h = int(params.width), int(params.height)
    x0 = box.min_lon * sx
    ytop = box.max_lat * sy
    dx = (box.max_lon - box.min_lon) / w * sx
    dy = (box.max_lat - box.min_lat) / h * sy
    if dx <= 0 or dy <= 0:
        raise ParameterError(f"bbox {box} has zero extent; widen it before rendering")
    reach = math.inf if params.cutoff_sigmas is None else params.cutoff_sigmas * math.sqrt(params.alpha)

    out = np.zeros((h, w))
    ex = np.ascontiguousarray(lon * sx)
    ey = np.ascontiguousarray(lat * sy)
    if ex.size:
        kernel = _accumulate_numba if _accel.use_numba() else _accumulate_numpy
        kernel(ex, ey, float(x0), float(dx), float(ytop), float(dy), float(params.alpha), float(reach), out)
    if params.normalize:
        peak = out.max()
        if peak > 0:
            out /= peak
    return Raster(w, h, box, out, bool(params.normalize))
