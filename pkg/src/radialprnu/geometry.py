"""Radial maps, annulus partition, lattice point sets, and annulus warping.

Radii are normalized so r = 1 at half the image diagonal (D2 pixels). The
optical center is the geometric image center. A warp samples the source at
the mapped radius along the same ray (phase preserved) with bilinear
interpolation; lattice points whose sampling location leaves the image
bounding box are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, hypot

import numpy as np

CUBIC = "cubic"
LINEAR = "linear"
FORWARD = "forward"
INVERSE = "inverse"


@dataclass(frozen=True)
class RadialMap:
    model: str  # cubic | linear
    alpha: float
    direction: str  # forward | inverse

    def __post_init__(self):
        if self.model not in (CUBIC, LINEAR):
            raise ValueError(f"unknown model {self.model!r}")
        if self.direction not in (FORWARD, INVERSE):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.model == LINEAR and self.direction == INVERSE and self.alpha == -1.0:
            raise ValueError("linear inverse undefined for alpha = -1")


def map_radius(m: RadialMap, r):
    """Apply the radial map to normalized radius (scalar or array)."""
    r = np.asarray(r, dtype=np.float64)
    a = m.alpha
    if m.model == CUBIC:
        if m.direction == FORWARD:
            out = r * (1.0 + a * r * r)
        else:
            r2 = r * r
            out = r * (1.0 - a * r2 + 3.0 * a * a * r2 * r2)
    else:
        if m.direction == FORWARD:
            out = r * (1.0 + a)
        else:
            out = r / (1.0 + a)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class AnnulusPartition:
    """Concentric annuli covering the image; the first is a disk.

    ``inner_radii`` and ``widths`` are normalized by ``d2``; the center is
    0-based array coordinates (row, col).
    """

    width: int
    height: int
    center: tuple[float, float]
    d2: float
    inner_radii: tuple[float, ...]
    widths: tuple[float, ...]

    @property
    def count(self) -> int:
        return len(self.inner_radii)

    def radius_grid(self) -> np.ndarray:
        """Normalized radius of every pixel (computed once per partition)."""
        cached = getattr(self, "_radius_grid", None)
        if cached is None:
            cy, cx = self.center
            yy = (np.arange(self.height, dtype=np.float64) - cy)[:, None]
            xx = (np.arange(self.width, dtype=np.float64) - cx)[None, :]
            cached = np.sqrt(yy * yy + xx * xx) / self.d2
            object.__setattr__(self, "_radius_grid", cached)
        return cached


def partition(width: int, height: int, r1_px: float = 250.0,
              delta_px: float = 64.0) -> AnnulusPartition:
    """Partition a width x height image into an inner disk plus annuli."""
    if delta_px <= 0 or r1_px < delta_px:
        raise ValueError("need r1_px >= delta_px > 0")
    d2 = hypot(width, height) / 2.0
    if r1_px >= d2:
        inner = (0.0,)
        widths = (max(r1_px / d2, 1.0 + 1e-12),)
    else:
        rings = ceil((d2 - r1_px) / delta_px)
        inner = [0.0]
        widths = [r1_px / d2]
        for k in range(rings):
            inner.append((r1_px + k * delta_px) / d2)
            widths.append(delta_px / d2)
        inner = tuple(inner)
        widths = tuple(widths)
    cy = (height - 1) / 2.0
    cx = (width - 1) / 2.0
    return AnnulusPartition(width=width, height=height, center=(cy, cx),
                            d2=d2, inner_radii=inner, widths=widths)


@dataclass(frozen=True)
class AnnulusLattice:
    """Integer pixels of one annulus: parallel row/col index arrays."""

    k: int
    rows: np.ndarray
    cols: np.ndarray

    @property
    def size(self) -> int:
        return self.rows.size


def lattice_points(p: AnnulusPartition, k: int) -> AnnulusLattice:
    """All image pixels whose normalized radius lies in [r_k, r_k + delta_k)."""
    if not 1 <= k <= p.count:
        raise IndexError(f"annulus index {k} out of 1..{p.count}")
    rg = p.radius_grid()
    lo = p.inner_radii[k - 1]
    hi = lo + p.widths[k - 1]
    rows, cols = np.nonzero((rg >= lo) & (rg < hi))
    return AnnulusLattice(k=k, rows=rows, cols=cols)


def bilinear(src: np.ndarray, sy: np.ndarray, sx: np.ndarray) -> np.ndarray:
    """Bilinear interpolation at float coordinates assumed inside the grid."""
    m, n = src.shape
    y0 = np.clip(np.floor(sy).astype(np.intp), 0, m - 2)
    x0 = np.clip(np.floor(sx).astype(np.intp), 0, n - 2)
    fy = sy - y0
    fx = sx - x0
    v00 = src[y0, x0]
    v01 = src[y0, x0 + 1]
    v10 = src[y0 + 1, x0]
    v11 = src[y0 + 1, x0 + 1]
    return ((1 - fy) * ((1 - fx) * v00 + fx * v01)
            + fy * ((1 - fx) * v10 + fx * v11))


def warp_annulus(src: np.ndarray, p: AnnulusPartition, k: int, m: RadialMap,
                 points: AnnulusLattice | None = None):
    """Warp one annulus of ``src``.

    For every lattice point of annulus k the sampling location under the map
    is computed; points whose location leaves the bounding box (any bilinear
    neighbor missing) are dropped. Returns (values, surviving lattice).
    """
    if points is None:
        points = lattice_points(p, k)
    cy, cx = p.center
    dy = points.rows.astype(np.float64) - cy
    dx = points.cols.astype(np.float64) - cx
    r = np.sqrt(dy * dy + dx * dx) / p.d2
    rm = map_radius(m, r)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(r > 0, rm / np.where(r > 0, r, 1.0), 1.0)
    sy = cy + dy * scale
    sx = cx + dx * scale
    mrows, ncols = src.shape
    ok = (sy >= 0.0) & (sy <= mrows - 1) & (sx >= 0.0) & (sx <= ncols - 1)
    surv = AnnulusLattice(k=k, rows=points.rows[ok], cols=points.cols[ok])
    vals = bilinear(src, sy[ok], sx[ok])
    return vals, surv


def warp_full(src: np.ndarray, m: RadialMap, d2: float | None = None):
    """Whole-image warp; returns (warped, valid mask).

    Pixels whose sampling location leaves the grid are zero with
    valid = False.
    """
    mrows, ncols = src.shape
    cy = (mrows - 1) / 2.0
    cx = (ncols - 1) / 2.0
    if d2 is None:
        d2 = hypot(ncols, mrows) / 2.0
    yy = (np.arange(mrows, dtype=np.float64) - cy)[:, None]
    xx = (np.arange(ncols, dtype=np.float64) - cx)[None, :]
    r = np.sqrt(yy * yy + xx * xx) / d2
    rm = map_radius(m, r)
    scale = np.where(r > 0, rm / np.where(r > 0, r, 1.0), 1.0)
    sy = cy + yy * scale
    sx = cx + xx * scale
    ok = (sy >= 0.0) & (sy <= mrows - 1) & (sx >= 0.0) & (sx <= ncols - 1)
    out = np.zeros_like(src, dtype=np.float64)
    out[ok] = bilinear(src, sy[ok], sx[ok])
    return out, ok


def largest_centered_rect(valid: np.ndarray) -> tuple[slice, slice] | None:
    """Largest centered sub-rectangle that is fully valid.

    Grows margins symmetrically until every pixel inside is valid; returns
    None if even the center pixel is invalid.
    """
    mrows, ncols = valid.shape
    top, bottom, left, right = 0, mrows, 0, ncols
    while top < bottom and left < right:
        sub = valid[top:bottom, left:right]
        if sub.all():
            return np.s_[top:bottom], np.s_[left:right]
        # shrink along the axis whose border rows/cols contain invalid pixels
        shrunk = False
        if not sub[0].all() or not sub[-1].all():
            top += 1
            bottom -= 1
            shrunk = True
        sub = valid[top:bottom, left:right]
        if sub.size and (not sub[:, 0].all() or not sub[:, -1].all()):
            left += 1
            right -= 1
            shrunk = True
        if not shrunk:
            top += 1
            bottom -= 1
            left += 1
            right -= 1
    return None
