"""Plane arithmetic: domains, inner products, NCC, cyclic shifts, zero-meaning.

A Plane is a 2-D real signal on a rectangular integer lattice. Coordinates
are (row, col) and the semantic lattice is 1-based: a Plane with origin
(1, 1) and shape (M, N) covers {1..M} x {1..N}. Values are stored float32
and all reductions accumulate in float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from PIL import Image


class DomainError(ValueError):
    """Raised when plane domains are incompatible for an operation."""


class UndefinedCorrelationError(ValueError):
    """Raised when NCC is requested for a constant (zero-norm) signal."""


@dataclass(frozen=True)
class ShiftVector:
    """Cyclic shift by (s1, s2) pixels, interpreted modulo the plane shape."""

    s1: int
    s2: int


@dataclass(frozen=True)
class Plane:
    """Real-valued signal on a rectangular lattice.

    ``origin`` is the 1-based (row, col) of the top-left lattice point, so
    two planes with different origins overlap only where their rectangles
    intersect.
    """

    values: np.ndarray
    origin: tuple[int, int] = (1, 1)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DomainError("plane values must be a non-empty 2-D array")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def domain(self) -> tuple[int, int, int, int]:
        """Inclusive 1-based rectangle (row0, col0, row1, col1)."""
        r0, c0 = self.origin
        m, n = self.shape
        return (r0, c0, r0 + m - 1, c0 + n - 1)


def _overlap(x: Plane, y: Plane):
    xr0, xc0, xr1, xc1 = x.domain()
    yr0, yc0, yr1, yc1 = y.domain()
    r0, c0 = max(xr0, yr0), max(xc0, yc0)
    r1, c1 = min(xr1, yr1), min(xc1, yc1)
    if r0 > r1 or c0 > c1:
        raise DomainError("plane domains do not intersect")
    xs = x.values[r0 - xr0:r1 - xr0 + 1, c0 - xc0:c1 - xc0 + 1]
    ys = y.values[r0 - yr0:r1 - yr0 + 1, c0 - yc0:c1 - yc0 + 1]
    return xs, ys


def to_grayscale(r: Plane, g: Plane, b: Plane) -> Plane:
    """Combine RGB channels into luminance with BT.601 weights."""
    if r.shape != g.shape or g.shape != b.shape:
        raise DomainError("RGB channels must have identical shapes")
    lum = (0.299 * r.values.astype(np.float64)
           + 0.587 * g.values.astype(np.float64)
           + 0.114 * b.values.astype(np.float64))
    return Plane(lum, r.origin)


def inner_product(x: Plane, y: Plane) -> float:
    """Frobenius-style inner product over the domain intersection."""
    xs, ys = _overlap(x, y)
    return float(np.sum(xs.astype(np.float64) * ys.astype(np.float64)))


def ncc(x: Plane, y: Plane) -> float:
    """Normalized cross-correlation of the centered overlap."""
    xs, ys = _overlap(x, y)
    xc = xs.astype(np.float64) - xs.mean(dtype=np.float64)
    yc = ys.astype(np.float64) - ys.mean(dtype=np.float64)
    nx = np.sqrt(np.sum(xc * xc))
    ny = np.sqrt(np.sum(yc * yc))
    if nx == 0.0 or ny == 0.0:
        raise UndefinedCorrelationError("constant signal has undefined NCC")
    return float(np.sum(xc * yc) / (nx * ny))


def cyclic_shift(x: Plane, s: ShiftVector) -> Plane:
    """Toroidal shift: output (i, j) takes value from (i+s1, j+s2) mod (M, N)."""
    m, n = x.shape
    out = np.roll(x.values, (-s.s1 % m, -s.s2 % n), axis=(0, 1))
    return Plane(out, x.origin)


def zero_mean(x: Plane) -> Plane:
    """Subtract the sample mean."""
    mu = x.values.mean(dtype=np.float64)
    return Plane(x.values.astype(np.float64) - mu, x.origin)


def load_image(path) -> Plane:
    """Decode an 8-bit PNG/JPEG/PGM file into a grayscale plane."""
    with Image.open(path) as im:
        if im.mode in ("RGB", "RGBA", "P"):
            arr = np.asarray(im.convert("RGB"), dtype=np.float64)
            lum = 0.299 * arr[..., 0] + 0.587 * arr[..., 1] + 0.114 * arr[..., 2]
        else:
            lum = np.asarray(im.convert("L" if im.mode not in ("I;16", "I") else im.mode),
                             dtype=np.float64)
    return Plane(lum)
