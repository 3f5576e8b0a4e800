"""Peak-to-correlation-energy statistic with signed peak and cyclic exclusion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .planes import Plane


@dataclass(frozen=True)
class ExclusionSpec:
    """Cyclic neighborhood of the zero shift excluded from the noise estimate.

    ``half_width`` = 5 gives the customary 11 x 11 square.
    """

    half_width: int = 5

    def __post_init__(self):
        if self.half_width < 0:
            raise ValueError("half_width must be >= 0")


def ssq(x: float) -> float:
    """Sign-preserving square."""
    return float(np.sign(x) * x * x)


def _as_values(x) -> np.ndarray:
    if isinstance(x, Plane):
        return x.values.astype(np.float64)
    if hasattr(x, "plane"):  # Fingerprint
        return x.plane.values.astype(np.float64)
    return np.asarray(x, dtype=np.float64)


def central_crop(a: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Crop the central ``shape`` window out of ``a``."""
    m, n = a.shape
    tm, tn = shape
    if tm > m or tn > n:
        raise ValueError("crop larger than array")
    r0 = (m - tm) // 2
    c0 = (n - tn) // 2
    return a[r0:r0 + tm, c0:c0 + tn]


def _exclusion_mask(shape, half_width: int) -> np.ndarray:
    m, n = shape
    s1 = np.minimum(np.arange(m), m - np.arange(m))[:, None]
    s2 = np.minimum(np.arange(n), n - np.arange(n))[None, :]
    return (s1 <= half_width) & (s2 <= half_width)


def cross_correlation_surface(k, w) -> np.ndarray:
    """All-shifts correlation: out[s1, s2] = <K, C(W, s)>, via the FFT."""
    kv = _as_values(k)
    wv = _as_values(w)
    if kv.shape != wv.shape:
        raise ValueError("shapes must match; central-crop beforehand")
    return np.real(np.fft.ifft2(np.conj(np.fft.fft2(kv)) * np.fft.fft2(wv)))


def pce(k, w, excl: ExclusionSpec = ExclusionSpec(), mask=None) -> float:
    """Signed PCE of fingerprint ``k`` against residual ``w``.

    Both inputs must share a rectangular domain. ``mask`` restricts the
    computation to the bounding rectangle of a boolean array (the
    restricted-domain variant used when a warp leaves only a sub-rectangle
    computable). The residual is zero-meaned internally; the fingerprint is
    assumed zero-mean already.
    """
    kv = _as_values(k)
    wv = _as_values(w)
    if kv.shape != wv.shape:
        raise ValueError("shapes must match; central-crop beforehand")
    if mask is not None:
        rows = np.flatnonzero(mask.any(axis=1))
        cols = np.flatnonzero(mask.any(axis=0))
        sl = np.s_[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]
        kv = kv[sl]
        wv = wv[sl]
    wv = wv - wv.mean()
    surface = np.real(np.fft.ifft2(np.conj(np.fft.fft2(kv)) * np.fft.fft2(wv)))
    peak = surface[0, 0]
    excl_mask = _exclusion_mask(surface.shape, excl.half_width)
    noise = surface[~excl_mask]
    if noise.size == 0:
        raise ValueError("exclusion neighborhood covers the whole domain")
    denom = float(np.mean(noise * noise))
    if denom == 0.0:
        raise ValueError("zero correlation energy (constant inputs)")
    return ssq(peak) / denom


def pce_direct(k, w, excl: ExclusionSpec = ExclusionSpec()) -> float:
    """Brute-force all-shifts enumeration; oracle for the FFT path."""
    kv = _as_values(k)
    wv = _as_values(w)
    if kv.shape != wv.shape:
        raise ValueError("shapes must match")
    wv = wv - wv.mean()
    m, n = kv.shape
    peak = float(np.sum(kv * wv))
    acc = 0.0
    count = 0
    hw = excl.half_width
    for s1 in range(m):
        for s2 in range(n):
            if min(s1, m - s1) <= hw and min(s2, n - s2) <= hw:
                continue
            shifted = np.roll(wv, (-s1, -s2), axis=(0, 1))
            acc += float(np.sum(kv * shifted)) ** 2
            count += 1
    return ssq(peak) / (acc / count)
