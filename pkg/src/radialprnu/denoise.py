"""Wavelet-domain denoiser and noise-residual extraction.

The filter follows the classic PRNU recipe: an orthogonal Daubechies-8
decomposition, adaptive local Wiener shrinkage of the detail subbands with a
minimum-variance estimate over several window sizes, and reconstruction. The
residual is the part removed by the filter, which carries the sensor noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import uniform_filter

# Daubechies-8 (16-tap) scaling coefficients, sum = sqrt(2).
_DB8 = np.array([
    0.05441584224308161, 0.3128715909144659, 0.6756307362980128,
    0.5853546836548691, -0.015829105256023893, -0.2840155429624281,
    0.00047248457399797254, 0.128747426620186, -0.01736930100202211,
    -0.04408825393106472, 0.013981027917015516, 0.008746094047015655,
    -0.00487035299301066, -0.0003917403729959771, 0.0006754494059985568,
    -0.00011747678400228192,
])
_DB8_HI = (_DB8[::-1] * np.where(np.arange(16) % 2 == 0, 1.0, -1.0))


@dataclass(frozen=True)
class DenoiserConfig:
    levels: int = 4
    noise_variance: float = 9.0
    window_sizes: tuple[int, ...] = (3, 5, 7, 9)

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.noise_variance <= 0:
            raise ValueError("noise_variance must be positive")
        for w in self.window_sizes:
            if w < 3 or w % 2 == 0:
                raise ValueError("window sizes must be odd and >= 3")


def _filter_fft(filt: np.ndarray, n: int) -> np.ndarray:
    pad = np.zeros(n)
    pad[:filt.size] = filt
    return np.fft.rfft(pad)


def _analysis_1d(x: np.ndarray, filt: np.ndarray) -> np.ndarray:
    """Periodized filtering a[i] = sum_k f[k] x[(i+k) mod n], then dyadic
    downsampling, along axis 0."""
    n = x.shape[0]
    spec = np.fft.rfft(x, axis=0) * np.conj(_filter_fft(filt, n))[:, None]
    return np.fft.irfft(spec, n=n, axis=0)[::2]


def _synthesis_1d(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Inverse of :func:`_analysis_1d` (transpose of the orthonormal operator):
    upsample each subband and circularly convolve with its filter."""
    n = 2 * lo.shape[0]
    up_lo = np.zeros((n,) + lo.shape[1:], dtype=np.float64)
    up_hi = np.zeros_like(up_lo)
    up_lo[::2] = lo
    up_hi[::2] = hi
    spec = (np.fft.rfft(up_lo, axis=0) * _filter_fft(_DB8, n)[:, None]
            + np.fft.rfft(up_hi, axis=0) * _filter_fft(_DB8_HI, n)[:, None])
    return np.fft.irfft(spec, n=n, axis=0)


def _dwt2(x: np.ndarray):
    lo = _analysis_1d(x, _DB8)
    hi = _analysis_1d(x, _DB8_HI)
    ll = _analysis_1d(lo.T, _DB8).T
    lh = _analysis_1d(lo.T, _DB8_HI).T
    hl = _analysis_1d(hi.T, _DB8).T
    hh = _analysis_1d(hi.T, _DB8_HI).T
    return ll, (lh, hl, hh)


def _idwt2(ll, bands):
    lh, hl, hh = bands
    lo = _synthesis_1d(ll.T, lh.T).T
    hi = _synthesis_1d(hl.T, hh.T).T
    return _synthesis_1d(lo, hi)


def _shrink(band: np.ndarray, noise_var: float, windows) -> np.ndarray:
    """Local Wiener attenuation with minimum-variance selection over windows."""
    est = None
    sq = band * band
    for w in windows:
        local = np.maximum(uniform_filter(sq, size=w, mode="reflect") - noise_var, 0.0)
        est = local if est is None else np.minimum(est, local)
    return band * (est / (est + noise_var))


def denoise(plane, cfg: DenoiserConfig = DenoiserConfig()):
    """Smooth scene estimate F(I); the removed part is the noise residual."""
    from .planes import Plane

    x = plane.values.astype(np.float64)
    if np.ptp(x) == 0.0:
        return Plane(x, plane.origin)
    m, n = x.shape
    block = 2 ** cfg.levels
    if m < block or n < block:
        raise ValueError("image too small for the decomposition depth")
    pm = (-m) % block
    pn = (-n) % block
    xp = np.pad(x, ((0, pm), (0, pn)), mode="symmetric")

    ll = xp
    detail = []
    for _ in range(cfg.levels):
        ll, bands = _dwt2(ll)
        detail.append(bands)
    for lvl in range(cfg.levels - 1, -1, -1):
        bands = tuple(_shrink(b, cfg.noise_variance, cfg.window_sizes)
                      for b in detail[lvl])
        ll = _idwt2(ll, bands)
    return Plane(ll[:m, :n], plane.origin)


def residual(plane, cfg: DenoiserConfig = DenoiserConfig()):
    """Noise residual W = I - F(I)."""
    from .planes import Plane

    den = denoise(plane, cfg)
    return Plane(plane.values.astype(np.float64) - den.values.astype(np.float64),
                 plane.origin)
