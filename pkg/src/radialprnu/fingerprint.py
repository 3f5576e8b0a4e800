"""Reference PRNU estimation and artifact-removal post-processing."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import uniform_filter

from .denoise import DenoiserConfig, residual
from .planes import DomainError, Plane

MAGIC = b"PRNUFP01"


@dataclass(frozen=True)
class Fingerprint:
    """Post-processed multiplicative gain estimate for one camera.

    ``sigma2`` is the mean square of the stored plane, frozen at
    construction; detection statistics use it as the correlation-noise
    scale.
    """

    plane: Plane
    sigma2: float
    meta: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return self.plane.values


def zero_mean_rows_cols(k: Plane) -> Plane:
    """Remove column means, then row means."""
    v = k.values.astype(np.float64)
    v = v - v.mean(axis=0, keepdims=True)
    v = v - v.mean(axis=1, keepdims=True)
    return Plane(v, k.origin)


def wiener_dft(k: Plane) -> Plane:
    """Suppress periodic spatial artifacts in the frequency domain.

    Local spectral energy (3x3 mean of the squared magnitude) above the
    median floor is clamped back down to it; noise-like content passes
    unchanged.
    """
    v = k.values.astype(np.float64)
    if not np.any(v):
        return Plane(v, k.origin)
    spec = np.fft.fft2(v)
    energy = np.abs(spec) ** 2
    local = uniform_filter(energy, size=3, mode="wrap")
    floor = np.median(local)
    gain = np.ones_like(local)
    hot = local > floor
    gain[hot] = np.sqrt(floor / local[hot])
    out = np.real(np.fft.ifft2(spec * gain))
    return Plane(out, k.origin)


def estimate_fingerprint(images, cfg: DenoiserConfig = DenoiserConfig(),
                         denoiser=None, label: str = "") -> Fingerprint:
    """Maximum-likelihood-style PRNU estimate from L same-size images.

    Accumulates I*W and I*I per pixel in float64, takes their ratio, and
    post-processes with row/column zero-meaning followed by the DFT Wiener
    filter. ``denoiser`` may override the filter (used by tests with an
    oracle filter); it maps a Plane to its smooth estimate.
    """
    images = list(images)
    if not images:
        raise ValueError("need at least one image")
    shape = images[0].shape
    num = np.zeros(shape, dtype=np.float64)
    den = np.zeros(shape, dtype=np.float64)
    for im in images:
        if im.shape != shape:
            raise DomainError("all images must share dimensions")
        iv = im.values.astype(np.float64)
        if denoiser is None:
            w = residual(im, cfg).values.astype(np.float64)
        else:
            w = iv - denoiser(im).values.astype(np.float64)
        num += iv * w
        den += iv * iv
    zero_den = den == 0.0
    den[zero_den] = 1.0
    k = num / den
    k[zero_den] = 0.0

    k_plane = wiener_dft(zero_mean_rows_cols(Plane(k)))
    vals = k_plane.values.astype(np.float64)
    sigma2 = float(np.mean(vals * vals))
    meta = {
        "label": label,
        "num_images": len(images),
        "zero_denominator_count": int(zero_den.sum()),
    }
    return Fingerprint(plane=k_plane, sigma2=sigma2, meta=meta)


def save_fingerprint(fp: Fingerprint, path) -> None:
    """Write the bit-exact PRNUFP01 container."""
    m, n = fp.plane.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", n, m))
        fh.write(struct.pack("<d", fp.sigma2))
        fh.write(np.ascontiguousarray(fp.values, dtype="<f4").tobytes())


class FingerprintFormatError(ValueError):
    """Raised for a corrupt or truncated fingerprint file."""


def load_fingerprint(path) -> Fingerprint:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise FingerprintFormatError("bad magic, not a fingerprint file")
        header = fh.read(16)
        if len(header) != 16:
            raise FingerprintFormatError("truncated header")
        n, m = struct.unpack("<II", header[:8])
        sigma2 = struct.unpack("<d", header[8:])[0]
        raw = fh.read(4 * m * n)
        if len(raw) != 4 * m * n:
            raise FingerprintFormatError("truncated plane data")
        vals = np.frombuffer(raw, dtype="<f4").reshape(m, n)
    return Fingerprint(plane=Plane(vals), sigma2=sigma2, meta={"path": str(path)})
