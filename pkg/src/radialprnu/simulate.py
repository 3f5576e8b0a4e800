"""Ground-truth generator: synthetic PRNU, scenes, and variable-alpha warps.

Everything here is deterministic given a seed and deliberately more exact
than the attribution pipeline, so it can serve as the oracle in tests: the
per-pixel radial equation is solved by bisection to 1e-10 rather than with
the truncated series inverse.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import hypot

import numpy as np

from .geometry import bilinear
from .planes import Plane

_R_MAX = 1.5  # normalized radius bracket for the per-pixel solve


@dataclass(frozen=True)
class DistortionProfile:
    """Radial distortion strength alpha as a function of normalized radius.

    kind: "constant" (params = (alpha,)), "affine" (params = (a, b) for
    a + b*r), or "piecewise" (params = (r_samples, alpha_samples), linearly
    interpolated).
    """

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in ("constant", "affine", "piecewise"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        probe = self.alpha_at(np.linspace(0.0, _R_MAX, 512))
        if np.any(np.abs(probe) > 0.5):
            raise ValueError("profile exceeds |alpha| = 0.5 on the radius range")

    def alpha_at(self, r):
        r = np.asarray(r, dtype=np.float64)
        if self.kind == "constant":
            out = np.full_like(r, float(self.params[0]))
        elif self.kind == "affine":
            a, b = self.params
            out = a + b * r
        else:
            rs, vs = self.params
            out = np.interp(r, np.asarray(rs, dtype=np.float64),
                            np.asarray(vs, dtype=np.float64))
        return out if out.ndim else float(out)

    def forward(self, r):
        """r' = r * (1 + alpha(r) * r^2)."""
        r = np.asarray(r, dtype=np.float64)
        out = r * (1.0 + self.alpha_at(r) * r * r)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class SyntheticScene:
    i0: Plane
    k: Plane
    theta_sigma: float
    seed: int


def synth_prnu(width: int, height: int, strength: float, seed: int) -> Plane:
    """White, zero-mean Gaussian gain pattern with the given std."""
    if strength <= 0:
        raise ValueError("strength must be positive")
    rng = np.random.default_rng(seed)
    k = rng.normal(0.0, strength, size=(height, width))
    return Plane(k - k.mean())


def flat_field(width: int, height: int, level: float = 128.0) -> Plane:
    return Plane(np.full((height, width), level))


def gradient_field(width: int, height: int, lo: float = 64.0,
                   hi: float = 192.0) -> Plane:
    ramp = np.linspace(lo, hi, width)[None, :] * np.ones((height, 1))
    return Plane(ramp)


def synth_image(scene: SyntheticScene) -> Plane:
    """I = I0 + I0 * K + Theta, clipped to [0, 255]."""
    if scene.i0.shape != scene.k.shape:
        raise ValueError("scene content and PRNU shapes differ")
    rng = np.random.default_rng(scene.seed)
    i0 = scene.i0.values.astype(np.float64)
    noisy = i0 * (1.0 + scene.k.values.astype(np.float64))
    if scene.theta_sigma > 0:
        noisy = noisy + rng.normal(0.0, scene.theta_sigma, size=i0.shape)
    return Plane(np.clip(noisy, 0.0, 255.0))


def _solve_source_radius(prof: DistortionProfile, r_out: np.ndarray) -> np.ndarray:
    """Solve r' = T_{alpha(r)}(r) for r by bisection to 1e-10."""
    lo = np.zeros_like(r_out)
    hi = np.full_like(r_out, _R_MAX)
    f_lo = prof.forward(lo) - r_out
    f_hi = prof.forward(hi) - r_out
    if np.any(f_lo * f_hi > 0):
        raise ValueError("profile not invertible on the radius range")
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        f_mid = prof.forward(mid) - r_out
        take_hi = f_mid * f_lo <= 0
        hi = np.where(take_hi, mid, hi)
        lo = np.where(take_hi, lo, mid)
        f_lo = np.where(take_hi, f_lo, f_mid)
    return 0.5 * (lo + hi)


def apply_profile(img: Plane, prof: DistortionProfile,
                  invert: bool = False) -> Plane:
    """Warp an image with a variable-alpha radial map.

    The output pixel at normalized radius r' takes its value from the
    source radius r solving r' = r(1 + alpha(r) r^2) along the same ray.
    Monotonicity of the forward map on the radius range is checked first.
    With ``invert=True`` the sampling uses the forward evaluation instead,
    which exactly reverses a prior ``apply_profile`` up to interpolation.
    """
    grid = np.linspace(0.0, _R_MAX, 4096)
    fwd = prof.forward(grid)
    if np.any(np.diff(fwd) <= 0):
        raise ValueError("profile not invertible (forward map not monotone)")

    src = img.values.astype(np.float64)
    mrows, ncols = src.shape
    cy = (mrows - 1) / 2.0
    cx = (ncols - 1) / 2.0
    d2 = hypot(ncols, mrows) / 2.0
    yy = (np.arange(mrows, dtype=np.float64) - cy)[:, None]
    xx = (np.arange(ncols, dtype=np.float64) - cx)[None, :]
    r_out = np.sqrt(yy * yy + xx * xx) / d2
    if invert:
        r_src = prof.forward(r_out)
    else:
        r_src = _solve_source_radius(prof, r_out)
    scale = np.where(r_out > 0, r_src / np.where(r_out > 0, r_out, 1.0), 1.0)
    sy = np.clip(cy + yy * scale, 0.0, mrows - 1)
    sx = np.clip(cx + xx * scale, 0.0, ncols - 1)
    return Plane(bilinear(src, sy, sx), img.origin)
