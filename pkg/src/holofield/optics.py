"""Angular-spectrum wave propagation and hologram refocusing.

Conventions used throughout the package:

* images and fields are 2-D numpy arrays of shape ``(ny, nx)``; rows run
  along y and columns along x,
* all lengths are micrometers,
* the camera plane sits at z = 0 and particle depths are positive
  distances from the camera,
* complex fields are ``complex128``; 8-bit images are promoted to
  ``float64`` on load,
* Fourier transforms use numpy's unnormalized forward / 1-over-P inverse
  convention. Since the transfer function has unit modulus on the
  propagating band, any self-consistent convention yields the same
  results; this one is pinned for bit reproducibility.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, fields
from functools import lru_cache

import numpy as np

from .errors import ZeroBackgroundError


@dataclass(frozen=True)
class OpticalConfig:
    """Instrument geometry. Lengths in micrometers.

    Defaults describe a UV in-line holographic cloud probe: 355 nm laser,
    2.96 um pixel pitch on a 4872 x 3248 sensor, with particles located
    between 14.072 mm and 158.928 mm from the camera and ``n_planes``
    refocus planes spanning that range.
    """

    wavelength: float = 0.355
    dx: float = 2.96
    dy: float = 2.96
    nx: int = 4872
    ny: int = 3248
    z_min: float = 14072.0
    z_max: float = 158928.0
    n_planes: int = 1000

    def __post_init__(self):
        if self.wavelength <= 0:
            raise ValueError("wavelength must be > 0")
        if self.dx <= 0 or self.dy <= 0:
            raise ValueError("pixel pitch must be > 0")
        if self.nx < 2 or self.ny < 2:
            raise ValueError("sensor must be at least 2x2 pixels")
        if not self.z_min < self.z_max:
            raise ValueError("z_min must be < z_max")
        if self.n_planes < 1:
            raise ValueError("n_planes must be >= 1")

    @property
    def width_um(self) -> float:
        return self.nx * self.dx

    @property
    def height_um(self) -> float:
        return self.ny * self.dy

    @property
    def plane_spacing(self) -> float:
        return (self.z_max - self.z_min) / self.n_planes

    def config_hash(self) -> str:
        """Short stable digest of the geometry, for output sidecars."""
        key = ",".join(f"{f.name}={getattr(self, f.name)!r}" for f in fields(self))
        return hashlib.sha256(key.encode()).hexdigest()[:12]


def frequency_grid(cfg: OpticalConfig) -> np.ndarray:
    """Radial spatial frequency rho (cycles/um) on the (ny, nx) FFT grid.

    Uses the discrete Fourier frequencies implied by (nx, dx) and (ny, dy);
    the DC bin has rho = 0.
    """
    fx = np.fft.fftfreq(cfg.nx, d=cfg.dx)
    fy = np.fft.fftfreq(cfg.ny, d=cfg.dy)
    return np.hypot(fx[None, :], fy[:, None])


@lru_cache(maxsize=8)
def _phase_root(cfg: OpticalConfig):
    """sqrt(1 - (lambda*rho)^2) on the propagating band, plus the band mask.

    Evanescent bins (lambda*rho >= 1) are flagged for zeroing rather than
    exponential attenuation: this keeps the operator exactly unitary and
    round-trip invertible. At the default geometry the discrete grid never
    reaches the evanescent region.
    """
    rho = frequency_grid(cfg)
    arg = 1.0 - (cfg.wavelength * rho) ** 2
    band = arg > 0.0
    root = np.sqrt(np.where(band, arg, 0.0))
    root.setflags(write=False)
    band.setflags(write=False)
    return root, band


def transfer_function(z: float, cfg: OpticalConfig) -> np.ndarray:
    """Angular-spectrum transfer function H(rho, z) on the FFT grid.

    H = exp(j 2 pi z / lambda * sqrt(1 - lambda^2 rho^2)) where
    lambda*rho < 1, and 0 on the evanescent bins.
    """
    root, band = _phase_root(cfg)
    h = np.exp((2j * np.pi * z / cfg.wavelength) * root)
    if not band.all():
        h = np.where(band, h, 0.0)
    return h


def propagate(field: np.ndarray, z: float, cfg: OpticalConfig) -> np.ndarray:
    """Propagate a complex field a signed distance z along the optic axis.

    Returns IFFT( H(rho, z) * FFT(field) ) as complex128. ``z = 0`` is the
    identity (H is exactly 1 there, evanescent bins included, so the field
    is returned unchanged up to a copy).
    """
    field = np.asarray(field)
    if field.shape != (cfg.ny, cfg.nx):
        raise ValueError(
            f"field shape {field.shape} does not match config ({cfg.ny}, {cfg.nx})"
        )
    if z == 0:
        return field.astype(np.complex128, copy=True)
    return np.fft.ifft2(np.fft.fft2(field) * transfer_function(z, cfg))


def normalize_background(raw: np.ndarray, ensemble) -> np.ndarray:
    """Divide a raw hologram by the pixel-wise mean of an ensemble of holograms.

    The ensemble normalizes out persistent intensity structure; its windowing
    (how many neighbors, whether the image itself is included) is up to the
    caller. Raises ZeroBackgroundError if the ensemble mean has a zero pixel.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if len(ensemble) == 0:
        raise ValueError("ensemble must contain at least one image")
    stack = np.stack([np.asarray(im, dtype=np.float64) for im in ensemble])
    if stack.shape[1:] != raw.shape:
        raise ValueError("ensemble images must match the raw image dimensions")
    mean = stack.mean(axis=0)
    zero = np.argwhere(mean == 0.0)
    if zero.size:
        r, c = zero[0]
        raise ZeroBackgroundError(
            f"ensemble mean is zero at pixel (row={r}, col={c})"
        )
    return raw / mean


def reconstruct_plane(h_c: np.ndarray, z: float, cfg: OpticalConfig) -> np.ndarray:
    """Refocus a normalized hologram at depth z; returns the amplitude image.

    The hologram is embedded as a real-valued complex field and propagated
    by z from the camera plane. Output is |E|, not |E|^2: in-focus opaque
    particles appear as dark disks either way and the amplitude keeps the
    dynamic range tame.
    """
    if not (cfg.z_min <= z <= cfg.z_max):
        warnings.warn(
            f"reconstruction depth z={z} lies outside [{cfg.z_min}, {cfg.z_max}]",
            stacklevel=2,
        )
    field = np.asarray(h_c, dtype=np.float64).astype(np.complex128)
    return np.abs(propagate(field, z, cfg))


def plane_centers(cfg: OpticalConfig) -> np.ndarray:
    """Depths of the n_planes bin centers: z_j = z_min + (j + 0.5) * spacing."""
    return cfg.z_min + (np.arange(cfg.n_planes) + 0.5) * cfg.plane_spacing


def plane_index(z: float, cfg: OpticalConfig) -> int:
    """Index of the depth bin containing z.

    Bins are half-open [z_min + j*spacing, z_min + (j+1)*spacing); the top
    edge z_max is folded into the last bin.
    """
    j = int(np.floor((z - cfg.z_min) / cfg.plane_spacing))
    return min(max(j, 0), cfg.n_planes - 1)
