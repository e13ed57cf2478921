"""Value normalizations and stochastic corruption transforms for images/tiles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

VALUE_TRANSFORMS = ("none", "normalize01", "standardize", "symmetric", "div255")

# Gaussian blur kernel radius is fixed at 2 pixels (a 5x5 truncated kernel);
# only the standard deviation varies.
BLUR_RADIUS = 2


def apply_value_transform(img, kind: str):
    """Map pixel values per the named transform; "none" is the identity.

    normalize01 rescales to [0, 1] (a constant image maps to all zeros by
    convention); standardize produces mean 0 / sd 1 and rejects constant
    images; symmetric rescales to [-1, 1]; div255 divides by 255.
    """
    if kind not in VALUE_TRANSFORMS:
        raise ValueError(f"unknown value transform {kind!r}")
    img = np.asarray(img)
    if img.size == 0:
        raise ValueError("empty image")
    if kind == "none":
        return img
    img = img.astype(np.float64)
    if kind == "div255":
        return img / 255.0
    if kind == "standardize":
        sd = img.std()
        if sd == 0:
            raise ValueError("cannot standardize a constant image (sd = 0)")
        return (img - img.mean()) / sd
    lo, hi = img.min(), img.max()
    span = hi - lo
    unit = np.zeros_like(img) if span == 0 else (img - lo) / span
    if kind == "normalize01":
        return unit
    return 2.0 * unit - 1.0  # symmetric


@dataclass(frozen=True)
class CorruptionSpec:
    """Maximum magnitudes for the stochastic tile corruptions.

    Each corruption draws its magnitude uniformly from [0, max] per tile,
    so a zero maximum disables it. ``seed`` travels with the spec in config
    files; the rng itself is passed to :func:`corrupt` explicitly.
    """

    blur_sigma_max: float = 0.0
    noise_sigma_max: float = 0.0
    brightness_max: float = 0.0
    flip_prob: float = 0.5
    seed: int = 0

    def __post_init__(self):
        for name in ("blur_sigma_max", "noise_sigma_max", "brightness_max"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0")
        if not 0 <= self.flip_prob <= 1:
            raise ValueError("flip_prob must lie in [0, 1]")


def _gaussian_blur(img, sigma: float):
    if sigma <= 0:
        return img
    k = np.arange(-BLUR_RADIUS, BLUR_RADIUS + 1, dtype=np.float64)
    w = np.exp(-0.5 * (k / sigma) ** 2)
    w /= w.sum()
    out = ndimage.correlate1d(img, w, axis=0, mode="reflect")
    return ndimage.correlate1d(out, w, axis=1, mode="reflect")


def corrupt(tile, spec: CorruptionSpec, rng: np.random.Generator):
    """Blur, then add Gaussian noise, then scale brightness; clip to [0, 255].

    Magnitudes are drawn per call: blur sd ~ U(0, blur_sigma_max), noise sd
    ~ U(0, noise_sigma_max) gray levels, brightness factor ~
    U(0, brightness_max). The transform order is pinned. Deterministic
    given the rng state.
    """
    out = np.asarray(tile, dtype=np.float64)
    if spec.blur_sigma_max > 0:
        out = _gaussian_blur(out, float(rng.uniform(0.0, spec.blur_sigma_max)))
    if spec.noise_sigma_max > 0:
        sd = float(rng.uniform(0.0, spec.noise_sigma_max))
        if sd > 0:
            out = out + rng.normal(0.0, sd, size=out.shape)
    if spec.brightness_max > 0:
        out = out * float(rng.uniform(0.0, spec.brightness_max))
    return np.clip(out, 0.0, 255.0)


def random_flip(tile, mask, prob: float, rng: np.random.Generator):
    """Flip tile and mask together along x and/or y, each with ``prob``.

    The two axes are decided independently, so with prob 0.5 about a
    quarter of tiles end up flipped in both.
    """
    tile = np.asarray(tile)
    mask = np.asarray(mask)
    if tile.shape != mask.shape:
        raise ValueError(f"tile shape {tile.shape} != mask shape {mask.shape}")
    if rng.random() < prob:  # x flip: columns reverse
        tile = tile[:, ::-1]
        mask = mask[:, ::-1]
    if rng.random() < prob:  # y flip: rows reverse
        tile = tile[::-1, :]
        mask = mask[::-1, :]
    return tile, mask
