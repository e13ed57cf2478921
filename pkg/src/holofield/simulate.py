"""Forward synthesis of holograms, truth masks, and training-tile datasets."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .optics import OpticalConfig, plane_index, propagate, transfer_function
from .tiling import TileSpec, build_grid, extract

# Gray level of the particle-free background in quantized holograms.
BACKGROUND_GRAY = 127.0


@dataclass
class Particle:
    """One spherical particle: transverse position, depth, and diameter (um).

    x and y are measured from the center of the corner pixel; z is the
    distance from the camera plane.
    """

    x: float
    y: float
    z: float
    d: float


@dataclass
class ParticleField:
    hologram_id: int
    particles: list = field(default_factory=list)

    def __len__(self):
        return len(self.particles)


@dataclass(frozen=True)
class GammaSizeDist:
    """Truncated gamma distribution for particle diameters (um).

    The shape/scale defaults are assumptions chosen to span several pixels
    up to sub-tile sizes at the default pixel pitch; they are fully
    configurable.
    """

    shape: float = 2.0
    scale: float = 10.0
    d_floor: float = 6.0
    d_cap: float = 200.0

    def __post_init__(self):
        if self.shape <= 0 or self.scale <= 0:
            raise ValueError("gamma shape and scale must be > 0")
        if not 0 < self.d_floor < self.d_cap:
            raise ValueError("require 0 < d_floor < d_cap")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n diameters by rejection inside [d_floor, d_cap]."""
        out = np.empty(0)
        while out.size < n:
            block = rng.gamma(self.shape, self.scale, size=max(2 * (n - out.size), 16))
            keep = block[(block >= self.d_floor) & (block <= self.d_cap)]
            out = np.concatenate([out, keep])
        return out[:n]


@dataclass(frozen=True)
class SplitSpec:
    n_train: int = 100
    n_valid: int = 10
    n_test: int = 10
    seed: int = 0

    def __post_init__(self):
        if min(self.n_train, self.n_valid, self.n_test) < 0:
            raise ValueError("split counts must be >= 0")

    @property
    def total(self) -> int:
        return self.n_train + self.n_valid + self.n_test


def validate_field(fld: ParticleField, cfg: OpticalConfig) -> None:
    """Raise if any particle violates the sensor footprint or depth range."""
    for i, p in enumerate(fld.particles):
        if not (0 <= p.x < cfg.width_um and 0 <= p.y < cfg.height_um):
            raise ValueError(f"particle {i} of hologram {fld.hologram_id} lies off-sensor")
        if not (cfg.z_min <= p.z <= cfg.z_max):
            raise ValueError(f"particle {i} of hologram {fld.hologram_id} is out of depth range")
        if p.d <= 0:
            raise ValueError(f"particle {i} of hologram {fld.hologram_id} has d <= 0")


def sample_field(
    cfg: OpticalConfig,
    n_particles: int,
    dist: GammaSizeDist | None = None,
    rng_seed=0,
    hologram_id: int = 0,
) -> ParticleField:
    """Uniformly place particles over the sensor footprint and depth range.

    Deterministic for a given seed; the seed may be an int or a sequence
    (e.g. ``(master_seed, hologram_index)`` for per-hologram streams).
    """
    if n_particles < 0:
        raise ValueError("n_particles must be >= 0")
    dist = dist or GammaSizeDist()
    rng = np.random.default_rng(rng_seed)
    xs = rng.uniform(0.0, cfg.width_um, n_particles)
    ys = rng.uniform(0.0, cfg.height_um, n_particles)
    zs = rng.uniform(cfg.z_min, cfg.z_max, n_particles)
    ds = dist.sample(rng, n_particles)
    parts = [Particle(float(x), float(y), float(z), float(d)) for x, y, z, d in zip(xs, ys, zs, ds)]
    return ParticleField(hologram_id=hologram_id, particles=parts)


def disk_window(x, y, d, cfg, col0=0, row0=0, width=None, height=None):
    """Rasterize one disk against a window of the pixel-center grid.

    A pixel belongs to the disk iff its center lies within d/2 of (x, y).
    Pixel centers sit at (col*dx, row*dy) in absolute image coordinates;
    the window starts at pixel (row0, col0) and spans height x width.
    Returns ``(row_slice, col_slice, patch)`` in window-local coordinates,
    or None if the disk misses the window entirely.
    """
    width = cfg.nx if width is None else width
    height = cfg.ny if height is None else height
    r = d / 2.0
    # Bounding box with a 1-pixel guard; the exact per-pixel test decides.
    c_lo = max(int(math.floor((x - r) / cfg.dx)) - 1, col0)
    c_hi = min(int(math.ceil((x + r) / cfg.dx)) + 1, col0 + width - 1)
    r_lo = max(int(math.floor((y - r) / cfg.dy)) - 1, row0)
    r_hi = min(int(math.ceil((y + r) / cfg.dy)) + 1, row0 + height - 1)
    if c_lo > c_hi or r_lo > r_hi:
        return None
    cols = np.arange(c_lo, c_hi + 1)
    rows = np.arange(r_lo, r_hi + 1)
    patch = (cols * cfg.dx - x) ** 2 + ((rows * cfg.dy - y) ** 2)[:, None] <= r * r
    if not patch.any():
        return None
    return (
        slice(r_lo - row0, r_hi + 1 - row0),
        slice(c_lo - col0, c_hi + 1 - col0),
        patch,
    )


def render_truth_masks(fld: ParticleField, cfg: OpticalConfig):
    """Binary in-focus masks per depth bin.

    Each particle paints a filled disk of its own diameter at (x, y) into
    the mask of the bin containing its z. Only planes holding at least one
    particle are returned, as ``(plane_index, bool array)`` pairs in plane
    order.
    """
    by_plane: dict[int, np.ndarray] = {}
    for p in fld.particles:
        j = plane_index(p.z, cfg)
        mask = by_plane.get(j)
        if mask is None:
            mask = np.zeros((cfg.ny, cfg.nx), dtype=bool)
            by_plane[j] = mask
        win = disk_window(p.x, p.y, p.d, cfg)
        if win is not None:
            rs, cs, patch = win
            mask[rs, cs] |= patch
    return [(j, by_plane[j]) for j in sorted(by_plane)]


def _incident_phase(z: float, cfg: OpticalConfig) -> complex:
    """Phase of the unit reference wave at a plane z upstream of the camera."""
    return complex(np.exp(2j * np.pi * z / cfg.wavelength))


def render_hologram(fld: ParticleField, cfg: OpticalConfig, mode: str = "superposition") -> np.ndarray:
    """Simulate the 8-bit hologram of a particle field.

    superposition (default): each particle's disk, carrying the incident
    plane-wave phase at its depth, is propagated to the camera and
    subtracted from the reference; valid for sparse fields and linear in
    the particles. sequential: particles are visited far-to-near and the
    field is occluded plane by plane, which models shadowing between
    overlapping particles.

    The camera intensity |E|^2 is scaled so the empty-field background maps
    to gray level 127, clipped to [0, 255], and rounded to 8 bits.
    """
    if mode not in ("superposition", "sequential"):
        raise ValueError(f"unknown render mode {mode!r}")
    shape = (cfg.ny, cfg.nx)
    if not fld.particles:
        e_cam = np.ones(shape, dtype=np.complex128)
    elif mode == "superposition":
        spec_acc = np.zeros(shape, dtype=np.complex128)
        aperture = np.zeros(shape, dtype=np.float64)
        for p in fld.particles:
            win = disk_window(p.x, p.y, p.d, cfg)
            if win is None:
                continue
            rs, cs, patch = win
            sub = aperture[rs, cs]
            sub[patch] = 1.0
            spec_acc += (_incident_phase(p.z, cfg) * transfer_function(-p.z, cfg)) * np.fft.fft2(aperture)
            sub[patch] = 0.0
        e_cam = 1.0 - np.fft.ifft2(spec_acc)
    else:
        order = sorted(fld.particles, key=lambda p: -p.z)
        _warn_on_overlap(order, cfg)
        z_cur = order[0].z
        e_cam = np.full(shape, _incident_phase(z_cur, cfg), dtype=np.complex128)
        for p in order:
            if p.z != z_cur:
                e_cam = propagate(e_cam, p.z - z_cur, cfg)
                z_cur = p.z
            win = disk_window(p.x, p.y, p.d, cfg)
            if win is not None:
                rs, cs, patch = win
                e_cam[rs, cs][patch] = 0.0
        e_cam = propagate(e_cam, -z_cur, cfg)
    intensity = np.abs(e_cam) ** 2
    return np.clip(np.rint(intensity * BACKGROUND_GRAY), 0, 255).astype(np.uint8)


def _warn_on_overlap(particles, cfg):
    for i in range(len(particles)):
        a = particles[i]
        for b in particles[i + 1 :]:
            if math.hypot(a.x - b.x, a.y - b.y) < (a.d + b.d) / 2.0:
                warnings.warn(
                    "sequential render: transversally overlapping disks shadow each other",
                    stacklevel=3,
                )
                return


def quantize_amplitude(amp: np.ndarray) -> np.ndarray:
    """Map a reconstructed amplitude plane to 8 bits on the hologram scale."""
    return np.clip(np.rint(np.asarray(amp) * BACKGROUND_GRAY), 0, 255).astype(np.uint8)


def _window_has_focus(bin_particles, cfg, x0, y0, tile) -> bool:
    for p in bin_particles:
        if disk_window(p.x, p.y, p.d, cfg, col0=x0, row0=y0, width=tile, height=tile) is not None:
            return True
    return False


def make_tile_dataset(
    holograms,
    truths,
    cfg: OpticalConfig,
    tile: TileSpec,
    n_negatives: int,
    frac_near_focus: float = 0.5,
    seed=0,
    out_dir=None,
):
    """Cut training tiles (image + mask pairs) from reconstructed planes.

    One positive tile per particle, sampled uniformly from the grid tiles
    containing it at its in-focus plane. Negatives carry empty masks;
    ``frac_near_focus`` of them sit one depth bin away from an in-focus
    particle and the rest are random particle-free tiles. Tiles are written
    as 8-bit PNGs and masks as PGMs when ``out_dir`` is given, along with a
    line-delimited JSON manifest; the manifest records are returned either
    way.
    """
    from . import fileio

    if len(holograms) != len(truths):
        raise ValueError("holograms and truths must align")
    rng = np.random.default_rng(seed)
    grid = build_grid(cfg.nx, cfg.ny, tile, clamp=True)
    records = []
    plane_cache: dict[tuple[int, int], np.ndarray] = {}

    def recon(i, j):
        key = (i, j)
        if key not in plane_cache:
            from .optics import plane_centers, reconstruct_plane

            h_c = np.asarray(holograms[i], dtype=np.float64) / BACKGROUND_GRAY
            plane_cache[key] = reconstruct_plane(h_c, plane_centers(cfg)[j], cfg)
            if len(plane_cache) > 8:
                plane_cache.pop(next(iter(plane_cache)))
        return plane_cache[key]

    bins_per_holo = []
    for fld in truths:
        bins: dict[int, list] = {}
        for p in fld.particles:
            bins.setdefault(plane_index(p.z, cfg), []).append(p)
        bins_per_holo.append(bins)

    def covering_tiles(p):
        col = int(round(p.x / cfg.dx))
        row = int(round(p.y / cfg.dy))
        return [
            ti
            for ti, (x0, y0) in enumerate(grid.positions)
            if x0 <= col < x0 + tile.tile and y0 <= row < y0 + tile.tile
        ]

    def emit(i, j, ti, label):
        x0, y0 = grid.positions[ti]
        img_tile = quantize_amplitude(extract(recon(i, j), grid, ti))
        mask_tile = np.zeros((tile.tile, tile.tile), dtype=bool)
        for p in bins_per_holo[i].get(j, []):
            win = disk_window(p.x, p.y, p.d, cfg, col0=x0, row0=y0, width=tile.tile, height=tile.tile)
            if win is not None:
                rs, cs, patch = win
                mask_tile[rs, cs] |= patch
        seq = len(records)
        rec = {
            "tile": f"tiles/t{seq:06d}.png",
            "mask": f"masks/m{seq:06d}.pgm",
            "hid": truths[i].hologram_id,
            "plane": int(j),
            "label": int(label),
        }
        if out_dir is not None:
            fileio.write_gray8(out_dir / rec["tile"], img_tile)
            fileio.write_gray8(out_dir / rec["mask"], mask_tile.astype(np.uint8) * 255)
        records.append(rec)

    # Positives: every particle contributes exactly one in-focus tile.
    for i, fld in enumerate(truths):
        for p in fld.particles:
            j = plane_index(p.z, cfg)
            choices = covering_tiles(p)
            ti = int(choices[rng.integers(len(choices))])
            emit(i, j, ti, 1)

    n_near = int(round(frac_near_focus * n_negatives))
    n_far = n_negatives - n_near
    all_parts = [(i, p) for i, fld in enumerate(truths) for p in fld.particles]

    def draw_near():
        for _ in range(200):
            if not all_parts:
                return None
            i, p = all_parts[rng.integers(len(all_parts))]
            j = plane_index(p.z, cfg)
            j2 = j + (1 if rng.random() < 0.5 else -1)
            if not 0 <= j2 < cfg.n_planes:
                j2 = 2 * j - j2  # bounce off the range edge
            if not 0 <= j2 < cfg.n_planes:
                continue
            choices = covering_tiles(p)
            ti = int(choices[rng.integers(len(choices))])
            x0, y0 = grid.positions[ti]
            if not _window_has_focus(bins_per_holo[i].get(j2, []), cfg, x0, y0, tile.tile):
                return i, j2, ti
        return None

    def draw_far():
        for _ in range(200):
            i = int(rng.integers(len(truths)))
            j = int(rng.integers(cfg.n_planes))
            ti = int(rng.integers(len(grid.positions)))
            x0, y0 = grid.positions[ti]
            if not _window_has_focus(bins_per_holo[i].get(j, []), cfg, x0, y0, tile.tile):
                return i, j, ti
        return None

    for kind, count in (("near", n_near), ("far", n_far)):
        draw = draw_near if kind == "near" else draw_far
        for _ in range(count):
            got = draw()
            if got is None:
                raise DataError("insufficient particle-free tiles for negative sampling")
            emit(*got, 0)

    if out_dir is not None:
        with open(out_dir / "manifest.jsonl", "w") as fh:
            for rec in records:
                fh.write(json.dumps(rec) + "\n")
    return records
