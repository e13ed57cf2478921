"""Pluggable per-tile in-focus particle segmenters.

A segmenter maps a (value-transformed) tile image to a same-size map of
per-pixel probabilities in [0, 1] that the pixel lies inside an in-focus
particle. Segmenters are read-only after construction and safe to call
concurrently. Neural inference is deliberately out of process: masks from
an externally trained model enter through ExternalMaskSegmenter and the
tile/mask file formats, keeping this package free of deep-learning
runtimes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fileio, kernels
from .errors import DataError
from .optics import OpticalConfig, plane_index
from .simulate import ParticleField, disk_window
from .tiling import TileGrid


@dataclass
class MaskPlane:
    """Full-size per-pixel in-focus probabilities at one reconstructed depth."""

    probs: np.ndarray
    z: float
    plane_index: int

    @property
    def ny(self):
        return self.probs.shape[0]

    @property
    def nx(self):
        return self.probs.shape[1]

    def binarize(self, threshold: float = 0.5) -> np.ndarray:
        """Pixels strictly above the threshold are labeled 1."""
        return self.probs > threshold


@dataclass(frozen=True)
class TileContext:
    """Where a tile sits: hologram, depth plane, and grid position."""

    hid: int
    plane: int
    tile_index: int
    x0: int
    y0: int
    z: float


class Segmenter:
    """Behavioral contract for tile mask predictors.

    ``needs_pixels`` tells the pipeline whether tiles must actually be
    reconstructed and extracted (False for sources that only use the tile
    context). ``active_planes`` may narrow the plane loop to the planes
    that can produce a nonzero mask; returning None means every plane must
    be evaluated.
    """

    needs_pixels = True

    def predict(self, tile, ctx: TileContext) -> np.ndarray:
        raise NotImplementedError

    def active_planes(self, hid: int, cfg: OpticalConfig):
        return None


class OracleSegmenter(Segmenter):
    """Serves the rasterized truth masks of a known particle field.

    Stands in for a trained model so the downstream pipeline can be
    exercised and scored without one.
    """

    needs_pixels = False

    def __init__(self, truth: ParticleField, cfg: OpticalConfig, grid: TileGrid):
        self.truth = truth
        self.cfg = cfg
        self.grid = grid
        self._by_plane: dict[int, list] = {}
        for p in truth.particles:
            self._by_plane.setdefault(plane_index(p.z, cfg), []).append(p)

    def predict(self, tile, ctx: TileContext) -> np.ndarray:
        t = self.grid.tile
        out = np.zeros((t, t), dtype=np.float64)
        for p in self._by_plane.get(ctx.plane, ()):
            win = disk_window(
                p.x, p.y, p.d, self.cfg, col0=ctx.x0, row0=ctx.y0, width=t, height=t
            )
            if win is not None:
                rs, cs, patch = win
                out[rs, cs][patch] = 1.0
        return out

    def active_planes(self, hid, cfg):
        return sorted(self._by_plane)


class FocusSegmenter(Segmenter):
    """Classical amplitude-threshold baseline.

    Marks pixels darker than ``amp_thresh`` times the tile median whose
    4-connected component holds at least ``min_px`` pixels. The defaults
    were tuned on synthetic single-particle fixtures.
    """

    def __init__(self, amp_thresh: float = 0.55, min_px: int = 4):
        if not 0 < amp_thresh < 1:
            raise ValueError("amp_thresh must lie in (0, 1)")
        self.amp_thresh = amp_thresh
        self.min_px = int(min_px)

    def predict(self, tile, ctx: TileContext) -> np.ndarray:
        tile = np.asarray(tile, dtype=np.float64)
        dark = tile < self.amp_thresh * np.median(tile)
        if not dark.any():
            return np.zeros_like(tile)
        labels, n = kernels.label_components(dark)
        if n == 0:
            return np.zeros_like(tile)
        counts = np.bincount(labels.ravel(), minlength=n + 1)
        keep = counts >= self.min_px
        keep[0] = False
        return keep[labels].astype(np.float64)


class ExternalMaskSegmenter(Segmenter):
    """Serves probability maps produced outside the process.

    The manifest is line-delimited JSON with records
    ``{"hid": ..., "plane": ..., "tile_index": ..., "path": ...}``; paths
    are resolved against the mask directory. PGM masks map gray values to
    value/255; ``.f32``/``.raw`` files are 32-bit little-endian floats of
    exactly tile*tile entries.
    """

    needs_pixels = False

    def __init__(self, mask_dir, manifest, tile: int):
        from pathlib import Path

        self.mask_dir = Path(mask_dir)
        self.tile = int(tile)
        if isinstance(manifest, (str, Path)):
            manifest = fileio.read_jsonl(manifest)
        self._paths = {}
        for rec in manifest:
            key = (int(rec["hid"]), int(rec["plane"]), int(rec["tile_index"]))
            self._paths[key] = str(rec["path"])

    def predict(self, tile, ctx: TileContext) -> np.ndarray:
        key = (ctx.hid, ctx.plane, ctx.tile_index)
        rel = self._paths.get(key)
        if rel is None:
            raise DataError(
                f"no external mask for hid={ctx.hid}, plane={ctx.plane}, tile={ctx.tile_index}"
            )
        path = self.mask_dir / rel
        if path.suffix.lower() in (".f32", ".raw"):
            probs = _read_f32_mask(path, self.tile)
        else:
            probs = np.asarray(fileio.read_gray8(path), dtype=np.float64) / 255.0
        if probs.shape != (self.tile, self.tile):
            raise DataError(f"mask {path} has shape {probs.shape}, expected square of {self.tile}")
        if probs.min() < 0.0 or probs.max() > 1.0:
            raise DataError(f"mask {path} holds values outside [0, 1]")
        return probs

    def active_planes(self, hid, cfg):
        return sorted({plane for h, plane, _ in self._paths if h == hid})


def _read_f32_mask(path, tile: int) -> np.ndarray:
    data = np.fromfile(path, dtype="<f4")
    if data.size != tile * tile:
        raise DataError(f"mask file {path} is truncated or mis-sized ({data.size} floats)")
    return data.astype(np.float64).reshape(tile, tile)
