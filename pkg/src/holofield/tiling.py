"""Overlapping square tiles over full-size planes, and their reassembly."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class TileSpec:
    tile: int = 512
    step: int = 128

    def __post_init__(self):
        if not 0 < self.step <= self.tile:
            raise ValueError("require 0 < step <= tile")


@dataclass(frozen=True)
class TileGrid:
    """Tile origins (x0, y0) in pixels, ordered lexicographically."""

    positions: tuple
    nx_tiles: int
    ny_tiles: int
    tile: int

    def __len__(self):
        return len(self.positions)


def _axis_origins(dim: int, tile: int, step: int, dedup: bool):
    if dim < tile:
        raise ValueError(f"image dimension {dim} is smaller than tile size {tile}")
    if dedup:
        # Minimum covering set: every full step that fits, plus one tile
        # flush against the far boundary if the last step fell short.
        xs = list(range(0, dim - tile + 1, step))
        if xs[-1] != dim - tile:
            xs.append(dim - tile)
        return xs
    # Naive grid: one origin per step across the image; origins whose tile
    # would overshoot are clamped flush to the boundary, duplicates kept.
    xs = [min(k * step, dim - tile) for k in range(dim // step)]
    if not xs or max(xs) < dim - tile:
        xs.append(dim - tile)  # coverage guard for tile < 2*step edge cases
    return xs


def build_grid(nx: int, ny: int, spec: TileSpec, clamp: bool = True) -> TileGrid:
    """Grid of tile origins covering an nx-by-ny image.

    With ``clamp=True`` (default) clamped duplicates are removed, giving the
    minimum number of tiles; with ``clamp=False`` the full stepped grid is
    kept, duplicates and all, for parity with stride-based tilings. Every
    pixel is covered by at least one tile in either mode and no tile
    exceeds the image bounds.
    """
    xs = _axis_origins(nx, spec.tile, spec.step, clamp)
    ys = _axis_origins(ny, spec.tile, spec.step, clamp)
    positions = tuple((x0, y0) for x0 in xs for y0 in ys)
    return TileGrid(positions=positions, nx_tiles=len(xs), ny_tiles=len(ys), tile=spec.tile)


def extract(plane: np.ndarray, grid: TileGrid, index: int) -> np.ndarray:
    """Copy of the tile window at ``grid.positions[index]``."""
    if not 0 <= index < len(grid.positions):
        raise IndexError(f"tile index {index} out of range for {len(grid.positions)} tiles")
    x0, y0 = grid.positions[index]
    t = grid.tile
    return np.array(plane[y0 : y0 + t, x0 : x0 + t])


def reassemble(tile_probs, grid: TileGrid, nx: int, ny: int) -> np.ndarray:
    """Average per-tile probability maps back into a full-size plane.

    Each pixel is the mean of the contributions from every tile covering it;
    edge pixels appear in fewer tiles than interior ones. Accumulation runs
    in tile-index order in double precision, so the result is bit-identical
    regardless of how the per-tile maps were produced.
    """
    t = grid.tile
    provided = sorted(tile_probs, key=lambda item: item[0])
    indices = [idx for idx, _ in provided]
    if indices != list(range(len(grid.positions))):
        missing = sorted(set(range(len(grid.positions))) - set(indices))
        raise DataError(f"reassemble needs one map per grid index; missing {missing[:5]}")
    acc = np.zeros((ny, nx), dtype=np.float64)
    cov = np.zeros((ny, nx), dtype=np.int64)
    for idx, probs in provided:
        probs = np.asarray(probs)
        if probs.shape != (t, t):
            raise DataError(f"tile map {idx} has shape {probs.shape}, expected {(t, t)}")
        x0, y0 = grid.positions[idx]
        acc[y0 : y0 + t, x0 : x0 + t] += probs
        cov[y0 : y0 + t, x0 : x0 + t] += 1
    return acc / cov
