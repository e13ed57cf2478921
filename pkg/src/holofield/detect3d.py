"""Per-plane particle extraction, leader clustering, and the full pipeline."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .optics import OpticalConfig, plane_centers, reconstruct_plane
from .segment import MaskPlane, Segmenter, TileContext
from .tiling import TileGrid, TileSpec, build_grid, extract, reassemble
from .transforms import apply_value_transform


@dataclass
class Detection:
    """One connected mask component in one reconstructed plane."""

    x: float
    y: float
    z: float
    d: float
    plane_index: int
    pixel_count: int

    @property
    def coords(self):
        return (self.x, self.y, self.z, self.d)


@dataclass
class Cluster:
    members: list
    centroid: tuple


@dataclass(frozen=True)
class MatchSpec:
    """Leader-clustering distance threshold (um) over (x, y, z, d).

    All four coordinates carry equal weight by default; ``weights`` rescales
    individual axes before the Euclidean distance is taken.
    """

    threshold: float = 1000.0
    weights: tuple = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be > 0")
        if len(self.weights) != 4 or any(w < 0 for w in self.weights):
            raise ValueError("weights must be four non-negative numbers")


@dataclass
class PredictedParticle:
    """Final per-hologram output: a cluster centroid or a lone detection."""

    x: float
    y: float
    z: float
    d: float
    n_members: int = 1
    assigned: bool = False

    @property
    def coords(self):
        return (self.x, self.y, self.z, self.d)


def extract_particles(mask: MaskPlane, cfg: OpticalConfig, threshold: float = 0.5):
    """Turn a plane mask into detections via 4-connected components.

    Components touch along x or y only (not diagonally); an isolated pixel
    counts as a particle. Each component reports its bounding-box center as
    (x, y), the larger bounding-box extent as the diameter, and the plane's
    bin-center depth as z. Detections come back in raster order of each
    component's first pixel.
    """
    binary = mask.probs if mask.probs.dtype == bool else mask.binarize(threshold)
    labels, n = kernels.label_components(binary)
    if n == 0:
        return []
    bounds = kernels.component_bounds(labels, n)
    dets = []
    for min_r, max_r, min_c, max_c, count in bounds:
        x = cfg.dx * (min_c + max_c) / 2.0
        y = cfg.dy * (min_r + max_r) / 2.0
        d = max((max_c - min_c + 1) * cfg.dx, (max_r - min_r + 1) * cfg.dy)
        dets.append(
            Detection(
                x=float(x),
                y=float(y),
                z=float(mask.z),
                d=float(d),
                plane_index=int(mask.plane_index),
                pixel_count=int(count),
            )
        )
    return dets


def leader_cluster(dets, spec: MatchSpec):
    """Group detections with a single fixed-order leader pass.

    Detections are visited in the given order (the pipeline supplies plane
    index, then extraction order). The first detection founds a cluster and
    becomes its leader; each later one joins the first leader within the
    threshold or founds a new cluster. Clusters that never attracted a
    second member are returned separately as unassigned detections, so the
    particle count is ``len(clusters) + len(unassigned)``.
    """
    dets = list(dets)
    if not dets:
        return [], []
    pts = np.array([d.coords for d in dets], dtype=np.float64)
    pts *= np.asarray(spec.weights, dtype=np.float64)
    assign = kernels.leader_assign(pts, spec.threshold)
    n_clusters = int(assign.max()) + 1
    members: list[list] = [[] for _ in range(n_clusters)]
    for det, cid in zip(dets, assign):
        members[cid].append(det)
    clusters = []
    unassigned = []
    for group in members:
        if len(group) == 1:
            unassigned.append(group[0])
        else:
            arr = np.array([g.coords for g in group], dtype=np.float64)
            clusters.append(Cluster(members=group, centroid=tuple(arr.mean(axis=0))))
    return clusters, unassigned


def predictions_from_clusters(clusters, unassigned):
    """Flatten clustering output into the final predicted particle list."""
    preds = [
        PredictedParticle(*c.centroid, n_members=len(c.members), assigned=True)
        for c in clusters
    ]
    preds.extend(
        PredictedParticle(d.x, d.y, d.z, d.d, n_members=1, assigned=False)
        for d in unassigned
    )
    return preds


@dataclass
class PipelineResult:
    predictions: list
    detections: list = field(default_factory=list)
    n_clusters: int = 0
    n_unassigned: int = 0


# Worker-side state for plane-parallel processing. Each worker receives an
# immutable task snapshot at pool start and returns plain value objects, so
# results are independent of scheduling.
_PLANE_STATE = {}


def _init_plane_worker(state):
    _PLANE_STATE.update(state)


def _plane_job(j: int):
    s = _PLANE_STATE
    return _process_plane(
        j, s["h_c"], s["cfg"], s["grid"], s["segmenter"], s["tile_transform"], s["hid"], s["zs"]
    )


def _process_plane(j, h_c, cfg, grid, segmenter, tile_transform, hid, zs):
    z = zs[j]
    amp = reconstruct_plane(h_c, z, cfg) if segmenter.needs_pixels else None
    tile_maps = []
    for ti, (x0, y0) in enumerate(grid.positions):
        tile_img = None
        if amp is not None:
            tile_img = extract(amp, grid, ti)
            tile_img = apply_value_transform(tile_img, tile_transform)
        probs = segmenter.predict(tile_img, TileContext(hid, j, ti, x0, y0, z))
        tile_maps.append((ti, probs))
    plane_probs = reassemble(tile_maps, grid, cfg.nx, cfg.ny)
    mask = MaskPlane(probs=plane_probs, z=z, plane_index=j)
    return extract_particles(mask, cfg)


def process_hologram(
    h_c: np.ndarray,
    cfg: OpticalConfig,
    segmenter: Segmenter,
    tile_spec: TileSpec | None = None,
    match: MatchSpec | None = None,
    hologram_transform: str = "none",
    tile_transform: str = "none",
    hid: int = 0,
    workers: int = 1,
    plane_skip: bool = True,
    grid: TileGrid | None = None,
) -> PipelineResult:
    """Run the plane loop over a normalized hologram and cluster the output.

    Per plane: reconstruct, tile, segment, reassemble, binarize at 0.5,
    extract particles. All per-plane detections are then concatenated in
    plane order and leader-clustered into the final particle list.

    Planes may be processed in parallel (``workers`` > 1) with identical
    results; ``plane_skip`` lets segmenters that know their nonzero planes
    (oracle, external masks) skip the rest, which cannot change the output
    since skipped planes detect nothing by construction.
    """
    tile_spec = tile_spec or TileSpec()
    match = match or MatchSpec()
    grid = grid or build_grid(cfg.nx, cfg.ny, tile_spec, clamp=True)
    h_c = apply_value_transform(np.asarray(h_c, dtype=np.float64), hologram_transform)
    zs = plane_centers(cfg)

    planes = None
    if plane_skip:
        planes = segmenter.active_planes(hid, cfg)
    if planes is None:
        planes = range(cfg.n_planes)
    planes = list(planes)

    if workers > 1 and len(planes) > 1:
        state = {
            "h_c": h_c,
            "cfg": cfg,
            "grid": grid,
            "segmenter": segmenter,
            "tile_transform": tile_transform,
            "hid": hid,
            "zs": zs,
        }
        chunk = max(1, len(planes) // (4 * workers))
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_init_plane_worker, initargs=(state,)
        ) as pool:
            per_plane = list(pool.map(_plane_job, planes, chunksize=chunk))
    else:
        per_plane = [
            _process_plane(j, h_c, cfg, grid, segmenter, tile_transform, hid, zs)
            for j in planes
        ]

    detections = [det for plane_dets in per_plane for det in plane_dets]
    clusters, unassigned = leader_cluster(detections, match)
    return PipelineResult(
        predictions=predictions_from_clusters(clusters, unassigned),
        detections=detections,
        n_clusters=len(clusters),
        n_unassigned=len(unassigned),
    )
