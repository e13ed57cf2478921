"""In-line hologram simulation, angular-spectrum refocusing, and 3-D particle recovery."""

from .detect3d import (
    Cluster,
    Detection,
    MatchSpec,
    PredictedParticle,
    extract_particles,
    leader_cluster,
    process_hologram,
)
from .errors import ConfigError, DataError, HoloError, ZeroBackgroundError
from .kernels import BACKEND, HAVE_COMPILED
from .optics import (
    OpticalConfig,
    frequency_grid,
    normalize_background,
    plane_centers,
    plane_index,
    propagate,
    reconstruct_plane,
)
from .segment import (
    ExternalMaskSegmenter,
    FocusSegmenter,
    MaskPlane,
    OracleSegmenter,
    Segmenter,
    TileContext,
)
from .simulate import (
    GammaSizeDist,
    Particle,
    ParticleField,
    SplitSpec,
    make_tile_dataset,
    render_hologram,
    render_truth_masks,
    sample_field,
)
from .tiling import TileGrid, TileSpec, build_grid, extract, reassemble
from .transforms import CorruptionSpec, apply_value_transform, corrupt, random_flip

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Cluster",
    "ConfigError",
    "CorruptionSpec",
    "DataError",
    "Detection",
    "ExternalMaskSegmenter",
    "FocusSegmenter",
    "GammaSizeDist",
    "HAVE_COMPILED",
    "HoloError",
    "MaskPlane",
    "MatchSpec",
    "OpticalConfig",
    "OracleSegmenter",
    "Particle",
    "ParticleField",
    "PredictedParticle",
    "Segmenter",
    "SplitSpec",
    "TileContext",
    "TileGrid",
    "TileSpec",
    "ZeroBackgroundError",
    "apply_value_transform",
    "build_grid",
    "corrupt",
    "extract",
    "extract_particles",
    "frequency_grid",
    "leader_cluster",
    "make_tile_dataset",
    "normalize_background",
    "plane_centers",
    "plane_index",
    "process_hologram",
    "propagate",
    "random_flip",
    "reassemble",
    "reconstruct_plane",
    "render_hologram",
    "render_truth_masks",
    "sample_field",
    "__version__",
]
