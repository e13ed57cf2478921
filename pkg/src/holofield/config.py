"""Pipeline configuration: one TOML file drives every subcommand.

Every pipeline default (tile 512 / step 128, 1000 planes, 1000 um match
threshold, 0.5 binarization, transforms off) is a named key here so that
experiments are declarative. The file round-trips losslessly through
``to_toml_str`` / ``from_toml_str``.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

from .detect3d import MatchSpec
from .errors import ConfigError
from .optics import OpticalConfig
from .tiling import TileSpec
from .transforms import VALUE_TRANSFORMS, CorruptionSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

BACKGROUND_MODES = ("self", "gray127", "none")
SEGMENTER_KINDS = ("oracle", "focus", "external")


@dataclass
class SegmenterConfig:
    kind: str = "focus"
    amp_thresh: float = 0.55
    min_px: int = 4
    mask_dir: str = ""
    manifest: str = ""

    def __post_init__(self):
        if self.kind not in SEGMENTER_KINDS:
            raise ConfigError(f"segmenter kind must be one of {SEGMENTER_KINDS}")


@dataclass
class RunConfig:
    workers: int = 1
    seed: int = 0
    background: str = "self"
    binarize_threshold: float = 0.5
    plane_skip: bool = True

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.background not in BACKGROUND_MODES:
            raise ConfigError(f"background must be one of {BACKGROUND_MODES}")


@dataclass
class PipelineConfig:
    optics: OpticalConfig = field(default_factory=OpticalConfig)
    tiling: TileSpec = field(default_factory=TileSpec)
    matching: MatchSpec = field(default_factory=MatchSpec)
    segmenter: SegmenterConfig = field(default_factory=SegmenterConfig)
    corruption: CorruptionSpec = field(default_factory=CorruptionSpec)
    hologram_transform: str = "none"
    value_transform: str = "none"
    run: RunConfig = field(default_factory=RunConfig)

    def __post_init__(self):
        for name in (self.hologram_transform, self.value_transform):
            if name not in VALUE_TRANSFORMS:
                raise ConfigError(f"unknown value transform {name!r}")


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise ConfigError(f"cannot serialize {type(v).__name__} to TOML")


def to_toml_str(cfg: PipelineConfig) -> str:
    o, t, m, s, c, r = cfg.optics, cfg.tiling, cfg.matching, cfg.segmenter, cfg.corruption, cfg.run
    sections = {
        "optics": {
            "wavelength": o.wavelength,
            "dx": o.dx,
            "dy": o.dy,
            "nx": o.nx,
            "ny": o.ny,
            "z_min": o.z_min,
            "z_max": o.z_max,
            "n_planes": o.n_planes,
        },
        "tiling": {"tile": t.tile, "step": t.step},
        "matching": {"threshold": m.threshold, "weights": list(m.weights)},
        "segmenter": {
            "kind": s.kind,
            "amp_thresh": s.amp_thresh,
            "min_px": s.min_px,
            "mask_dir": s.mask_dir,
            "manifest": s.manifest,
        },
        "transforms": {
            "hologram_transform": cfg.hologram_transform,
            "value_transform": cfg.value_transform,
            "blur_sigma_max": c.blur_sigma_max,
            "noise_sigma_max": c.noise_sigma_max,
            "brightness_max": c.brightness_max,
            "flip_prob": c.flip_prob,
            "seed": c.seed,
        },
        "run": {
            "workers": r.workers,
            "seed": r.seed,
            "background": r.background,
            "binarize_threshold": r.binarize_threshold,
            "plane_skip": r.plane_skip,
        },
    }
    lines = []
    for section, body in sections.items():
        lines.append(f"[{section}]")
        for key, value in body.items():
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


def from_toml_str(text: str) -> PipelineConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed TOML config: {exc}") from exc
    return _from_doc(doc)


def _take(doc: dict, section: str, cls, remap=None):
    body = dict(doc.get(section, {}))
    if remap:
        body = {remap.get(k, k): v for k, v in body.items()}
    try:
        return cls(**body)
    except TypeError as exc:
        raise ConfigError(f"bad [{section}] section: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"bad [{section}] section: {exc}") from exc


def _from_doc(doc: dict) -> PipelineConfig:
    transforms = dict(doc.get("transforms", {}))
    hologram_transform = transforms.pop("hologram_transform", "none")
    value_transform = transforms.pop("value_transform", "none")
    try:
        corruption = CorruptionSpec(**transforms)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad [transforms] section: {exc}") from exc
    matching_body = dict(doc.get("matching", {}))
    if "weights" in matching_body:
        matching_body["weights"] = tuple(matching_body["weights"])
    try:
        matching = MatchSpec(**matching_body)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad [matching] section: {exc}") from exc
    return PipelineConfig(
        optics=_take(doc, "optics", OpticalConfig),
        tiling=_take(doc, "tiling", TileSpec),
        matching=matching,
        segmenter=_take(doc, "segmenter", SegmenterConfig),
        corruption=corruption,
        hologram_transform=hologram_transform,
        value_transform=value_transform,
        run=_take(doc, "run", RunConfig),
    )


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return from_toml_str(path.read_text())


def save_config(cfg: PipelineConfig, path):
    Path(path).write_text(to_toml_str(cfg))
