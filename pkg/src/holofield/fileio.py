"""File formats: 8-bit images, float32 raw planes, particle CSVs, manifests."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError
from .simulate import Particle, ParticleField


def _ensure_parent(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)


def read_gray8(path) -> np.ndarray:
    """Read an 8-bit grayscale image (PNG or PGM) as a uint8 array."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"image not found: {path}")
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("L"), dtype=np.uint8)
    except Exception as exc:  # Pillow raises several types for bad files
        raise DataError(f"cannot read image {path}: {exc}") from exc


def write_gray8(path, arr):
    """Write a uint8 array as PNG or PGM (P5), chosen by suffix."""
    path = Path(path)
    _ensure_parent(path)
    arr = np.asarray(arr, dtype=np.uint8)
    Image.fromarray(arr, mode="L").save(path)


def write_raw_plane(path, arr, z: float, cfg):
    """Dump a plane as 32-bit little-endian float raw plus a text sidecar.

    The sidecar (same path with .hdr appended) records nx, ny, z, and the
    optics hash so the raw blob stays self-describing.
    """
    path = Path(path)
    _ensure_parent(path)
    arr = np.asarray(arr, dtype="<f4")
    arr.tofile(path)
    sidecar = path.with_suffix(path.suffix + ".hdr")
    sidecar.write_text(
        f"nx {arr.shape[1]}\nny {arr.shape[0]}\nz_um {z!r}\n"
        f"dtype float32_le\ncfg_hash {cfg.config_hash()}\n"
    )


def read_raw_plane(path):
    """Read a float32 raw plane using its sidecar; returns (array, header dict)."""
    path = Path(path)
    sidecar = path.with_suffix(path.suffix + ".hdr")
    if not sidecar.exists():
        raise DataError(f"missing sidecar header for {path}")
    header = {}
    for line in sidecar.read_text().splitlines():
        key, _, value = line.partition(" ")
        header[key] = value
    nx, ny = int(header["nx"]), int(header["ny"])
    data = np.fromfile(path, dtype="<f4")
    if data.size != nx * ny:
        raise DataError(f"raw plane {path} is truncated ({data.size} of {nx * ny} floats)")
    return data.reshape(ny, nx).astype(np.float64), header


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, header, rows):
    path = Path(path)
    _ensure_parent(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_particles_csv(path, fields):
    """Truth/sampled particles: columns hid,x_um,y_um,z_um,d_um."""
    rows = []
    for fld in fields:
        for p in fld.particles:
            rows.append((fld.hologram_id, p.x, p.y, p.z, p.d))
    write_csv(path, ("hid", "x_um", "y_um", "z_um", "d_um"), rows)


def read_particles_csv(path) -> dict:
    """Read a particle CSV into {hid: ParticleField}, in file order."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"particle CSV not found: {path}")
    out: dict[int, ParticleField] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"hid", "x_um", "y_um", "z_um", "d_um"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise DataError(f"{path} lacks the columns {sorted(required)}")
        for line, rec in enumerate(reader, start=2):
            try:
                hid = int(rec["hid"])
                p = Particle(
                    float(rec["x_um"]), float(rec["y_um"]), float(rec["z_um"]), float(rec["d_um"])
                )
            except (TypeError, ValueError) as exc:
                raise DataError(f"{path}:{line}: malformed particle row") from exc
            out.setdefault(hid, ParticleField(hologram_id=hid)).particles.append(p)
    return out


PREDICTION_COLUMNS = ("hid", "x_um", "y_um", "z_um", "d_um", "n_members", "assigned")


def write_predictions_csv(path, rows):
    """Predicted particles: one row per (hid, PredictedParticle)."""
    out = []
    for hid, pred in rows:
        out.append((hid, pred.x, pred.y, pred.z, pred.d, pred.n_members, pred.assigned))
    write_csv(path, PREDICTION_COLUMNS, out)


def read_predictions_csv(path) -> dict:
    """Read predictions into {hid: [PredictedParticle, ...]}."""
    from .detect3d import PredictedParticle

    path = Path(path)
    if not path.exists():
        raise DataError(f"prediction CSV not found: {path}")
    out: dict[int, list] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(PREDICTION_COLUMNS) <= set(reader.fieldnames):
            raise DataError(f"{path} lacks the columns {PREDICTION_COLUMNS}")
        for line, rec in enumerate(reader, start=2):
            try:
                hid = int(rec["hid"])
                pred = PredictedParticle(
                    x=float(rec["x_um"]),
                    y=float(rec["y_um"]),
                    z=float(rec["z_um"]),
                    d=float(rec["d_um"]),
                    n_members=int(rec["n_members"]),
                    assigned=rec["assigned"] in ("1", "True", "true"),
                )
            except (TypeError, ValueError) as exc:
                raise DataError(f"{path}:{line}: malformed prediction row") from exc
            out.setdefault(hid, []).append(pred)
    return out


DETECTION_COLUMNS = ("hid", "plane", "x_um", "y_um", "z_um", "d_um", "pixel_count")


def write_detections_csv(path, rows):
    """Per-plane detections for audit / re-clustering: (hid, Detection) pairs."""
    out = []
    for hid, det in rows:
        out.append((hid, det.plane_index, det.x, det.y, det.z, det.d, det.pixel_count))
    write_csv(path, DETECTION_COLUMNS, out)


def read_detections_csv(path) -> dict:
    from .detect3d import Detection

    path = Path(path)
    if not path.exists():
        raise DataError(f"detections CSV not found: {path}")
    out: dict[int, list] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(DETECTION_COLUMNS) <= set(reader.fieldnames):
            raise DataError(f"{path} lacks the columns {DETECTION_COLUMNS}")
        for line, rec in enumerate(reader, start=2):
            try:
                hid = int(rec["hid"])
                det = Detection(
                    x=float(rec["x_um"]),
                    y=float(rec["y_um"]),
                    z=float(rec["z_um"]),
                    d=float(rec["d_um"]),
                    plane_index=int(rec["plane"]),
                    pixel_count=int(rec["pixel_count"]),
                )
            except (TypeError, ValueError) as exc:
                raise DataError(f"{path}:{line}: malformed detection row") from exc
            out.setdefault(hid, []).append(det)
    return out


def write_jsonl(path, records):
    path = Path(path)
    _ensure_parent(path)
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def read_jsonl(path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"manifest not found: {path}")
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed JSON record") from exc
    return records
