"""Command-line orchestration: simulate, reconstruct, process, evaluate, sweep, bench."""

from __future__ import annotations

import argparse
import os
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import fileio, kernels
from .config import PipelineConfig, load_config, save_config
from .detect3d import process_hologram
from .errors import ConfigError, DataError, HoloError
from .evaluate import (
    HISTOGRAM_COLUMNS,
    SWEEP_COLUMNS,
    Contingency,
    binary_metrics,
    emit_histograms,
    match_stats,
    pair_particles,
    sweep_over_holograms,
)
from .optics import OpticalConfig, plane_centers, reconstruct_plane
from .segment import ExternalMaskSegmenter, FocusSegmenter, OracleSegmenter
from .simulate import (
    BACKGROUND_GRAY,
    GammaSizeDist,
    SplitSpec,
    quantize_amplitude,
    render_hologram,
    sample_field,
)
from .tiling import build_grid

CONFIG_ENV_VAR = "HOLOFIELD_CONFIG"


def _load_pipeline_config(args) -> PipelineConfig:
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV_VAR)
    cfg = load_config(path) if path else PipelineConfig()
    if getattr(args, "workers", None):
        cfg.run.workers = args.workers
    if getattr(args, "seed", None) is not None:
        cfg.run.seed = args.seed
    return cfg


def _hid_from_path(path) -> int:
    m = re.search(r"(\d+)$", Path(path).stem)
    if not m:
        raise DataError(f"cannot derive a hologram id from file name {path}")
    return int(m.group(1))


def _normalize(img: np.ndarray, mode: str) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if mode == "gray127":
        return img / BACKGROUND_GRAY
    if mode == "self":
        mean = img.mean()
        if mean == 0:
            raise DataError("cannot self-normalize an all-zero hologram")
        return img / mean
    return img


def _make_segmenter(cfg: PipelineConfig, hid: int, truth_fields):
    grid = build_grid(cfg.optics.nx, cfg.optics.ny, cfg.tiling, clamp=True)
    kind = cfg.segmenter.kind
    if kind == "oracle":
        if truth_fields is None:
            raise ConfigError("the oracle segmenter needs --truth")
        if hid not in truth_fields:
            raise DataError(f"truth CSV has no particles for hologram id {hid}")
        return OracleSegmenter(truth_fields[hid], cfg.optics, grid), grid
    if kind == "focus":
        return FocusSegmenter(cfg.segmenter.amp_thresh, cfg.segmenter.min_px), grid
    if not cfg.segmenter.mask_dir or not cfg.segmenter.manifest:
        raise ConfigError("the external segmenter needs mask_dir and manifest in the config")
    seg = ExternalMaskSegmenter(cfg.segmenter.mask_dir, cfg.segmenter.manifest, cfg.tiling.tile)
    return seg, grid


def _cmd_simulate(args) -> int:
    cfg = _load_pipeline_config(args)
    optics = cfg.optics
    out_dir = Path(args.out)
    dist = GammaSizeDist(args.gamma_shape, args.gamma_scale, args.d_floor, args.d_cap)
    if args.split:
        try:
            n_train, n_valid, n_test = (int(v) for v in args.split.split(","))
        except ValueError as exc:
            raise ConfigError("--split expects TRAIN,VALID,TEST") from exc
        split = SplitSpec(n_train, n_valid, n_test, seed=cfg.run.seed)
        if split.total != args.n_holograms:
            raise ConfigError(
                f"--split sums to {split.total} but --n-holograms is {args.n_holograms}"
            )
    else:
        split = SplitSpec(args.n_holograms, 0, 0, seed=cfg.run.seed)

    fields = []
    for hid in range(args.n_holograms):
        fld = sample_field(
            optics,
            args.n_particles,
            dist,
            rng_seed=(cfg.run.seed, hid),
            hologram_id=hid,
        )
        img = render_hologram(fld, optics, mode=args.mode)
        fileio.write_gray8(out_dir / "holograms" / f"synthetic_{hid:04d}.png", img)
        fields.append(fld)
        print(f"hologram {hid:4d}: {len(fld)} particles")
    fileio.write_particles_csv(out_dir / "truth.csv", fields)

    rng = np.random.default_rng(split.seed)
    order = list(rng.permutation(args.n_holograms))
    manifest = {
        "seed": split.seed,
        "train": sorted(int(h) for h in order[: split.n_train]),
        "valid": sorted(int(h) for h in order[split.n_train : split.n_train + split.n_valid]),
        "test": sorted(int(h) for h in order[split.n_train + split.n_valid : split.total]),
    }
    fileio.write_jsonl(out_dir / "split.jsonl", [manifest])
    save_config(cfg, out_dir / "config.toml")
    print(f"wrote {args.n_holograms} holograms to {out_dir}")
    return 0


def _cmd_reconstruct(args) -> int:
    cfg = _load_pipeline_config(args)
    optics = cfg.optics
    img = fileio.read_gray8(args.hologram)
    if img.shape != (optics.ny, optics.nx):
        raise DataError(
            f"hologram {args.hologram} is {img.shape[::-1]}, config expects {(optics.nx, optics.ny)}"
        )
    h_c = _normalize(img, cfg.run.background)
    if args.z:
        zs = [float(v) for v in args.z.split(",")]
    elif args.planes:
        centers = plane_centers(optics)
        zs = [float(centers[int(j)]) for j in args.planes.split(",")]
    else:
        raise ConfigError("reconstruct needs --z or --planes")
    out_dir = Path(args.out)
    for z in zs:
        amp = reconstruct_plane(h_c, z, optics)
        stem = f"plane_z{z:.3f}"
        fileio.write_raw_plane(out_dir / f"{stem}.f32", amp, z, optics)
        if args.png:
            fileio.write_gray8(out_dir / f"{stem}.png", quantize_amplitude(amp))
        print(f"z = {z:.3f} um -> {stem}.f32")
    return 0


def _cmd_process(args) -> int:
    cfg = _load_pipeline_config(args)
    truth_fields = fileio.read_particles_csv(args.truth) if args.truth else None
    pred_rows = []
    det_rows = []
    for path in args.holograms:
        hid = _hid_from_path(path)
        img = fileio.read_gray8(path)
        if img.shape != (cfg.optics.ny, cfg.optics.nx):
            raise DataError(
                f"hologram {path} is {img.shape[::-1]}, config expects "
                f"{(cfg.optics.nx, cfg.optics.ny)}"
            )
        segmenter, grid = _make_segmenter(cfg, hid, truth_fields)
        h_c = _normalize(img, cfg.run.background)
        result = process_hologram(
            h_c,
            cfg.optics,
            segmenter,
            tile_spec=cfg.tiling,
            match=cfg.matching,
            hologram_transform=cfg.hologram_transform,
            tile_transform=cfg.value_transform,
            hid=hid,
            workers=cfg.run.workers,
            plane_skip=cfg.run.plane_skip,
            grid=grid,
        )
        pred_rows.extend((hid, p) for p in result.predictions)
        det_rows.extend((hid, det) for det in result.detections)
        print(
            f"hologram {hid}: {len(result.detections)} detections -> "
            f"{result.n_clusters} clusters + {result.n_unassigned} unassigned"
        )
    fileio.write_predictions_csv(args.out, pred_rows)
    if args.dump_detections:
        fileio.write_detections_csv(args.dump_detections, det_rows)
    print(f"wrote {len(pred_rows)} predicted particles to {args.out}")
    return 0


METRIC_COLUMNS = (
    "hid",
    "n_true",
    "n_pred",
    "n_pairs",
    "match_accuracy",
    "match_f1",
    "rmse_um",
    "mae_x_um",
    "mae_y_um",
    "mae_z_um",
    "mae_d_um",
    "f1",
    "pod",
    "far",
    "csi",
)


def _metric_row(tag, preds, truths):
    pairing = pair_particles(preds, truths)
    accuracy, mf1, rmse, mae = match_stats(pairing, len(truths), len(preds))
    cont = Contingency(
        tp=len(pairing.pairs), fp=len(pairing.unmatched_pred), fn=len(pairing.unmatched_true)
    )
    f1, pod, far, csi = binary_metrics(cont)
    return (
        tag,
        len(truths),
        len(preds),
        len(pairing.pairs),
        accuracy,
        mf1,
        rmse,
        mae["x"],
        mae["y"],
        mae["z"],
        mae["d"],
        f1,
        pod,
        far,
        csi,
    )


def _cmd_evaluate(args) -> int:
    truth = fileio.read_particles_csv(args.truth)
    pred = fileio.read_predictions_csv(args.pred)
    unknown = sorted(set(pred) - set(truth))
    if unknown:
        raise DataError(f"prediction CSV references unknown hologram ids {unknown}")
    out_dir = Path(args.out_dir)
    rows = []
    all_pred = []
    all_true = []
    pred_lists = []
    true_lists = []
    for hid in sorted(truth):
        preds = pred.get(hid, [])
        truths = truth[hid].particles
        rows.append(_metric_row(hid, preds, truths))
        all_pred.extend(preds)
        all_true.extend(truths)
        pred_lists.append(preds)
        true_lists.append(truths)
    rows.append(_metric_row("all", all_pred, all_true))
    fileio.write_csv(out_dir / "metrics.csv", METRIC_COLUMNS, rows)
    hist_rows = emit_histograms(
        pred_lists,
        true_lists,
        bins=args.bins,
        svg_path=(out_dir / "histograms.svg") if args.svg else None,
    )
    fileio.write_csv(out_dir / "histograms.csv", HISTOGRAM_COLUMNS, hist_rows)
    summary = rows[-1]
    print(
        f"{len(truth)} holograms: accuracy={summary[4]}, match_f1={summary[5]}, rmse={summary[6]} um"
    )
    print(f"wrote {out_dir / 'metrics.csv'} and {out_dir / 'histograms.csv'}")
    return 0


def _cmd_sweep(args) -> int:
    truth = fileio.read_particles_csv(args.truth)
    detections = fileio.read_detections_csv(args.detections)
    unknown = sorted(set(detections) - set(truth))
    if unknown:
        raise DataError(f"detections CSV references unknown hologram ids {unknown}")
    thresholds = [float(v) for v in args.thresholds.split(",")]
    if not thresholds:
        raise ConfigError("--thresholds must list at least one value")
    grouped = [
        (detections[hid], truth[hid].particles) for hid in sorted(detections)
    ]
    rows = sweep_over_holograms(grouped, thresholds)
    fileio.write_csv(args.out, SWEEP_COLUMNS, rows)
    for row in rows:
        print(
            f"threshold {row[0]:10.1f} um: {row[3]:6d} particles "
            f"({row[1]} clusters + {row[2]} unassigned)"
        )
    return 0


def _time_reconstruction(nx, ny, reps, base: OpticalConfig):
    cfg = OpticalConfig(
        wavelength=base.wavelength,
        dx=base.dx,
        dy=base.dy,
        nx=nx,
        ny=ny,
        z_min=base.z_min,
        z_max=base.z_max,
        n_planes=base.n_planes,
    )
    rng = np.random.default_rng(0)
    h_c = 1.0 + 0.01 * rng.standard_normal((ny, nx))
    z = (base.z_min + base.z_max) / 2.0
    reconstruct_plane(h_c, z, cfg)  # warm up FFT plans and caches
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        reconstruct_plane(h_c, z, cfg)
        times.append(time.perf_counter() - t0)
    arr = np.array(times)
    return float(arr.min()) * 1e3, float(arr.mean()) * 1e3, float(arr.std()) * 1e3


def _time_kernels(reps):
    """Compare compiled and pure-python kernels on synthetic inputs."""
    from . import _kernels_py

    impls = [("python", _kernels_py)]
    if kernels.HAVE_COMPILED:
        from . import _kernels

        impls.append(("compiled", _kernels))
    rng = np.random.default_rng(1)
    pts = np.ascontiguousarray(rng.uniform(0, 5000, size=(2000, 4)))
    mask = np.ascontiguousarray((rng.random((768, 1024)) < 0.05).astype(np.uint8))
    rows = []
    for name, impl in impls:
        for op, call in (
            ("leader_assign", lambda m=impl: m.leader_assign(pts, 50.0)),
            ("label4", lambda m=impl: m.label4(mask)),
        ):
            call()
            best = min(_timeit(call) for _ in range(reps))
            rows.append((op, name, best * 1e3))
    return rows


def _timeit(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def _cmd_bench(args) -> int:
    cfg = _load_pipeline_config(args)
    sizes = []
    for token in args.sizes.split(","):
        try:
            nx, ny = (int(v) for v in token.lower().split("x"))
        except ValueError as exc:
            raise ConfigError(f"bad --sizes entry {token!r}; expected NXxNY") from exc
        sizes.append((nx, ny))
    rows = []
    print(f"optics hash: {cfg.optics.config_hash()}")
    for nx, ny in sizes:
        tmin, tmean, tsd = _time_reconstruction(nx, ny, args.reps, cfg.optics)
        rows.append(("reconstruct", f"{nx}x{ny}", tmin, tmean, tsd))
        print(f"reconstruct {nx:5d}x{ny:<5d}: min {tmin:8.2f} ms  mean {tmean:8.2f} +- {tsd:.2f} ms")
    scaling_ok = True
    for (nx1, ny1), (nx2, ny2), r1, r2 in zip(sizes, sizes[1:], rows, rows[1:]):
        p1, p2 = nx1 * ny1, nx2 * ny2
        ideal = (p2 * np.log(p2)) / (p1 * np.log(p1))
        measured = r2[2] / r1[2]
        ok = measured <= 2.0 * ideal
        scaling_ok &= ok
        print(
            f"scaling {p1} -> {p2} px: measured {measured:.2f}x vs P log P {ideal:.2f}x "
            f"[{'ok' if ok else 'SLOW'}]"
        )
        rows.append(("scaling", f"{p1}->{p2}", measured, ideal, float(ok)))
    for op, name, ms in _time_kernels(args.reps):
        rows.append((f"kernel_{op}", name, ms, "", ""))
        print(f"kernel {op:14s} [{name:8s}]: {ms:8.2f} ms")
    if not kernels.HAVE_COMPILED:
        print("compiled kernels unavailable; pure-python backend in use")
    if args.out:
        fileio.write_csv(
            args.out,
            ("what", "case", "min_ms_or_ratio", "mean_ms_or_ideal", "sd_ms_or_ok"),
            rows,
        )
    print(f"scaling within tolerance: {scaling_ok}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="holofield",
        description="Simulate in-line holograms, refocus them, and recover 3-D particle fields.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", help=f"pipeline TOML (default ${CONFIG_ENV_VAR})")
        p.add_argument("--workers", type=int, help="plane workers (overrides config)")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")

    p = sub.add_parser("simulate", help="render synthetic holograms plus truth CSV")
    add_config(p)
    p.add_argument("--out", required=True)
    p.add_argument("--n-holograms", type=int, default=1)
    p.add_argument("--n-particles", type=int, default=500)
    p.add_argument("--mode", choices=("superposition", "sequential"), default="superposition")
    p.add_argument("--split", help="TRAIN,VALID,TEST hologram counts")
    p.add_argument("--gamma-shape", type=float, default=2.0)
    p.add_argument("--gamma-scale", type=float, default=10.0)
    p.add_argument("--d-floor", type=float, default=6.0)
    p.add_argument("--d-cap", type=float, default=200.0)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("reconstruct", help="refocus a hologram at chosen depths")
    add_config(p)
    p.add_argument("--hologram", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--z", help="comma-separated depths in um")
    p.add_argument("--planes", help="comma-separated plane indices")
    p.add_argument("--png", action="store_true", help="also write 8-bit previews")
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("process", help="run the full pipeline over holograms")
    add_config(p)
    p.add_argument("holograms", nargs="*")
    p.add_argument("--truth", help="truth CSV (required for the oracle segmenter)")
    p.add_argument("--out", required=True, help="predictions CSV")
    p.add_argument("--dump-detections", help="also dump raw per-plane detections")
    p.set_defaults(func=_cmd_process)

    p = sub.add_parser("evaluate", help="score predictions against truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep", help="re-cluster dumped detections over thresholds")
    p.add_argument("--detections", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--thresholds", required=True, help="comma-separated um values")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("bench", help="time reconstruction and the kernel backends")
    add_config(p)
    p.add_argument("--sizes", default="512x512,1024x512")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--out", help="write timings as CSV")
    p.set_defaults(func=_cmd_bench)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except HoloError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
