"""Truth pairing, detection metrics, threshold sweeps, and histograms.

Metrics that are undefined for a given input (zero denominators, single
class AUC) are reported as None and serialize to empty CSV cells rather
than being silently coerced to 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .detect3d import MatchSpec, leader_cluster, predictions_from_clusters


@dataclass
class PairingResult:
    """Greedy minimum-distance matches plus whatever stayed unmatched."""

    pairs: list  # (predicted, true, distance_um)
    unmatched_pred: list
    unmatched_true: list


@dataclass
class Contingency:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0


@dataclass
class MetricReport:
    f1: float | None = None
    pod: float | None = None
    far: float | None = None
    csi: float | None = None
    auc: float | None = None
    max_csi: float | None = None
    match_accuracy: float | None = None
    match_f1: float | None = None
    dice: float | None = None
    rmse: float | None = None
    mae: dict = field(default_factory=dict)


def _coords(p):
    return (p.x, p.y, p.z, p.d)


def pair_particles(pred, truth) -> PairingResult:
    """Pair predicted and true particles by repeated global minimum distance.

    Each round takes the closest remaining (predicted, true) pair in
    (x, y, z, d) space and removes both, until one list runs out. Ties
    break toward the smallest predicted index, then true index.
    """
    pred = list(pred)
    truth = list(truth)
    a = np.array([_coords(p) for p in pred], dtype=np.float64).reshape(len(pred), 4)
    b = np.array([_coords(t) for t in truth], dtype=np.float64).reshape(len(truth), 4)
    ia, ib = kernels.greedy_pair_indices(a, b)
    pairs = []
    for i, j in zip(ia, ib):
        dist = float(np.linalg.norm(a[i] - b[j]))
        pairs.append((pred[i], truth[j], dist))
    used_p = set(int(i) for i in ia)
    used_t = set(int(j) for j in ib)
    return PairingResult(
        pairs=pairs,
        unmatched_pred=[p for i, p in enumerate(pred) if i not in used_p],
        unmatched_true=[t for j, t in enumerate(truth) if j not in used_t],
    )


def smoothed_dice(x, y) -> float:
    """(2*sum(x*y) + 1) / (sum(x) + sum(y) + 1) over flattened arrays.

    The +1 smoothing keeps the score defined (and equal to 1) when both
    inputs are empty.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    return float((2.0 * (x * y).sum() + 1.0) / (x.sum() + y.sum() + 1.0))


def binary_metrics(c: Contingency):
    """(f1, pod, far, csi); any metric with a zero denominator is None."""
    f1 = 2 * c.tp / (2 * c.tp + c.fp + c.fn) if (2 * c.tp + c.fp + c.fn) > 0 else None
    pod = c.tp / (c.tp + c.fn) if (c.tp + c.fn) > 0 else None
    far = c.fp / (c.tp + c.fp) if (c.tp + c.fp) > 0 else None
    csi = c.tp / (c.tp + c.fp + c.fn) if (c.tp + c.fp + c.fn) > 0 else None
    return f1, pod, far, csi


def auc_and_max_csi(scored):
    """ROC area and best critical success index over score thresholds.

    ``scored`` is a sequence of (score, label) with binary labels. The ROC
    is integrated with the trapezoid rule over all distinct scores; ties
    are grouped. Returns (auc, max_csi, best_threshold); auc is None for
    single-class input, and the reported threshold is the highest one
    attaining the best CSI.
    """
    scored = list(scored)
    if not scored:
        return None, None, None
    scores = np.array([s for s, _ in scored], dtype=np.float64)
    labels = np.array([int(bool(l)) for _, l in scored], dtype=np.int64)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos

    order = np.argsort(-scores, kind="stable")
    scores = scores[order]
    labels = labels[order]
    distinct = np.flatnonzero(np.diff(scores)) if scores.size > 1 else np.array([], dtype=int)
    block_ends = np.append(distinct, scores.size - 1)

    tp = fp = 0
    best_csi = None
    best_thr = None
    points = [(0.0, 0.0)]
    for end in block_ends:
        upto = end + 1
        tp = int(labels[:upto].sum())
        fp = upto - tp
        fn = n_pos - tp
        if tp + fp + fn > 0:
            csi = tp / (tp + fp + fn)
            if best_csi is None or csi > best_csi:
                best_csi = csi
                best_thr = float(scores[end])
        points.append(
            (fp / n_neg if n_neg else math.nan, tp / n_pos if n_pos else math.nan)
        )
    auc = None
    if n_pos > 0 and n_neg > 0:
        auc = 0.0
        for (x0, y0), (x1, y1) in zip(points, points[1:]):
            auc += (x1 - x0) * (y0 + y1) / 2.0
        auc = float(auc)
    return auc, best_csi, best_thr


def match_stats(pairing: PairingResult, n_true: int, n_pred: int):
    """Pairing-level scores: accuracy, f1, 4-D RMSE, and per-coordinate MAE.

    match_accuracy is the paired fraction of the true count; match_f1 is
    2*pairs/(n_true + n_pred). RMSE is taken over the 4-D pair distances;
    MAE is reported per coordinate, as {"x": ..., "y": ..., "z": ..., "d": ...}.
    """
    n_pairs = len(pairing.pairs)
    accuracy = n_pairs / n_true if n_true > 0 else None
    f1 = 2.0 * n_pairs / (n_true + n_pred) if (n_true + n_pred) > 0 else None
    if n_pairs:
        dists = np.array([d for _, _, d in pairing.pairs], dtype=np.float64)
        rmse = float(np.sqrt((dists**2).mean()))
        diffs = np.array(
            [np.subtract(_coords(p), _coords(t)) for p, t, _ in pairing.pairs], dtype=np.float64
        )
        mae = {k: float(v) for k, v in zip("xyzd", np.abs(diffs).mean(axis=0))}
    else:
        rmse = None
        mae = {k: None for k in "xyzd"}
    return accuracy, f1, rmse, mae


SWEEP_COLUMNS = (
    "threshold_um",
    "n_clusters",
    "n_unassigned",
    "n_particles",
    "match_accuracy",
    "match_f1",
    "rmse_um",
)


def threshold_sweep(detections, truth, thresholds, weights=(1.0, 1.0, 1.0, 1.0)):
    """Re-cluster one hologram's detections at each threshold and score them.

    Returns one row per threshold with the cluster/unassigned split, the
    total particle count, and the pairing metrics, in SWEEP_COLUMNS order.
    """
    if not len(thresholds):
        raise ValueError("thresholds must be non-empty")
    rows = []
    truth = list(truth)
    for thr in thresholds:
        clusters, unassigned = leader_cluster(detections, MatchSpec(thr, weights))
        preds = predictions_from_clusters(clusters, unassigned)
        pairing = pair_particles(preds, truth)
        accuracy, f1, rmse, _ = match_stats(pairing, len(truth), len(preds))
        rows.append(
            (float(thr), len(clusters), len(unassigned), len(preds), accuracy, f1, rmse)
        )
    return rows


def sweep_over_holograms(grouped, thresholds, weights=(1.0, 1.0, 1.0, 1.0)):
    """Threshold sweep aggregated over (detections, truth) hologram pairs.

    Clustering and pairing stay within each hologram; counts are summed per
    threshold, accuracy and f1 recomputed from the summed counts, and the
    RMSE pooled over every pair. Row layout matches SWEEP_COLUMNS.
    """
    if not len(thresholds):
        raise ValueError("thresholds must be non-empty")
    rows = []
    for thr in thresholds:
        n_clusters = n_unassigned = n_pred = n_pairs = n_true = 0
        sq_sum = 0.0
        for dets, truth in grouped:
            clusters, unassigned = leader_cluster(dets, MatchSpec(thr, weights))
            preds = predictions_from_clusters(clusters, unassigned)
            pairing = pair_particles(preds, list(truth))
            n_clusters += len(clusters)
            n_unassigned += len(unassigned)
            n_pred += len(preds)
            n_true += len(truth)
            n_pairs += len(pairing.pairs)
            sq_sum += sum(d * d for _, _, d in pairing.pairs)
        accuracy = n_pairs / n_true if n_true else None
        f1 = 2.0 * n_pairs / (n_true + n_pred) if (n_true + n_pred) else None
        rmse = math.sqrt(sq_sum / n_pairs) if n_pairs else None
        rows.append((float(thr), n_clusters, n_unassigned, n_pred, accuracy, f1, rmse))
    return rows


HISTOGRAM_COLUMNS = (
    "coord",
    "bin_lo",
    "bin_hi",
    "pred_mean",
    "pred_sd",
    "true_mean",
    "true_sd",
)


def emit_histograms(pred_by_holo, truth_by_holo, bins=20, svg_path=None):
    """Per-coordinate histograms of predicted vs true particles.

    ``pred_by_holo`` and ``truth_by_holo`` are sequences of per-hologram
    particle lists. Counts are binned per hologram on shared edges (taken
    from the combined range per coordinate); each bin reports the mean and
    standard deviation of the count across holograms. Rows follow
    HISTOGRAM_COLUMNS; an SVG bar chart is written when ``svg_path`` is
    given.
    """
    pred_by_holo = [list(h) for h in pred_by_holo]
    truth_by_holo = [list(h) for h in truth_by_holo]
    n_holo = max(len(pred_by_holo), len(truth_by_holo), 1)
    rows = []
    per_coord = {}
    for ci, coord in enumerate("xyzd"):
        values = [
            [_coords(p)[ci] for p in holo] for holo in pred_by_holo
        ], [
            [_coords(t)[ci] for t in holo] for holo in truth_by_holo
        ]
        pooled = [v for group in values for holo in group for v in holo]
        if pooled:
            lo, hi = min(pooled), max(pooled)
            if lo == hi:
                hi = lo + 1.0
        else:
            lo, hi = 0.0, 1.0
        edges = np.linspace(lo, hi, bins + 1)
        stacks = []
        for group in values:
            counts = np.array(
                [np.histogram(holo, bins=edges)[0] for holo in group]
                or [np.zeros(bins, dtype=int)]
            )
            stacks.append(counts)
        pred_mean = stacks[0].mean(axis=0)
        pred_sd = stacks[0].std(axis=0)
        true_mean = stacks[1].mean(axis=0)
        true_sd = stacks[1].std(axis=0)
        per_coord[coord] = (edges, pred_mean, pred_sd, true_mean, true_sd)
        for b in range(bins):
            rows.append(
                (
                    coord,
                    float(edges[b]),
                    float(edges[b + 1]),
                    float(pred_mean[b]),
                    float(pred_sd[b]),
                    float(true_mean[b]),
                    float(true_sd[b]),
                )
            )
    if svg_path is not None:
        _write_histogram_svg(per_coord, svg_path, n_holo)
    return rows


def _write_histogram_svg(per_coord, svg_path, n_holo):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 4, figsize=(16, 3.2))
    for ax, coord in zip(axes, "xyzd"):
        edges, pred_mean, pred_sd, true_mean, true_sd = per_coord[coord]
        centers = (edges[:-1] + edges[1:]) / 2.0
        width = (edges[1] - edges[0]) * 0.9
        ax.bar(centers, true_mean, width=width, yerr=true_sd, alpha=0.6, label="true")
        ax.bar(
            centers,
            pred_mean,
            width=width,
            yerr=pred_sd,
            fill=False,
            edgecolor="C0",
            label="predicted",
        )
        ax.set_xlabel(f"{coord} (um)")
        ax.set_ylabel(f"count / hologram (n={n_holo})")
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(svg_path)
    plt.close(fig)
