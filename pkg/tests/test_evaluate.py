import math

import numpy as np
import pytest
from reference import exhaustive_greedy_pairs

from holofield import Particle
from holofield.detect3d import Detection
from holofield.evaluate import (
    Contingency,
    auc_and_max_csi,
    binary_metrics,
    emit_histograms,
    match_stats,
    pair_particles,
    smoothed_dice,
    sweep_over_holograms,
    threshold_sweep,
)


def particle(x=0.0, y=0.0, z=0.0, d=1.0):
    return Particle(x=x, y=y, z=z, d=d)


def det(x=0.0, y=0.0, z=0.0, d=1.0, plane=0):
    return Detection(x=x, y=y, z=z, d=d, plane_index=plane, pixel_count=1)


class TestPairParticles:
    def test_identical_lists_pair_at_zero(self):
        pts = [particle(x=i * 10.0) for i in range(5)]
        result = pair_particles(pts, list(pts))
        assert len(result.pairs) == 5
        assert all(dist == 0.0 for _, _, dist in result.pairs)
        assert not result.unmatched_pred and not result.unmatched_true

    def test_excess_truth_left_unmatched(self):
        pred = [particle(0.0, 0.0, 0.0, 1.0)]
        truth = [particle(0.0, 0.0, 0.0, 1.0), particle(5.0, 5.0, 5.0, 2.0)]
        result = pair_particles(pred, truth)
        assert len(result.pairs) == 1
        assert result.pairs[0][2] == 0.0
        assert len(result.unmatched_true) == 1
        assert result.unmatched_true[0].x == 5.0

    def test_pair_count_is_min_of_sizes(self, rng):
        for _ in range(30):
            n, m = int(rng.integers(0, 7)), int(rng.integers(0, 7))
            pred = [particle(*rng.uniform(0, 50, 4)) for _ in range(n)]
            truth = [particle(*rng.uniform(0, 50, 4)) for _ in range(m)]
            result = pair_particles(pred, truth)
            assert len(result.pairs) == min(n, m)
            assert len(result.unmatched_pred) == n - len(result.pairs)
            assert len(result.unmatched_true) == m - len(result.pairs)

    def test_matches_exhaustive_reference(self, rng):
        for _ in range(200):
            n, m = int(rng.integers(0, 9)), int(rng.integers(0, 9))
            a = rng.uniform(0, 50, (n, 4))
            b = rng.uniform(0, 50, (m, 4))
            pred = [particle(*row) for row in a]
            truth = [particle(*row) for row in b]
            result = pair_particles(pred, truth)
            got = [(pred.index(p), truth.index(t)) for p, t, _ in result.pairs]
            assert got == exhaustive_greedy_pairs(a, b)

    def test_symmetry_up_to_role_swap(self, rng):
        a = [particle(*rng.uniform(0, 50, 4)) for _ in range(6)]
        b = [particle(*rng.uniform(0, 50, 4)) for _ in range(4)]
        fwd = pair_particles(a, b)
        rev = pair_particles(b, a)
        assert {(id(p), id(t)) for p, t, _ in fwd.pairs} == {
            (id(p), id(t)) for t, p, _ in rev.pairs
        }


class TestSmoothedDice:
    def test_both_empty_is_one(self):
        assert smoothed_dice(np.zeros(8), np.zeros(8)) == 1.0

    def test_equal_binary_is_one(self):
        x = np.array([1.0, 0.0, 1.0, 1.0])
        assert smoothed_dice(x, x) == 1.0

    def test_hand_computed_value(self):
        assert smoothed_dice([1, 0, 1, 0], [1, 1, 0, 0]) == pytest.approx(0.6, abs=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            smoothed_dice([1, 0], [1, 0, 0])

    def test_monotone_decrease_with_disjoint_mass(self, rng):
        y = np.zeros(100)
        y[:10] = 1.0
        x = y.copy()
        last = smoothed_dice(x, y)
        for k in range(10, 60, 10):
            x[k : k + 10] = 1.0  # add mass where y is zero
            cur = smoothed_dice(x, y)
            assert cur < last
            last = cur

    def test_flattens_2d_inputs(self):
        assert smoothed_dice(np.ones((2, 2)), np.ones((4,))) == 1.0


class TestBinaryMetrics:
    def test_perfect(self):
        f1, pod, far, csi = binary_metrics(Contingency(tp=10))
        assert (f1, pod, far, csi) == (1.0, 1.0, 0.0, 1.0)

    def test_hand_counts(self):
        f1, pod, far, csi = binary_metrics(Contingency(tp=3, fp=1, fn=2, tn=4))
        assert pod == pytest.approx(0.6, abs=1e-15)
        assert far == pytest.approx(0.25, abs=1e-15)
        assert csi == pytest.approx(0.5, abs=1e-15)
        assert f1 == pytest.approx(2 / 3, abs=1e-15)

    def test_degenerate_pod_undefined(self):
        f1, pod, far, csi = binary_metrics(Contingency(tp=0, fp=5, fn=0))
        assert pod is None
        assert far == 1.0
        assert csi == 0.0

    def test_all_zero_everything_undefined(self):
        f1, pod, far, csi = binary_metrics(Contingency())
        assert f1 is None and pod is None and far is None and csi is None

    def test_identities(self, rng):
        for _ in range(100):
            c = Contingency(*(int(v) for v in rng.integers(0, 30, 4)))
            f1, pod, far, csi = binary_metrics(c)
            if csi is not None and pod is not None:
                assert csi <= pod + 1e-15
            if csi is not None and f1 is not None:
                assert abs(f1 - 2 * csi / (1 + csi)) < 1e-12
            if c.tp > 0:
                assert csi <= 1 - far + 1e-15


class TestAucMaxCsi:
    def test_perfectly_separated(self):
        scored = [(0.9, 1), (0.8, 1), (0.2, 0), (0.1, 0)]
        auc, max_csi, thr = auc_and_max_csi(scored)
        assert auc == 1.0
        assert max_csi == 1.0
        assert thr == 0.8

    def test_identical_scores_give_chance_auc(self):
        auc, _, _ = auc_and_max_csi([(0.5, 1), (0.5, 0), (0.5, 1), (0.5, 0)])
        assert auc == pytest.approx(0.5, abs=1e-15)

    def test_hand_enumerated_roc(self):
        auc, _, _ = auc_and_max_csi([(0.9, 1), (0.6, 0), (0.4, 1), (0.1, 0)])
        assert auc == pytest.approx(0.75, abs=1e-15)

    def test_single_class_auc_undefined(self):
        auc, max_csi, _ = auc_and_max_csi([(0.9, 1), (0.1, 1)])
        assert auc is None
        assert max_csi == 1.0

    def test_invariant_under_monotone_score_transform(self, rng):
        scored = [(float(s), int(l)) for s, l in zip(rng.uniform(0, 1, 50), rng.integers(0, 2, 50))]
        if not any(l for _, l in scored):
            scored[0] = (scored[0][0], 1)
        if all(l for _, l in scored):
            scored[1] = (scored[1][0], 0)
        auc1, _, _ = auc_and_max_csi(scored)
        auc2, _, _ = auc_and_max_csi([(math.exp(3 * s), l) for s, l in scored])
        assert auc1 == pytest.approx(auc2, abs=1e-12)

    def test_empty_input(self):
        assert auc_and_max_csi([]) == (None, None, None)


class TestMatchStats:
    def run(self, pred, truth):
        pairing = pair_particles(pred, truth)
        return match_stats(pairing, len(truth), len(pred))

    def test_perfect_prediction(self):
        pts = [particle(x=i * 100.0) for i in range(4)]
        accuracy, f1, rmse, mae = self.run(list(pts), list(pts))
        assert accuracy == 1.0 and f1 == 1.0 and rmse == 0.0
        assert mae == {"x": 0.0, "y": 0.0, "z": 0.0, "d": 0.0}

    def test_double_prediction_rate(self):
        truth = [particle(x=i * 100.0) for i in range(3)]
        pred = truth + [particle(x=5000.0 + i * 100.0) for i in range(3)]
        accuracy, f1, _, _ = self.run(pred, truth)
        assert accuracy == 1.0
        assert f1 == pytest.approx(2 / 3, abs=1e-15)

    def test_rmse_over_pair_distances(self):
        truth = [particle(x=0.0), particle(x=1000.0), particle(x=2000.0)]
        pred = [particle(x=3.0), particle(x=1004.0), particle(x=2000.0)]
        _, _, rmse, mae = self.run(pred, truth)
        assert rmse == pytest.approx(math.sqrt(25 / 3), abs=1e-12)
        assert mae["x"] == pytest.approx(7 / 3, abs=1e-12)

    def test_empty_truth_undefined_accuracy(self):
        accuracy, f1, rmse, mae = self.run([particle()], [])
        assert accuracy is None
        assert f1 == 0.0
        assert rmse is None and mae["x"] is None


class TestThresholdSweep:
    def make_detections(self):
        return [det(x=0.0), det(x=30.0), det(x=800.0), det(x=5000.0)]

    def test_tiny_threshold_counts_every_detection(self):
        rows = threshold_sweep(self.make_detections(), [particle()], [1e-9])
        assert rows[0][3] == 4  # n_particles column

    def test_huge_threshold_single_cluster(self):
        rows = threshold_sweep(self.make_detections(), [particle()], [1e12])
        assert rows[0][1] == 1 and rows[0][3] == 1

    def test_monotone_particle_count(self):
        thresholds = [1e-9, 10.0, 100.0, 1000.0, 1e6]
        rows = threshold_sweep(self.make_detections(), [particle()], thresholds)
        counts = [r[3] for r in rows]
        assert counts == sorted(counts, reverse=True)

    def test_empty_thresholds_rejected(self):
        with pytest.raises(ValueError):
            threshold_sweep([], [], [])

    def test_grouped_sweep_keeps_holograms_apart(self):
        # Two identical holograms must not cross-cluster: per threshold the
        # counts simply double those of one hologram.
        dets = self.make_detections()
        truth = [particle(x=0.0), particle(x=800.0)]
        single = threshold_sweep(dets, truth, [50.0, 1e12])
        double = sweep_over_holograms([(dets, truth), (dets, truth)], [50.0, 1e12])
        for one, two in zip(single, double):
            assert two[1] == 2 * one[1]
            assert two[2] == 2 * one[2]
            assert two[3] == 2 * one[3]


class TestEmitHistograms:
    def make_holo(self, rng, n):
        return [particle(*rng.uniform(10, 90, 4)) for _ in range(n)]

    def test_identical_inputs_identical_histograms(self, rng):
        holos = [self.make_holo(rng, 20) for _ in range(3)]
        rows = emit_histograms(holos, [list(h) for h in holos], bins=8)
        for row in rows:
            assert row[3] == row[5]  # pred mean == true mean
            assert row[4] == row[6]

    def test_empty_predictions_zero_histograms(self, rng):
        truth = [self.make_holo(rng, 15)]
        rows = emit_histograms([[]], truth, bins=6)
        assert all(row[3] == 0.0 for row in rows)
        assert sum(row[5] for row in rows if row[0] == "x") > 0

    def test_uniform_depth_sample_is_flat(self):
        rng = np.random.default_rng(77)
        zs = rng.uniform(0.0, 1000.0, 5000)
        holo = [particle(z=float(v)) for v in zs]
        rows = [r for r in emit_histograms([[]], [holo], bins=20) if r[0] == "z"]
        counts = np.array([r[5] for r in rows])
        expected = 5000 / 20
        chi2 = ((counts - expected) ** 2 / expected).sum()
        assert chi2 < 50.0  # dof=19; flat to a generous bound

    def test_svg_written(self, rng, tmp_path):
        holos = [self.make_holo(rng, 10)]
        emit_histograms(holos, holos, bins=5, svg_path=tmp_path / "h.svg")
        svg = (tmp_path / "h.svg").read_text()
        assert svg.lstrip().startswith("<?xml")
