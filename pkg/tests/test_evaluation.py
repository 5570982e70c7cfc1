import json

import numpy as np
import pytest

from junctiongen.errors import DomainError
from junctiongen.evaluation import (
    EvalReport,
    FidResult,
    RandomProjectionExtractor,
    compute_fid,
    compute_miou,
    compute_pixel_accuracy,
    evaluate_model,
    ground_truth_segmenter,
)
from junctiongen.pipeline import GeneratorBundle


def closed_form_gaussian_distance(mu_r, sigma_r, mu_f, sigma_f):
    """Analytic distance for diagonal covariances."""
    diff = float(((mu_r - mu_f) ** 2).sum())
    cross = 2.0 * np.sum(np.sqrt(np.diag(sigma_r) * np.diag(sigma_f)))
    return diff + float(np.trace(sigma_r) + np.trace(sigma_f)) - cross


class TestComputeFid:
    def test_identical_sets_score_zero(self):
        rng = np.random.default_rng(0)
        feats = rng.normal(size=(200, 8))
        result = compute_fid(feats, feats)
        assert abs(result.value) < 1e-6
        assert result.regularization_epsilon == 0.0

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=(150, 6))
        b = rng.normal(loc=0.5, size=(150, 6)) * 1.5
        assert compute_fid(a, b).value == pytest.approx(compute_fid(b, a).value, abs=1e-9)

    def test_matches_closed_form_for_diagonal_gaussians(self):
        rng = np.random.default_rng(2)
        n, d = 10000, 8
        mu_r, mu_f = np.zeros(d), np.full(d, 0.7)
        std_r, std_f = np.ones(d), np.full(d, 1.3)
        real = rng.normal(mu_r, std_r, size=(n, d))
        fake = rng.normal(mu_f, std_f, size=(n, d))
        expect = closed_form_gaussian_distance(
            mu_r, np.diag(std_r**2), mu_f, np.diag(std_f**2)
        )
        got = compute_fid(real, fake).value
        assert got == pytest.approx(expect, rel=0.05)

    def test_mean_shift_only(self):
        rng = np.random.default_rng(3)
        base = rng.normal(size=(5000, 4))
        shifted = base + np.array([2.0, 0, 0, 0])
        # identical covariance, mean shift of 2 in one axis -> distance 4
        assert compute_fid(base, shifted).value == pytest.approx(4.0, abs=1e-9)

    def test_degenerate_covariance_regularized(self):
        # rank-deficient features: constant column makes the covariance singular
        rng = np.random.default_rng(4)
        a = np.concatenate([rng.normal(size=(50, 2)), np.zeros((50, 2))], axis=1)
        b = np.concatenate([rng.normal(size=(50, 2)), np.zeros((50, 2))], axis=1)
        result = compute_fid(a, b)
        assert np.isfinite(result.value)
        assert result.value >= 0.0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DomainError):
            compute_fid(np.zeros((10, 3)), np.zeros((10, 4)))

    def test_too_few_samples_rejected(self):
        with pytest.raises(DomainError):
            compute_fid(np.zeros((1, 3)), np.zeros((10, 3)))

    def test_float_conversion(self):
        assert float(FidResult(1.5, 0.0)) == 1.5


class TestSegmentationMetrics:
    def test_perfect_prediction_scores_one(self):
        labels = np.random.default_rng(0).integers(0, 5, (4, 16, 16))
        preds = trues = list(labels)
        miou = compute_miou(preds, trues)
        acc = compute_pixel_accuracy(preds, trues)
        for c in (1, 2, 3, 4):
            assert miou[c] == 1.0
            assert acc[c] == 1.0

    def test_half_overlap_scores_one_third(self):
        # prediction and truth are same-size strips overlapping on half their
        # area: IoU = 1 / 3, recall = 1 / 2
        true = np.zeros((4, 8), dtype=np.uint8)
        pred = np.zeros((4, 8), dtype=np.uint8)
        true[:, 0:4] = 3
        pred[:, 2:6] = 3
        miou = compute_miou([pred], [true], classes=[3])
        acc = compute_pixel_accuracy([pred], [true], classes=[3])
        assert miou[3] == pytest.approx(1 / 3)
        assert acc[3] == pytest.approx(1 / 2)

    def test_absent_class_is_none(self):
        z = np.zeros((4, 4), dtype=np.uint8)
        assert compute_miou([z], [z], classes=[2])[2] is None
        assert compute_pixel_accuracy([z], [z], classes=[2])[2] is None

    def test_aggregation_over_set_not_mean_of_frames(self):
        # one frame with tiny overlap, one perfect; pooled counts differ from
        # averaging per-frame scores
        t1 = np.zeros((2, 4), dtype=np.uint8)
        p1 = np.zeros((2, 4), dtype=np.uint8)
        t1[0, 0] = 1
        p1[0, 1] = 1
        t2 = np.ones((2, 4), dtype=np.uint8)
        p2 = np.ones((2, 4), dtype=np.uint8)
        miou = compute_miou([p1, p2], [t1, t2], classes=[1])
        assert miou[1] == pytest.approx(8 / 10)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DomainError):
            compute_miou([np.zeros((2, 2))], [np.zeros((3, 3))], classes=[1])

    def test_length_mismatch_rejected(self):
        z = np.zeros((2, 2))
        with pytest.raises(ValueError):
            compute_miou([z, z], [z], classes=[1])


class TestExtractor:
    def test_deterministic(self):
        rng = np.random.default_rng(0)
        imgs = [rng.integers(0, 256, (32, 32, 3), dtype=np.uint8) for _ in range(3)]
        a = RandomProjectionExtractor(seed=5)(imgs)
        b = RandomProjectionExtractor(seed=5)(imgs)
        assert np.array_equal(a, b)
        assert a.shape == (3, 8)

    def test_bad_input_rejected(self):
        with pytest.raises(DomainError):
            RandomProjectionExtractor()([np.zeros((32, 32))])


class TestEvalReport:
    def make(self, **over):
        base = dict(
            fid=1.0,
            fid_regularization_epsilon=0.0,
            miou={"car": 0.5},
            accuracy={"car": 0.6},
            miou_mean=0.5,
            accuracy_mean=0.6,
            num_images=4,
            num_failed=0,
        )
        base.update(over)
        return EvalReport(**base)

    def test_background_rejected(self):
        with pytest.raises(DomainError):
            self.make(miou={"background": 0.1})

    def test_score_range_enforced(self):
        with pytest.raises(DomainError):
            self.make(accuracy={"car": 1.5})

    def test_negative_fid_rejected(self):
        with pytest.raises(DomainError):
            self.make(fid=-0.5)

    def test_save(self, tmp_path):
        report = self.make(excluded_classes=["background"])
        report.save(tmp_path / "report.json")
        data = json.loads((tmp_path / "report.json").read_text())
        assert data["fid"] == 1.0
        assert data["excluded_classes"] == ["background"]


class TestEvaluateModel:
    def test_end_to_end_report(self, toy_cfg, toy_points):
        bundle = GeneratorBundle.fresh(toy_cfg, seed=0)
        report = evaluate_model(bundle, toy_points[:4], seed=0)
        assert report.num_images == 4
        assert report.fid >= 0.0
        assert "background" not in report.miou
        # ground-truth segmenter echoes labels, so agreement is perfect
        assert all(v == 1.0 for v in report.miou.values())

    def test_exclude_bus(self, toy_cfg, toy_points):
        bundle = GeneratorBundle.fresh(toy_cfg, seed=0)
        report = evaluate_model(bundle, toy_points[:4], exclude_bus=True)
        assert "bus" not in report.miou
        assert "bus" in report.excluded_classes

    def test_deterministic_given_seed(self, toy_cfg, toy_points):
        bundle = GeneratorBundle.fresh(toy_cfg, seed=0)
        a = evaluate_model(bundle, toy_points[:4], seed=3)
        b = evaluate_model(bundle, toy_points[:4], seed=3)
        assert a.fid == b.fid

    def test_too_few_points_rejected(self, toy_cfg, toy_points):
        bundle = GeneratorBundle.fresh(toy_cfg, seed=0)
        with pytest.raises(DomainError):
            evaluate_model(bundle, toy_points[:1])

    def test_ground_truth_segmenter_echoes(self, toy_points):
        point = toy_points[0]
        out = ground_truth_segmenter(point.image, point)
        assert np.array_equal(out, point.segmap.labels)
