import numpy as np
import pytest

from pourwatch.detect import Side
from pourwatch.geometry import RotatedBox, rotated_iou
from pourwatch.metrics import (
    LengthMismatchError,
    NoGroundTruthError,
    NoPredictionsError,
    SceneOutcome,
    ScoredDetection,
    accuracy_f1,
    average_precision,
    location_grid,
    map_50_95,
    precision,
)
from pourwatch.slump import SlumpBin

from _oracles import naive_average_precision, naive_map_50_95


def _oracle_ap(preds, gts, iou_t):
    triples = [(p.frame, p.box, p.confidence) for p in preds]
    return naive_average_precision(triples, gts, rotated_iou, iou_t)


def _oracle_map(preds, gts):
    triples = [(p.frame, p.box, p.confidence) for p in preds]
    return naive_map_50_95(triples, gts, rotated_iou)


def random_instance(rng):
    n_gt = int(rng.integers(1, 5))
    n_pred = int(rng.integers(0, 7))
    gts = {0: [RotatedBox(rng.uniform(0, 60), rng.uniform(0, 60),
                          rng.uniform(4, 20), rng.uniform(4, 20), rng.uniform(0, 180))
               for _ in range(n_gt)]}
    preds = []
    for _ in range(n_pred):
        if rng.random() < 0.6 and n_gt:
            base = gts[0][int(rng.integers(0, n_gt))]
            box = RotatedBox(base.cx + rng.uniform(-4, 4), base.cy + rng.uniform(-4, 4),
                             base.w * rng.uniform(0.8, 1.2), base.h * rng.uniform(0.8, 1.2),
                             base.theta_deg + rng.uniform(-10, 10))
        else:
            box = RotatedBox(rng.uniform(0, 60), rng.uniform(0, 60),
                             rng.uniform(4, 20), rng.uniform(4, 20), rng.uniform(0, 180))
        preds.append(ScoredDetection(0, box, float(rng.uniform(0.05, 1.0))))
    return preds, gts


class TestAveragePrecision:
    def test_perfect_single(self):
        gt = RotatedBox(50, 50, 20, 10, 15)
        preds = [ScoredDetection(0, gt, 0.9)]
        gts = {0: [gt]}
        for t in (0.5, 0.75, 0.95):
            assert average_precision(preds, gts, t) == 1.0

    def test_disjoint_zero(self):
        gt = RotatedBox(50, 50, 20, 10, 0)
        preds = [ScoredDetection(0, RotatedBox(200, 200, 20, 10, 0), 0.9)]
        assert average_precision(preds, {0: [gt]}, 0.5) == 0.0

    def test_tp_fp_tp_matches_oracle(self):
        # Confidence-ordered TP, FP, TP over two ground truths.
        g1 = RotatedBox(20, 20, 10, 8, 0)
        g2 = RotatedBox(60, 20, 10, 8, 0)
        preds = [
            ScoredDetection(0, g1, 0.9),
            ScoredDetection(0, RotatedBox(100, 80, 10, 8, 0), 0.8),
            ScoredDetection(0, g2, 0.7),
        ]
        gts = {0: [g1, g2]}
        got = average_precision(preds, gts, 0.5)
        assert got == _oracle_ap(preds, gts, 0.5)
        # 101-point interpolation of the PR staircase (1.0 then 2/3):
        assert got == pytest.approx((51 * 1.0 + 50 * (2 / 3)) / 101)

    def test_no_ground_truth(self):
        with pytest.raises(NoGroundTruthError):
            average_precision([], {}, 0.5)


class TestMap5095:
    def test_perfect_detector(self):
        gt = RotatedBox(40, 30, 16, 8, 30)
        assert map_50_95([ScoredDetection(0, gt, 0.99)], {0: [gt]}) == 1.0

    def test_iou_exactly_060_gives_03(self):
        # Axis-aligned pair at IoU exactly 3/5: matched at 0.50/0.55/0.60 only.
        gt = RotatedBox(0, 0, 2, 2, 0)
        pred_box = RotatedBox(0.5, 0, 2, 2, 0)
        assert rotated_iou(pred_box, gt) == 0.6
        assert map_50_95([ScoredDetection(0, pred_box, 0.9)], {0: [gt]}) == pytest.approx(0.3)

    def test_empty_predictions(self):
        gt = RotatedBox(0, 0, 2, 2, 0)
        assert map_50_95([], {0: [gt]}) == 0.0

    def test_matches_bruteforce_oracle_on_random_instances(self):
        rng = np.random.default_rng(59)
        for _ in range(150):
            preds, gts = random_instance(rng)
            assert map_50_95(preds, gts) == _oracle_map(preds, gts)

    def test_confidence_rescale_invariance(self):
        rng = np.random.default_rng(61)
        for _ in range(30):
            preds, gts = random_instance(rng)
            scaled = [ScoredDetection(p.frame, p.box, 0.1 + 0.8 * p.confidence ** 2)
                      for p in preds]
            assert map_50_95(preds, gts) == map_50_95(scaled, gts)


class TestPrecision:
    def test_all_true(self):
        g1 = RotatedBox(20, 20, 10, 8, 0)
        g2 = RotatedBox(60, 20, 10, 8, 0)
        preds = [ScoredDetection(0, g1, 0.9), ScoredDetection(0, g2, 0.8)]
        assert precision(preds, {0: [g1, g2]}, 0.5) == 1.0

    def test_half(self):
        g1 = RotatedBox(20, 20, 10, 8, 0)
        preds = [ScoredDetection(0, g1, 0.9),
                 ScoredDetection(0, RotatedBox(100, 100, 10, 8, 0), 0.8)]
        assert precision(preds, {0: [g1]}, 0.5) == 0.5

    def test_below_threshold(self):
        g1 = RotatedBox(20, 20, 10, 8, 0)
        preds = [ScoredDetection(0, g1, 0.1)]
        with pytest.raises(NoPredictionsError):
            precision(preds, {0: [g1]}, 0.5, conf_t=0.25)


class TestAccuracyF1:
    def test_identical(self):
        bins = [SlumpBin.S150_180, SlumpBin.OVER_240, SlumpBin.UNDER_150]
        assert accuracy_f1(bins, bins) == (1.0, 1.0)

    def test_half_accuracy(self):
        preds = [SlumpBin.UNDER_150, SlumpBin.UNDER_150]
        trues = [SlumpBin.UNDER_150, SlumpBin.S150_180]
        acc, _ = accuracy_f1(preds, trues)
        assert acc == 0.5

    def test_hand_computed_confusion(self):
        # Six samples over three classes; per-class F1 = 1/2, 4/5, 2/3.
        b = list(SlumpBin)
        trues = [b[0], b[0], b[1], b[1], b[2], b[2]]
        preds = [b[0], b[1], b[1], b[1], b[2], b[0]]
        acc, f1 = accuracy_f1(preds, trues)
        assert acc == pytest.approx(4 / 6)
        assert f1 == pytest.approx((0.5 + 0.8 + 2 / 3) / 3)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            accuracy_f1([SlumpBin.UNDER_150], [])

    def test_permutation_invariance(self):
        rng = np.random.default_rng(67)
        bins = list(SlumpBin)
        preds = [bins[int(i)] for i in rng.integers(0, 5, 40)]
        trues = [bins[int(i)] for i in rng.integers(0, 5, 40)]
        base = accuracy_f1(preds, trues)
        perm = rng.permutation(40)
        assert accuracy_f1([preds[i] for i in perm], [trues[i] for i in perm]) == base


class TestLocationGrid:
    def test_all_correct(self):
        outcomes = [SceneOutcome(side, side, b)
                    for side in (Side.LEFT, Side.RIGHT, None) for b in SlumpBin]
        grid = location_grid(outcomes)
        for row in (Side.LEFT, Side.RIGHT, None):
            for b in SlumpBin:
                assert grid.cell(row, b) == 100.0
        assert grid.row_avg(None) == 100.0

    def test_nine_of_ten(self):
        outcomes = [SceneOutcome(Side.LEFT, Side.LEFT, SlumpBin.S180_210)] * 9
        outcomes.append(SceneOutcome(Side.LEFT, None, SlumpBin.S180_210))
        grid = location_grid(outcomes)
        assert grid.cell(Side.LEFT, SlumpBin.S180_210) == pytest.approx(90.0)

    def test_empty_cell_absent(self):
        grid = location_grid([SceneOutcome(Side.LEFT, Side.LEFT, SlumpBin.UNDER_150)])
        assert grid.cell(Side.RIGHT, SlumpBin.OVER_240) is None
        assert grid.col_avg(SlumpBin.OVER_240) is None
        text = grid.render()
        assert "100.00" in text and "-" in text

    def test_none_row_false_positive(self):
        grid = location_grid([SceneOutcome(None, Side.RIGHT, SlumpBin.S180_210),
                              SceneOutcome(None, None, SlumpBin.S180_210)])
        assert grid.cell(None, SlumpBin.S180_210) == pytest.approx(50.0)
