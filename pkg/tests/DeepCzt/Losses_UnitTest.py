# ----------------------------------------------------------------------
# |
# |  Losses_UnitTest.py
# |
# |  David Brownell <db@DavidBrownell.com>
# |      2024-03-05 12:09:57
# |
# ----------------------------------------------------------------------
# |
# |  Copyright David Brownell 2024
# |  Distributed under the MIT License.
# |
# ----------------------------------------------------------------------
"""Unit tests for Losses.py"""

import math
import re

import numpy as np
import pytest

from CztHeartRate.Czt import CztPlan, SignalWindow
from CztHeartRate.DeepCzt.Config import DistributionLoss, TrainConfig
from CztHeartRate.DeepCzt.Model import DeepCztException, DeepCztModel, HrDistribution, TargetDistribution
from CztHeartRate.DeepCzt.Losses import *


# ----------------------------------------------------------------------
def _OneHot(
    index: int,
    num_bins: int,
) -> HrDistribution:
    probs = np.zeros(num_bins)
    probs[index] = 1.0

    return HrDistribution(probs, np.linspace(1.0, 2.0, num_bins))


# ----------------------------------------------------------------------
class TestEmdLoss:
    # ----------------------------------------------------------------------
    def test_Standard(self):
        assert EmdLoss(_OneHot(0, 4), _OneHot(1, 4)) == 0.25
        assert EmdLoss(_OneHot(0, 4), _OneHot(3, 4)) == 0.75
        assert EmdLoss(_OneHot(2, 4), _OneHot(2, 4)) == 0.0

    # ----------------------------------------------------------------------
    @pytest.mark.parametrize("num_bins", [4, 8, 16, 32])
    def test_Ordinality(self, num_bins):
        for target_bin in range(num_bins):
            target = _OneHot(target_bin, num_bins)

            for pred_bin in range(num_bins):
                assert EmdLoss(_OneHot(pred_bin, num_bins), target) == pytest.approx(
                    abs(pred_bin - target_bin) / num_bins
                )

    # ----------------------------------------------------------------------
    def test_Batch(self):
        pred = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]])
        target = np.array([[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]])

        assert EmdLossBatch(pred, target) == pytest.approx(0.125)

    # ----------------------------------------------------------------------
    def test_DifferentGrids(self):
        with pytest.raises(
            DeepCztException,
            match=re.escape("The distributions are defined on different frequency grids (3 and 4 bins)."),
        ):
            EmdLoss(_OneHot(0, 3), _OneHot(0, 4))


# ----------------------------------------------------------------------
class TestCrossEntropyLoss:
    # ----------------------------------------------------------------------
    def test_Uniform(self):
        pred = HrDistribution(np.full(256, 1.0 / 256), np.linspace(1.0, 2.0, 256))
        assert CrossEntropyLoss(pred, 17) == pytest.approx(math.log(256))

    # ----------------------------------------------------------------------
    def test_OnlyTargetBinMatters(self):
        first = HrDistribution([0.5, 0.25, 0.25], [1.0, 1.5, 2.0])
        second = HrDistribution([0.5, 0.0, 0.5], [1.0, 1.5, 2.0])

        assert CrossEntropyLoss(first, 0) == CrossEntropyLoss(second, 0)

    # ----------------------------------------------------------------------
    def test_Floor(self):
        assert CrossEntropyLoss(_OneHot(0, 4), 1, floor=1e-12) == pytest.approx(-math.log(1e-12))

    # ----------------------------------------------------------------------
    def test_Errors(self):
        with pytest.raises(DeepCztException, match=re.escape("The target bin 4 is outside of [0, 4).")):
            CrossEntropyLoss(_OneHot(0, 4), 4)

        with pytest.raises(DeepCztException, match=re.escape("The predicted probability of bin 1 is zero.")):
            CrossEntropyLoss(_OneHot(0, 4), 1)


# ----------------------------------------------------------------------
class TestSmoAndCombined:
    # ----------------------------------------------------------------------
    def test_Smo(self):
        model = DeepCztModel.Create(CztPlan.Create(2, 4))

        assert model.w_tilde.size == 16
        assert SmoLoss(model) == 0.0

        model.w_tilde[1, 2] += 0.5
        assert SmoLoss(model) == pytest.approx(0.03125)

    # ----------------------------------------------------------------------
    def test_Combined(self):
        plan = CztPlan.Create(2, 4)
        model = DeepCztModel.Create(plan)

        model.w_tilde[1, 2] += 0.5

        pred = HrDistribution([1.0, 0.0, 0.0, 0.0], plan.freqs_hz)
        target = HrDistribution([0.0, 1.0, 0.0, 0.0], plan.freqs_hz)

        assert CombinedLoss(model, pred, target, TrainConfig()) == pytest.approx(25.0003125)
        assert CombinedLoss(model, pred, target, TrainConfig(1.0, 0.0)) == pytest.approx(0.25)

    # ----------------------------------------------------------------------
    def test_CombinedCrossEntropy(self):
        plan = CztPlan.Create(2, 4)
        model = DeepCztModel.Create(plan)

        pred = HrDistribution([0.25, 0.25, 0.25, 0.25], plan.freqs_hz)
        target = HrDistribution([0.0, 0.0, 1.0, 0.0], plan.freqs_hz)

        config = TrainConfig(2.0, 1.0, loss=DistributionLoss.CrossEntropy)

        assert CombinedLoss(model, pred, target, config) == pytest.approx(2.0 * math.log(4))


# ----------------------------------------------------------------------
class TestBackward:
    # ----------------------------------------------------------------------
    @pytest.mark.parametrize("loss", [DistributionLoss.Emd, DistributionLoss.CrossEntropy])
    def test_FiniteDifferences(self, loss):
        plan = CztPlan.Create(16, 8)
        epsilon = 1e-6

        for seed in range(20):
            rng = np.random.default_rng(seed)

            model = DeepCztModel.Create(plan)

            # Keep every deviation well away from the kink of |w - w0|
            model.w_tilde += rng.choice([-1.0, 1.0], model.w_tilde.shape) * rng.uniform(
                0.005,
                0.01,
                model.w_tilde.shape,
            )

            window = SignalWindow(rng.standard_normal(16), 30.0)
            target = TargetDistribution(
                rng.uniform(45.0, 170.0),
                plan,
                2.0 if loss == DistributionLoss.Emd else 0.0,
            )

            config = TrainConfig(1.0, 0.5, loss=loss)

            # ----------------------------------------------------------------------
            def Loss() -> float:
                return CombinedLoss(model, model.Forward(window), target, config)

            # ----------------------------------------------------------------------

            analytic = Backward(model, window, target, config)
            numeric = np.zeros_like(analytic)

            for index in np.ndindex(*model.w_tilde.shape):
                original = model.w_tilde[index]

                model.w_tilde[index] = original + epsilon
                loss_plus = Loss()

                model.w_tilde[index] = original - epsilon
                loss_minus = Loss()

                model.w_tilde[index] = original

                numeric[index] = (loss_plus - loss_minus) / (2 * epsilon)

            assert np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric) <= 1e-4

    # ----------------------------------------------------------------------
    def test_BatchLossMatchesCombinedLoss(self):
        plan = CztPlan.Create(16, 8)
        model = DeepCztModel.Create(plan)

        rng = np.random.default_rng(7)
        model.w_tilde += rng.normal(0.0, 0.01, model.w_tilde.shape)

        windows = [SignalWindow(rng.standard_normal(16), 30.0) for _ in range(3)]
        targets = [TargetDistribution(bpm, plan) for bpm in [60.0, 90.0, 120.0]]

        for loss in DistributionLoss:
            config = TrainConfig(3.0, 0.2, loss=loss)

            batch_loss, _ = BatchBackward(
                model,
                np.vstack([window.samples for window in windows]),
                np.vstack([target.probs for target in targets]),
                config,
            )

            expected = np.mean(
                [
                    CombinedLoss(model, model.Forward(window), target, config)
                    for window, target in zip(windows, targets)
                ],
            )

            assert batch_loss == pytest.approx(expected, rel=1e-12)

    # ----------------------------------------------------------------------
    def test_RegularizationOnly(self):
        plan = CztPlan.Create(16, 8)
        model = DeepCztModel.Create(plan)

        model.w_tilde[0, 0] += 0.2
        model.w_tilde[3, 20] -= 0.3

        window = SignalWindow(np.random.default_rng(1).standard_normal(16), 30.0)
        target = TargetDistribution(72.0, plan)

        gradient = Backward(model, window, target, TrainConfig(0.0, 1.0))

        expected = np.zeros_like(gradient)
        expected[0, 0] = 1.0 / 256
        expected[3, 20] = -1.0 / 256

        assert np.array_equal(gradient, expected)

        loss, _ = BatchBackward(model, window.samples[np.newaxis, :], target.probs[np.newaxis, :], TrainConfig(0.0, 1.0))
        assert loss == pytest.approx(0.5 / 256)

    # ----------------------------------------------------------------------
    def test_ZeroWindow(self):
        plan = CztPlan.Create(16, 8)
        model = DeepCztModel.Create(plan)

        gradient = Backward(model, SignalWindow(np.zeros(16), 30.0), TargetDistribution(72.0, plan), TrainConfig())

        assert np.all(np.isfinite(gradient))
        assert not np.any(gradient)

    # ----------------------------------------------------------------------
    def test_Errors(self):
        plan = CztPlan.Create(16, 8)
        model = DeepCztModel.Create(plan)

        with pytest.raises(DeepCztException, match=re.escape("The window has 32 samples but the model expects 16.")):
            Backward(model, SignalWindow(np.zeros(32), 30.0), TargetDistribution(72.0, plan), TrainConfig())

        with pytest.raises(
            DeepCztException,
            match=re.escape("The targets have the shape (1, 4) but the predictions have (1, 8)."),
        ):
            BatchBackward(model, np.ones((1, 16)), np.full((1, 4), 0.25), TrainConfig())
