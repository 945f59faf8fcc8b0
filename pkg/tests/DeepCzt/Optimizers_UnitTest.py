# ----------------------------------------------------------------------
# |
# |  Optimizers_UnitTest.py
# |
# |  David Brownell <db@DavidBrownell.com>
# |      2024-03-05 14:26:40
# |
# ----------------------------------------------------------------------
# |
# |  Copyright David Brownell 2024
# |  Distributed under the MIT License.
# |
# ----------------------------------------------------------------------
"""Unit tests for Optimizers.py"""

import numpy as np
import pytest

from CztHeartRate.DeepCzt.Optimizers import *


# ----------------------------------------------------------------------
class TestAdamW:
    # ----------------------------------------------------------------------
    def test_FirstStep(self):
        params = np.array([1.0, 1.0, 1.0])
        optimizer = AdamW(0.01)

        optimizer.Step(params, np.array([0.5, -2.0, 0.0]))

        assert optimizer.step_count == 1
        assert params == pytest.approx([0.99, 1.01, 1.0], rel=1e-6)

    # ----------------------------------------------------------------------
    def test_ConstantGradient(self):
        params = np.zeros(2)
        optimizer = AdamW(0.1)

        for _ in range(10):
            optimizer.Step(params, np.array([3.0, -0.001]))

        # Bias correction makes every step lr * sign(gradient)
        assert params == pytest.approx([-1.0, 1.0], rel=1e-4)

    # ----------------------------------------------------------------------
    def test_WeightDecay(self):
        params = np.array([2.0, -4.0])
        optimizer = AdamW(0.1, weight_decay=0.5)

        optimizer.Step(params, np.zeros(2))

        assert list(params) == [2.0 - 0.1 * 0.5 * 2.0, -4.0 + 0.1 * 0.5 * 4.0]

    # ----------------------------------------------------------------------
    def test_Minimizes(self):
        params = np.array([3.0, -2.0])
        optimizer = AdamW(0.05)

        for _ in range(2000):
            optimizer.Step(params, 2 * (params - np.array([1.0, 0.5])))

        assert params == pytest.approx([1.0, 0.5], abs=1e-2)


# ----------------------------------------------------------------------
class TestReduceLrOnPlateau:
    # ----------------------------------------------------------------------
    def test_Reductions(self):
        optimizer = AdamW(1.0)
        scheduler = ReduceLrOnPlateau(optimizer, patience=2, factor=0.5)

        assert [scheduler.Step(1.0) for _ in range(7)] == [False, False, False, True, False, False, True]
        assert optimizer.learning_rate == 0.25

    # ----------------------------------------------------------------------
    def test_ImprovementResets(self):
        optimizer = AdamW(1.0)
        scheduler = ReduceLrOnPlateau(optimizer, patience=1, factor=0.5)

        assert scheduler.Step(1.0) is False
        assert scheduler.Step(1.0) is False
        assert scheduler.Step(0.5) is False
        assert scheduler.num_bad_epochs == 0
        assert scheduler.Step(0.5) is False
        assert scheduler.Step(0.5) is True
        assert optimizer.learning_rate == 0.5

    # ----------------------------------------------------------------------
    def test_Threshold(self):
        optimizer = AdamW(1.0)
        scheduler = ReduceLrOnPlateau(optimizer, patience=0, factor=0.5, threshold=1e-4)

        scheduler.Step(1.0)

        # Less than a relative improvement of 1e-4
        assert scheduler.Step(0.99995) is True
        assert scheduler.best == 1.0

        assert scheduler.Step(0.9) is False
        assert scheduler.best == 0.9

    # ----------------------------------------------------------------------
    def test_MinLearningRate(self):
        optimizer = AdamW(1.0)
        scheduler = ReduceLrOnPlateau(optimizer, patience=0, factor=0.5, min_learning_rate=0.4)

        scheduler.Step(1.0)

        assert scheduler.Step(1.0) is True
        assert optimizer.learning_rate == 0.5

        assert scheduler.Step(1.0) is True
        assert optimizer.learning_rate == 0.4

        assert scheduler.Step(1.0) is False
        assert optimizer.learning_rate == 0.4
