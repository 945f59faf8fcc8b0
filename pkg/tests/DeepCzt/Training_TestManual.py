# ----------------------------------------------------------------------
# |
# |  Training_TestManual.py
# |
# |  David Brownell <db@DavidBrownell.com>
# |      2024-03-09 10:31:05
# |
# ----------------------------------------------------------------------
# |
# |  Copyright David Brownell 2024
# |  Distributed under the MIT License.
# |
# ----------------------------------------------------------------------
"""Manual tests for Training.py."""

# Training on a desk-scale dataset takes minutes, so this test is not collected by default.
#
# To Run the Tests
# ================
#
# `pytest tests/DeepCzt/Training_TestManual.py -vv --capture=no`

import sys
import time

import numpy as np

from dbrownell_Common.Streams.DoneManager import DoneManager, Flags as DoneManagerFlags

from CztHeartRate.Czt import CztPlan
from CztHeartRate.DeepCzt.Config import TrainConfig
from CztHeartRate.DeepCzt.Model import DeepCztModel
from CztHeartRate.DeepCzt.Training import DecodeBatch, Train
from CztHeartRate.SignalGen import SensorModel, SynthDataset, SynthFamily


# ----------------------------------------------------------------------
def test_AdaptsToSensorBias():
    sensor_model = SensorModel.Affine(offset_bpm=3.0)

    train = SynthDataset(SynthFamily((45.0, 170.0), 256, seed=1), 1000, sensor_model)
    validation = SynthDataset(SynthFamily((45.0, 170.0), 256, seed=2), 200, sensor_model)

    # Scored on windows that neither the optimizer nor the learning-rate schedule has seen
    held_out = SynthDataset(SynthFamily((45.0, 170.0), 256, seed=3), 200, sensor_model)

    held_out_samples = np.vstack([item.window.samples for item in held_out])
    held_out_labels = np.array([item.hr_gt_bpm for item in held_out])

    frozen = DeepCztModel.Create(CztPlan.Create(256))
    frozen_mae = float(np.mean(np.abs(DecodeBatch(frozen, held_out_samples) - held_out_labels)))

    model = frozen.Clone()

    start = time.perf_counter()

    with DoneManager.Create(
        sys.stdout,
        "Training...",
        flags=DoneManagerFlags.Create(verbose=True),
    ) as dm:
        report = Train(
            model,
            train,
            TrainConfig(learning_rate=5e-3, epochs=50, batch_size=32, seed=0),
            validation=validation,
            dm=dm,
        )

    elapsed_s = time.perf_counter() - start

    trained_mae = float(np.mean(np.abs(DecodeBatch(model, held_out_samples) - held_out_labels)))

    print(
        "\nHeld-out frozen MAE {:.3f} BPM, trained MAE {:.3f} BPM, {} epochs in {:.1f} s\n".format(
            frozen_mae,
            trained_mae,
            report.epochs_run,
            elapsed_s,
        ),
    )

    assert 2.0 <= frozen_mae <= 4.0
    assert trained_mae <= 1.0
    assert frozen_mae - trained_mae >= 1.0
    assert elapsed_s < 10 * 60
