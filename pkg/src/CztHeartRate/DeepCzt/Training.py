# ----------------------------------------------------------------------
# |
# |  Training.py
# |
# |  David Brownell <db@DavidBrownell.com>
# |      2024-03-06 07:58:21
# |
# ----------------------------------------------------------------------
# |
# |  Copyright David Brownell 2024
# |  Distributed under the MIT License.
# |
# ----------------------------------------------------------------------
"""Mini-batch training of the trainable estimator"""

import json
import math
import sys

from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from dbrownell_Common.InflectEx import inflect
from dbrownell_Common.Streams.DoneManager import DoneManager
from numpy.typing import NDArray
from rich.console import Console
from rich.progress import Progress, TimeElapsedColumn

from CztHeartRate.Czt import SignalWindow
from CztHeartRate.DeepCzt.Config import DistributionLoss, TrainConfig
from CztHeartRate.DeepCzt.Losses import BatchBackward, SmoLoss
from CztHeartRate.DeepCzt.Model import (
    DeepCztException,
    DeepCztModel,
    ModelDivergedException,
    TargetDistribution,
)
from CztHeartRate.DeepCzt.Optimizers import AdamW, ReduceLrOnPlateau
from CztHeartRate.SignalGen import LabeledWindow


# ----------------------------------------------------------------------
# |
# |  Public Types
# |
# ----------------------------------------------------------------------
TrainItem = Union[LabeledWindow, tuple[SignalWindow, float]]


# ----------------------------------------------------------------------
@dataclass(frozen=True)
class EpochStats:
    """Values recorded at the end of each epoch."""

    epoch: int
    train_loss: float
    val_loss: float
    smo: float
    learning_rate: float
    learning_rate_reduced: bool


# ----------------------------------------------------------------------
@dataclass(frozen=True)
class TrainReport:
    """Training history and the validation error of the trained and the frozen classical estimators."""

    # ----------------------------------------------------------------------
    train_losses: list[float]
    val_losses: list[float]
    smo_values: list[float]
    learning_rates: list[float]

    final_val_mae_bpm: float
    baseline_val_mae_bpm: float

    seed: int
    unregularized: bool
    loss: str

    num_train: int = field(kw_only=True)
    num_val: int = field(kw_only=True)

    # ----------------------------------------------------------------------
    @property
    def epochs_run(self) -> int:
        return len(self.train_losses)

    # ----------------------------------------------------------------------
    def ToDict(self) -> dict:
        return {"epochs_run": self.epochs_run, **asdict(self)}

    # ----------------------------------------------------------------------
    def ToJson(self) -> str:
        return json.dumps(self.ToDict(), indent=2)


# ----------------------------------------------------------------------
# |
# |  Public Functions
# |
# ----------------------------------------------------------------------
def Train(
    model: DeepCztModel,
    dataset: Sequence[TrainItem],
    config: TrainConfig = TrainConfig(),
    *,
    validation: Optional[Sequence[TrainItem]] = None,
    on_epoch: Optional[Callable[[EpochStats], None]] = None,
    dm: Optional[DoneManager] = None,
) -> TrainReport:
    """\
    Trains `model` in place.

    When `validation` is not provided, a seeded split holds out `config.validation_fraction` of
    the dataset (at least one window). Weights are projected onto [-1, 1] after every optimizer
    step; the learning rate follows the validation loss.
    """

    if not dataset:
        raise DeepCztException("The training dataset is empty.")

    rng = np.random.default_rng(config.seed)

    items = [_Normalize(item) for item in dataset]

    if validation is None:
        train_items, val_items = _Split(items, config.validation_fraction, rng)
    else:
        if not validation:
            raise DeepCztException("The validation dataset is empty.")

        train_items = items
        val_items = [_Normalize(item) for item in validation]

    train_samples, train_targets, _ = _Stack(model, train_items, config, dm)
    val_samples, val_targets, val_labels = _Stack(model, val_items, config, dm)

    baseline = DeepCztModel(model.plan, model.w_tilde_init.copy(), model.w_tilde_init)
    baseline_mae = _MeanAbsoluteError(baseline, val_samples, val_labels)

    optimizer = AdamW(config.learning_rate, weight_decay=config.weight_decay)
    scheduler = ReduceLrOnPlateau(
        optimizer,
        patience=config.patience,
        factor=config.factor,
        threshold=config.threshold,
    )

    train_losses: list[float] = []
    val_losses: list[float] = []
    smo_values: list[float] = []
    learning_rates: list[float] = []

    num_train = train_samples.shape[0]

    with Progress(
        *Progress.get_default_columns(),
        TimeElapsedColumn(),
        console=Console(file=sys.stderr),
        transient=True,
        disable=dm is None or not dm.capabilities.is_interactive,
    ) as progress:
        task_id = progress.add_task("Training", total=config.epochs)

        for epoch in range(config.epochs):
            order = rng.permutation(num_train)

            weighted_loss = 0.0

            for batch_start in range(0, num_train, config.batch_size):
                batch_indexes = order[batch_start : batch_start + config.batch_size]

                batch_loss, gradient = BatchBackward(
                    model,
                    train_samples[batch_indexes],
                    train_targets[batch_indexes],
                    config,
                )

                optimizer.Step(model.w_tilde, gradient)
                model.Clamp()

                weighted_loss += batch_loss * batch_indexes.shape[0]

            train_loss = weighted_loss / num_train
            val_loss, _ = BatchBackward(model, val_samples, val_targets, config)

            if not (math.isfinite(train_loss) and math.isfinite(val_loss)):
                raise ModelDivergedException(
                    "Training diverged in epoch {} (train loss {}, validation loss {}).".format(
                        epoch + 1,
                        train_loss,
                        val_loss,
                    ),
                )

            reduced = scheduler.Step(val_loss)

            stats = EpochStats(
                epoch + 1,
                train_loss,
                val_loss,
                SmoLoss(model),
                optimizer.learning_rate,
                reduced,
            )

            train_losses.append(stats.train_loss)
            val_losses.append(stats.val_loss)
            smo_values.append(stats.smo)
            learning_rates.append(stats.learning_rate)

            if dm is not None:
                dm.WriteVerbose(
                    "Epoch {}: train {:.6g}, validation {:.6g}, smo {:.6g}, lr {:.6g}{}\n".format(
                        stats.epoch,
                        stats.train_loss,
                        stats.val_loss,
                        stats.smo,
                        stats.learning_rate,
                        " (reduced)" if reduced else "",
                    ),
                )

            if on_epoch is not None:
                on_epoch(stats)

            progress.update(task_id, advance=1)

    report = TrainReport(
        train_losses,
        val_losses,
        smo_values,
        learning_rates,
        _MeanAbsoluteError(model, val_samples, val_labels),
        baseline_mae,
        config.seed,
        config.unregularized,
        DistributionLoss(config.loss).value,
        num_train=num_train,
        num_val=val_samples.shape[0],
    )

    if dm is not None:
        dm.WriteInfo(
            "Trained for {} on {}; validation MAE {:.4g} BPM (classical {:.4g} BPM).\n".format(
                "{} epoch{}".format(report.epochs_run, "" if report.epochs_run == 1 else "s"),
                inflect.no("window", num_train),
                report.final_val_mae_bpm,
                report.baseline_val_mae_bpm,
            ),
        )

    return report


# ----------------------------------------------------------------------
def DecodeBatch(
    model: DeepCztModel,
    samples: NDArray[np.float64],
) -> NDArray[np.float64]:
    """Returns the heart rate (BPM) of the most probable bin for each row of a (B, N) batch."""

    probs = model.ForwardBatch(samples).probs
    return 60.0 * model.plan.freqs_hz[np.argmax(probs, axis=1)]


# ----------------------------------------------------------------------
# |
# |  Private Functions
# |
# ----------------------------------------------------------------------
def _Normalize(
    item: TrainItem,
) -> tuple[SignalWindow, float]:
    if isinstance(item, LabeledWindow):
        return item.window, item.hr_gt_bpm

    window, hr_bpm = item
    return window, float(hr_bpm)


# ----------------------------------------------------------------------
def _Split(
    items: list[tuple[SignalWindow, float]],
    validation_fraction: float,
    rng: np.random.Generator,
) -> tuple[list[tuple[SignalWindow, float]], list[tuple[SignalWindow, float]]]:
    if len(items) == 1:
        return items, items

    num_val = min(max(1, int(round(len(items) * validation_fraction))), len(items) - 1)
    order = rng.permutation(len(items))

    return [items[index] for index in order[num_val:]], [items[index] for index in order[:num_val]]


# ----------------------------------------------------------------------
def _Stack(
    model: DeepCztModel,
    items: list[tuple[SignalWindow, float]],
    config: TrainConfig,
    dm: Optional[DoneManager],
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    for window, _ in items:
        model.ValidateWindow(window)

    labels = np.array([hr_bpm for _, hr_bpm in items], dtype=np.float64)

    low_bpm = 60.0 * float(model.plan.freqs_hz[0])
    high_bpm = 60.0 * float(model.plan.freqs_hz[-1])

    num_clamped = int(np.sum((labels < low_bpm) | (labels > high_bpm)))
    if num_clamped and dm is not None:
        dm.WriteWarning(
            "{} outside of [{:.4g}, {:.4g}] BPM; the targets were clamped to the band edges.\n".format(
                inflect.no("label", num_clamped),
                low_bpm,
                high_bpm,
            ),
        )

    samples = np.vstack([window.samples for window, _ in items])
    targets = np.vstack(
        [TargetDistribution(hr_bpm, model.plan, config.target_smoothing_bpm).probs for hr_bpm in labels]
    )

    return samples, targets, labels


# ----------------------------------------------------------------------
def _MeanAbsoluteError(
    model: DeepCztModel,
    samples: NDArray[np.float64],
    labels: NDArray[np.float64],
) -> float:
    return float(np.mean(np.abs(DecodeBatch(model, samples) - labels)))
