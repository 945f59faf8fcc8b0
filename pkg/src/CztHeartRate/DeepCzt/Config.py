# ----------------------------------------------------------------------
# |
# |  Config.py
# |
# |  David Brownell <db@DavidBrownell.com>
# |      2024-03-05 09:40:03
# |
# ----------------------------------------------------------------------
# |
# |  Copyright David Brownell 2024
# |  Distributed under the MIT License.
# |
# ----------------------------------------------------------------------
"""Training configuration for the trainable estimator"""

import math

from dataclasses import dataclass, field
from enum import Enum

from CztHeartRate.DeepCzt.Model import DeepCztException


# ----------------------------------------------------------------------
class DistributionLoss(str, Enum):
    """Term that compares the predicted distribution with the reference."""

    Emd = "emd"
    CrossEntropy = "ce"


# ----------------------------------------------------------------------
@dataclass(frozen=True)
class TrainConfig:
    """\
    Hyperparameters for training.

    The loss is alpha * <distribution loss> + beta * <mean absolute deviation from the classical
    weights>; the scheduler reduces the learning rate by `factor` after `patience` epochs without
    a relative validation-loss improvement of at least `threshold`.
    """

    # ----------------------------------------------------------------------
    alpha: float = 100.0
    beta: float = 0.01
    learning_rate: float = 1e-4

    patience: int = field(kw_only=True, default=5)
    factor: float = field(kw_only=True, default=0.9)
    threshold: float = field(kw_only=True, default=1e-4)

    batch_size: int = field(kw_only=True, default=32)
    epochs: int = field(kw_only=True, default=50)

    target_smoothing_bpm: float = field(kw_only=True, default=0.0)
    loss: DistributionLoss = field(kw_only=True, default=DistributionLoss.Emd)
    weight_decay: float = field(kw_only=True, default=0.0)

    validation_fraction: float = field(kw_only=True, default=0.1)
    seed: int = field(kw_only=True, default=0)

    # ----------------------------------------------------------------------
    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or not math.isfinite(self.alpha + self.beta):
            raise DeepCztException(
                "alpha ({}) and beta ({}) must be finite and not negative.".format(self.alpha, self.beta)
            )
        if self.alpha + self.beta <= 0:
            raise DeepCztException("At least one of alpha and beta must be positive.")
        if not self.learning_rate > 0:
            raise DeepCztException("The learning rate must be positive ({}).".format(self.learning_rate))
        if not 0 < self.factor < 1:
            raise DeepCztException("The scheduler factor must be within (0, 1) ({}).".format(self.factor))
        if self.patience < 0:
            raise DeepCztException("The scheduler patience must not be negative ({}).".format(self.patience))
        if self.threshold < 0:
            raise DeepCztException("The scheduler threshold must not be negative ({}).".format(self.threshold))
        if self.batch_size < 1:
            raise DeepCztException("The batch size must be at least 1 ({}).".format(self.batch_size))
        if self.epochs < 1:
            raise DeepCztException("At least 1 epoch is required ({}).".format(self.epochs))
        if self.target_smoothing_bpm < 0:
            raise DeepCztException(
                "The target smoothing must not be negative ({}).".format(self.target_smoothing_bpm)
            )
        if self.weight_decay < 0:
            raise DeepCztException("The weight decay must not be negative ({}).".format(self.weight_decay))
        if not 0 < self.validation_fraction < 1:
            raise DeepCztException(
                "The validation fraction must be within (0, 1) ({}).".format(self.validation_fraction)
            )

        object.__setattr__(self, "loss", DistributionLoss(self.loss))

    # ----------------------------------------------------------------------
    @property
    def unregularized(self) -> bool:
        return self.beta == 0
