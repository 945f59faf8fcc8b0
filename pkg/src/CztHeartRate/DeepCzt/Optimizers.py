# ----------------------------------------------------------------------
# |
# |  Optimizers.py
# |
# |  David Brownell <db@DavidBrownell.com>
# |      2024-03-05 13:51:10
# |
# ----------------------------------------------------------------------
# |
# |  Copyright David Brownell 2024
# |  Distributed under the MIT License.
# |
# ----------------------------------------------------------------------
"""Adaptive-moment optimizer with decoupled weight decay and a plateau learning-rate scheduler"""

import math

from typing import Optional

import numpy as np

from numpy.typing import NDArray


# ----------------------------------------------------------------------
class AdamW:
    """Updates a parameter array in place from its gradient."""

    # ----------------------------------------------------------------------
    def __init__(
        self,
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
        weight_decay: float = 0.0,
    ):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.weight_decay = weight_decay

        self.step_count = 0

        self._first_moment: Optional[NDArray[np.float64]] = None
        self._second_moment: Optional[NDArray[np.float64]] = None

    # ----------------------------------------------------------------------
    def Step(
        self,
        params: NDArray[np.float64],
        gradient: NDArray[np.float64],
    ) -> None:
        if self._first_moment is None or self._second_moment is None:
            self._first_moment = np.zeros_like(params)
            self._second_moment = np.zeros_like(params)

        self.step_count += 1

        if self.weight_decay:
            params -= self.learning_rate * self.weight_decay * params

        self._first_moment *= self.beta1
        self._first_moment += (1.0 - self.beta1) * gradient

        self._second_moment *= self.beta2
        self._second_moment += (1.0 - self.beta2) * gradient**2

        first_hat = self._first_moment / (1.0 - self.beta1**self.step_count)
        second_hat = self._second_moment / (1.0 - self.beta2**self.step_count)

        params -= self.learning_rate * first_hat / (np.sqrt(second_hat) + self.epsilon)


# ----------------------------------------------------------------------
class ReduceLrOnPlateau:
    """Multiplies the optimizer's learning rate by `factor` after `patience` epochs without improvement."""

    # ----------------------------------------------------------------------
    def __init__(
        self,
        optimizer: AdamW,
        patience: int = 5,
        factor: float = 0.9,
        threshold: float = 1e-4,
        min_learning_rate: float = 0.0,
    ):
        self.optimizer = optimizer
        self.patience = patience
        self.factor = factor
        self.threshold = threshold
        self.min_learning_rate = min_learning_rate

        self.best = math.inf
        self.num_bad_epochs = 0

    # ----------------------------------------------------------------------
    def Step(
        self,
        metric: float,
    ) -> bool:
        """Records an epoch's validation loss; returns True when the learning rate was reduced."""

        # Relative improvement, lower is better
        if metric < self.best * (1.0 - self.threshold):
            self.best = metric
            self.num_bad_epochs = 0
            return False

        self.num_bad_epochs += 1

        if self.num_bad_epochs <= self.patience:
            return False

        self.num_bad_epochs = 0

        new_learning_rate = max(self.optimizer.learning_rate * self.factor, self.min_learning_rate)
        if new_learning_rate == self.optimizer.learning_rate:
            return False

        self.optimizer.learning_rate = new_learning_rate
        return True
