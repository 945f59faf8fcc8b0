# ----------------------------------------------------------------------
# |
# |  Metrics.py
# |
# |  David Brownell <db@DavidBrownell.com>
# |      2024-03-07 13:44:56
# |
# ----------------------------------------------------------------------
# |
# |  Copyright David Brownell 2024
# |  Distributed under the MIT License.
# |
# ----------------------------------------------------------------------
"""Heart-rate error metrics"""

import math

from dataclasses import asdict, dataclass
from typing import Optional, Sequence, Union

import numpy as np

from dbrownell_Common.Streams.DoneManager import DoneManagerException
from numpy.typing import NDArray
from scipy import stats as sp_stats


# ----------------------------------------------------------------------
# |
# |  Public Types
# |
# ----------------------------------------------------------------------
class MetricsException(DoneManagerException):
    """Exception raised when metrics cannot be computed."""

    pass  # pylint: disable=unnecessary-pass


# ----------------------------------------------------------------------
@dataclass(frozen=True)
class Metrics:
    """\
    Aggregate error of predicted heart rates against references, with standard errors.

    `pearson_r` is None when either input has zero variance (or fewer than 2 values).
    """

    num_values: int

    mae: float
    rmse: float
    mape: float
    pearson_r: Optional[float]

    mae_se: float
    rmse_se: float
    mape_se: float
    pearson_r_se: Optional[float]

    # ----------------------------------------------------------------------
    def ToDict(self) -> dict[str, Union[int, float, None]]:
        return asdict(self)


# ----------------------------------------------------------------------
# |
# |  Public Functions
# |
# ----------------------------------------------------------------------
def ComputeMetrics(
    preds: Union[Sequence[float], NDArray[np.float64]],
    gts: Union[Sequence[float], NDArray[np.float64]],
) -> Metrics:
    preds_array = np.asarray(preds, dtype=np.float64)
    gts_array = np.asarray(gts, dtype=np.float64)

    if preds_array.ndim != 1 or gts_array.ndim != 1:
        raise MetricsException("Predictions and references must be vectors.")
    if preds_array.shape != gts_array.shape:
        raise MetricsException(
            "There are {} predictions but {} references.".format(preds_array.shape[0], gts_array.shape[0])
        )
    if preds_array.shape[0] == 0:
        raise MetricsException("At least one prediction is required.")
    if not (np.all(np.isfinite(preds_array)) and np.all(np.isfinite(gts_array))):
        raise MetricsException("Predictions and references must be finite.")
    if np.any(gts_array <= 0):
        raise MetricsException("References must be positive.")

    num_values = preds_array.shape[0]
    sqrt_n = math.sqrt(num_values)

    errors = preds_array - gts_array
    abs_errors = np.abs(errors)
    squared_errors = errors**2
    percent_errors = 100.0 * abs_errors / gts_array

    pearson_r: Optional[float] = None
    pearson_r_se: Optional[float] = None

    if num_values >= 2 and np.std(preds_array) > 0 and np.std(gts_array) > 0:
        pearson_r = float(np.clip(sp_stats.pearsonr(preds_array, gts_array)[0], -1.0, 1.0))

        if num_values > 2:
            pearson_r_se = math.sqrt(max(0.0, 1.0 - pearson_r**2) / (num_values - 2))

    return Metrics(
        num_values,
        float(np.mean(abs_errors)),
        math.sqrt(float(np.mean(squared_errors))),
        float(np.mean(percent_errors)),
        pearson_r,
        float(np.std(abs_errors)) / sqrt_n,
        math.sqrt(float(np.std(squared_errors)) / sqrt_n),
        float(np.std(percent_errors)) / sqrt_n,
        pearson_r_se,
    )
