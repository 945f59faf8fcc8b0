# ----------------------------------------------------------------------
# |
# |  Losses.py
# |
# |  David Brownell <db@DavidBrownell.com>
# |      2024-03-05 10:17:29
# |
# ----------------------------------------------------------------------
# |
# |  Copyright David Brownell 2024
# |  Distributed under the MIT License.
# |
# ----------------------------------------------------------------------
"""\
Losses for the trainable estimator and their analytic gradients.

The backward pass chains softmax, modulus, and the tied block product by hand; each learnable
weight receives the contributions of both of its positions in the block matrix.
"""

from typing import Optional

import numpy as np

from numpy.typing import NDArray

from CztHeartRate.Czt import SignalWindow
from CztHeartRate.DeepCzt.Config import DistributionLoss, TrainConfig
from CztHeartRate.DeepCzt.Model import (
    DeepCztException,
    DeepCztModel,
    HrDistribution,
    ModelDivergedException,
)


# ----------------------------------------------------------------------
# |
# |  Public Types
# |
# ----------------------------------------------------------------------
PROBABILITY_FLOOR: float = 1e-12


# ----------------------------------------------------------------------
# |
# |  Public Functions
# |
# ----------------------------------------------------------------------
def EmdLoss(
    pred: HrDistribution,
    target: HrDistribution,
) -> float:
    """Mean over bins of the squared difference between the two cumulative distributions."""

    _VerifySameGrid(pred, target)
    return EmdLossBatch(pred.probs[np.newaxis, :], target.probs[np.newaxis, :])


# ----------------------------------------------------------------------
def EmdLossBatch(
    pred_probs: NDArray[np.float64],
    target_probs: NDArray[np.float64],
) -> float:
    """Mean of the per-row EMD over a (B, M) batch."""

    cdf_diff = np.cumsum(pred_probs, axis=1) - np.cumsum(target_probs, axis=1)
    return float(np.mean(np.mean(cdf_diff**2, axis=1)))


# ----------------------------------------------------------------------
def CrossEntropyLoss(
    pred: HrDistribution,
    target_bin: int,
    *,
    floor: Optional[float] = None,
) -> float:
    """-log of the predicted probability of `target_bin`; only the target bin matters."""

    if not 0 <= target_bin < pred.num_bins:
        raise DeepCztException(
            "The target bin {} is outside of [0, {}).".format(target_bin, pred.num_bins)
        )

    prob = float(pred.probs[target_bin])

    if floor is not None:
        prob = max(prob, floor)

    if prob <= 0.0:
        raise DeepCztException("The predicted probability of bin {} is zero.".format(target_bin))

    return -float(np.log(prob))


# ----------------------------------------------------------------------
def SmoLoss(
    model: DeepCztModel,
) -> float:
    """Mean absolute deviation of the learned weights from the classical initialization."""

    return float(np.mean(np.abs(model.WeightDifference())))


# ----------------------------------------------------------------------
def CombinedLoss(
    model: DeepCztModel,
    pred: HrDistribution,
    target: HrDistribution,
    config: TrainConfig,
) -> float:
    if config.loss == DistributionLoss.Emd:
        distribution_loss = EmdLoss(pred, target)
    elif config.loss == DistributionLoss.CrossEntropy:
        _VerifySameGrid(pred, target)
        distribution_loss = CrossEntropyLoss(pred, target.ArgMax(), floor=PROBABILITY_FLOOR)
    else:
        assert False, config.loss  # pragma: no cover

    return config.alpha * distribution_loss + config.beta * SmoLoss(model)


# ----------------------------------------------------------------------
def Backward(
    model: DeepCztModel,
    window: SignalWindow,
    target: HrDistribution,
    config: TrainConfig,
) -> NDArray[np.float64]:
    """Returns the gradient of `CombinedLoss` with respect to w_tilde (M x 2N)."""

    model.ValidateWindow(window)

    _, gradient = BatchBackward(
        model,
        window.samples[np.newaxis, :],
        target.probs[np.newaxis, :],
        config,
    )

    return gradient


# ----------------------------------------------------------------------
def BatchBackward(
    model: DeepCztModel,
    samples: NDArray[np.float64],
    target_probs: NDArray[np.float64],
    config: TrainConfig,
) -> tuple[float, NDArray[np.float64]]:
    """\
    Returns the combined loss averaged over a (B, N) batch and its gradient with respect to
    w_tilde. Subgradients of the modulus and of the absolute deviation are 0 at 0.
    """

    gradient = np.zeros_like(model.w_tilde)
    distribution_loss = 0.0

    if config.alpha > 0:
        forward = model.ForwardBatch(samples)
        probs = forward.probs

        if target_probs.shape != probs.shape:
            raise DeepCztException(
                "The targets have the shape {} but the predictions have {}.".format(
                    target_probs.shape,
                    probs.shape,
                ),
            )

        batch_size, num_bins = probs.shape

        if config.loss == DistributionLoss.Emd:
            cdf_diff = np.cumsum(probs, axis=1) - np.cumsum(target_probs, axis=1)
            distribution_loss = float(np.mean(np.mean(cdf_diff**2, axis=1)))

            grad_cdf = (2.0 / (num_bins * batch_size)) * cdf_diff
            grad_probs = np.cumsum(grad_cdf[:, ::-1], axis=1)[:, ::-1]

            grad_modulus = probs * (grad_probs - np.sum(grad_probs * probs, axis=1, keepdims=True))

        elif config.loss == DistributionLoss.CrossEntropy:
            rows = np.arange(batch_size)
            target_bins = np.argmax(target_probs, axis=1)
            target_values = probs[rows, target_bins]

            distribution_loss = float(np.mean(-np.log(np.maximum(target_values, PROBABILITY_FLOOR))))

            grad_modulus = probs.copy()
            grad_modulus[rows, target_bins] -= 1.0
            grad_modulus /= batch_size

            # The floored loss is constant
            grad_modulus[target_values < PROBABILITY_FLOOR] = 0.0

        else:
            assert False, config.loss  # pragma: no cover

        inv_modulus = np.divide(
            1.0,
            forward.modulus,
            out=np.zeros_like(forward.modulus),
            where=forward.modulus > 0,
        )

        grad_x_re = grad_modulus * forward.x_re * inv_modulus
        grad_x_im = grad_modulus * forward.x_im * inv_modulus

        n_input = model.n_input

        gradient[:, :n_input] = grad_x_re.T @ forward.ax_re + grad_x_im.T @ forward.ax_im
        gradient[:, n_input:] = grad_x_im.T @ forward.ax_re - grad_x_re.T @ forward.ax_im

        gradient *= config.alpha

    deviation = model.WeightDifference()

    smo = float(np.mean(np.abs(deviation)))
    gradient += (config.beta / deviation.size) * np.sign(deviation)

    if not np.all(np.isfinite(gradient)):
        raise ModelDivergedException("The gradient contains non-finite values.")

    return config.alpha * distribution_loss + config.beta * smo, gradient


# ----------------------------------------------------------------------
# |
# |  Private Functions
# |
# ----------------------------------------------------------------------
def _VerifySameGrid(
    pred: HrDistribution,
    target: HrDistribution,
) -> None:
    if not pred.IsSameGrid(target):
        raise DeepCztException(
            "The distributions are defined on different frequency grids ({} and {} bins).".format(
                pred.num_bins,
                target.num_bins,
            ),
        )
