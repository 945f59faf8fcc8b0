# ----------------------------------------------------------------------
# |
# |  Model.py
# |
# |  David Brownell <db@DavidBrownell.com>
# |      2024-03-05 08:12:44
# |
# ----------------------------------------------------------------------
# |
# |  Copyright David Brownell 2024
# |  Distributed under the MIT License.
# |
# ----------------------------------------------------------------------
"""\
Trainable Chirp-Z Transform estimator.

The start-point diagonal A is fixed; the Vandermonde blocks W_re and W_im are learned once and
replicated into the real block matrix

    [[W_re, -W_im],
     [W_im,  W_re]]

so that every weight appears twice in the forward pass but is stored a single time.
"""

import math

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from dbrownell_Common.Streams.DoneManager import DoneManager, DoneManagerException
from numpy.typing import NDArray
from scipy import special as sp_special

from CztHeartRate.Czt import BlockProduct, CztPlan, SignalWindow
from CztHeartRate.HeartRate import HrEstimate, Method


# ----------------------------------------------------------------------
# |
# |  Public Types
# |
# ----------------------------------------------------------------------
CLAMP_BOUNDS: tuple[float, float] = (-1.0, 1.0)
DISTRIBUTION_TOLERANCE: float = 1e-9


# ----------------------------------------------------------------------
class DeepCztException(DoneManagerException):
    """Exception raised by the trainable estimator."""

    pass  # pylint: disable=unnecessary-pass


# ----------------------------------------------------------------------
class ModelDivergedException(DeepCztException):
    """Exception raised when the model produces non-finite values."""

    pass  # pylint: disable=unnecessary-pass


# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class HrDistribution:
    """Probability mass over the frequency bins of a plan."""

    # ----------------------------------------------------------------------
    probs: NDArray[np.float64]
    freqs_hz: NDArray[np.float64]

    # ----------------------------------------------------------------------
    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64)
        freqs_hz = np.array(self.freqs_hz, dtype=np.float64)

        if probs.ndim != 1 or probs.shape != freqs_hz.shape:
            raise DeepCztException(
                "Probabilities {} and frequencies {} must be vectors of the same shape.".format(
                    probs.shape,
                    freqs_hz.shape,
                ),
            )

        if not np.all(np.isfinite(probs)):
            raise ModelDivergedException("The distribution contains non-finite probabilities.")

        if np.any(probs < 0):
            raise DeepCztException("Probabilities must not be negative.")

        total = float(np.sum(probs))
        if abs(total - 1.0) > DISTRIBUTION_TOLERANCE:
            raise DeepCztException("Probabilities must sum to 1 ({}).".format(total))

        probs.setflags(write=False)
        freqs_hz.setflags(write=False)

        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "freqs_hz", freqs_hz)

    # ----------------------------------------------------------------------
    @property
    def num_bins(self) -> int:
        return self.probs.shape[0]

    # ----------------------------------------------------------------------
    def ArgMax(self) -> int:
        return int(np.argmax(self.probs))

    # ----------------------------------------------------------------------
    def IsSameGrid(
        self,
        other: "HrDistribution",
    ) -> bool:
        return self.freqs_hz.shape == other.freqs_hz.shape and bool(
            np.allclose(self.freqs_hz, other.freqs_hz, rtol=1e-12, atol=0.0)
        )


# ----------------------------------------------------------------------
class ForwardResult(NamedTuple):
    """Intermediate values of a batched forward pass, retained for the backward pass."""

    ax_re: NDArray[np.float64]  # (B, N)
    ax_im: NDArray[np.float64]  # (B, N)
    x_re: NDArray[np.float64]  # (B, M)
    x_im: NDArray[np.float64]  # (B, M)
    modulus: NDArray[np.float64]  # (B, M)
    probs: NDArray[np.float64]  # (B, M)


# ----------------------------------------------------------------------
class DeepCztModel:
    """Chirp-Z Transform with learnable, tied Vandermonde blocks followed by modulus and softmax."""

    # ----------------------------------------------------------------------
    @classmethod
    def Create(
        cls,
        plan: CztPlan,
    ) -> "DeepCztModel":
        """Initializes the learnable weights to the classical transform of `plan`."""

        w_tilde_init = np.hstack([plan.w_re, plan.w_im])
        return cls(plan, w_tilde_init.copy(), w_tilde_init)

    # ----------------------------------------------------------------------
    def __init__(
        self,
        plan: CztPlan,
        w_tilde: NDArray[np.float64],
        w_tilde_init: NDArray[np.float64],
    ):
        expected_shape = (plan.m_bins, 2 * plan.n_input)

        w_tilde = np.array(w_tilde, dtype=np.float64)
        w_tilde_init = np.array(w_tilde_init, dtype=np.float64)

        for name, value in [("w_tilde", w_tilde), ("w_tilde_init", w_tilde_init)]:
            if value.shape != expected_shape:
                raise DeepCztException(
                    "'{}' has the shape {} but the plan requires {}.".format(name, value.shape, expected_shape)
                )

        if not np.all(np.isfinite(w_tilde)):
            raise ModelDivergedException("The model weights contain non-finite values.")

        w_tilde_init.setflags(write=False)

        self.plan = plan
        self.w_tilde = w_tilde
        self.w_tilde_init = w_tilde_init

    # ----------------------------------------------------------------------
    @property
    def m_bins(self) -> int:
        return self.plan.m_bins

    @property
    def n_input(self) -> int:
        return self.plan.n_input

    @property
    def w_re(self) -> NDArray[np.float64]:
        return self.w_tilde[:, : self.plan.n_input]

    @property
    def w_im(self) -> NDArray[np.float64]:
        return self.w_tilde[:, self.plan.n_input :]

    # ----------------------------------------------------------------------
    def Clone(self) -> "DeepCztModel":
        return DeepCztModel(self.plan, self.w_tilde.copy(), self.w_tilde_init)

    # ----------------------------------------------------------------------
    def Clamp(self) -> None:
        """Projects the weights onto the activation bounds (HardTanh)."""

        np.clip(self.w_tilde, CLAMP_BOUNDS[0], CLAMP_BOUNDS[1], out=self.w_tilde)

    # ----------------------------------------------------------------------
    def EffectiveMatrix(self) -> NDArray[np.float64]:
        """Returns the 2M x 2N real block matrix applied to [Ax_re; Ax_im]."""

        return np.block([[self.w_re, -self.w_im], [self.w_im, self.w_re]])

    # ----------------------------------------------------------------------
    def WeightDifference(self) -> NDArray[np.float64]:
        return self.w_tilde - self.w_tilde_init

    # ----------------------------------------------------------------------
    def Forward(
        self,
        window: SignalWindow,
    ) -> HrDistribution:
        self.ValidateWindow(window)

        result = self.ForwardBatch(window.samples[np.newaxis, :])
        return HrDistribution(result.probs[0], self.plan.freqs_hz)

    # ----------------------------------------------------------------------
    def ForwardBatch(
        self,
        samples: NDArray[np.float64],
    ) -> ForwardResult:
        """Runs the forward pass on a (B, N) batch; every row is mean-centered first."""

        if samples.ndim != 2 or samples.shape[1] != self.plan.n_input:
            raise DeepCztException(
                "The batch has the shape {} but the model requires (B, {}).".format(
                    samples.shape,
                    self.plan.n_input,
                ),
            )

        centered = samples - samples.mean(axis=1, keepdims=True)

        ax_re, ax_im = self.plan.ApplyStartPoint(centered)
        x_re, x_im = BlockProduct(self.w_re, self.w_im, ax_re, ax_im)

        modulus = np.hypot(x_re, x_im)

        if not np.all(np.isfinite(modulus)):
            raise ModelDivergedException(
                "The forward pass produced non-finite moduli (max |w_tilde| = {}).".format(
                    float(np.nanmax(np.abs(self.w_tilde))),
                ),
            )

        probs = sp_special.softmax(modulus, axis=1)

        return ForwardResult(ax_re, ax_im, x_re, x_im, modulus, probs)

    # ----------------------------------------------------------------------
    def Decode(
        self,
        distribution: HrDistribution,
    ) -> HrEstimate:
        """Converts the most probable bin into a heart rate; confidence is its probability."""

        index = distribution.ArgMax()

        return HrEstimate(
            60.0 * float(distribution.freqs_hz[index]),
            Method.DeepCzt,
            min(float(distribution.probs[index]), 1.0),
        )

    # ----------------------------------------------------------------------
    def Estimate(
        self,
        window: SignalWindow,
    ) -> HrEstimate:
        return self.Decode(self.Forward(window))

    # ----------------------------------------------------------------------
    def ValidateWindow(
        self,
        window: SignalWindow,
    ) -> None:
        if window.num_samples != self.plan.n_input:
            raise DeepCztException(
                "The window has {} samples but the model expects {}.".format(
                    window.num_samples,
                    self.plan.n_input,
                ),
            )

        if not math.isclose(window.sample_rate_hz, self.plan.sample_rate_hz, rel_tol=1e-12):
            raise DeepCztException(
                "The window is sampled at {} Hz but the model expects {} Hz.".format(
                    window.sample_rate_hz,
                    self.plan.sample_rate_hz,
                ),
            )


# ----------------------------------------------------------------------
# |
# |  Public Functions
# |
# ----------------------------------------------------------------------
def TargetDistribution(
    hr_bpm: float,
    plan: CztPlan,
    smoothing_bpm: float = 0.0,
    *,
    dm: Optional[DoneManager] = None,
) -> HrDistribution:
    """\
    Builds the reference distribution for a heart rate: one-hot at the nearest bin when
    `smoothing_bpm` is 0, otherwise a discretized Gaussian with that standard deviation.

    Heart rates outside of the plan's band are clamped to the nearest edge.
    """

    if smoothing_bpm < 0:
        raise DeepCztException("The target smoothing must not be negative ({}).".format(smoothing_bpm))

    freqs_bpm = plan.freqs_hz * 60.0
    low_bpm = float(freqs_bpm[0])
    high_bpm = float(freqs_bpm[-1])

    if not low_bpm <= hr_bpm <= high_bpm:
        clamped_bpm = min(max(hr_bpm, low_bpm), high_bpm)

        if dm is not None:
            dm.WriteWarning(
                "The heart rate {:.4g} BPM is outside of [{:.4g}, {:.4g}] BPM; {:.4g} BPM will be used.\n".format(
                    hr_bpm,
                    low_bpm,
                    high_bpm,
                    clamped_bpm,
                ),
            )

        hr_bpm = clamped_bpm

    if smoothing_bpm == 0:
        probs = np.zeros(plan.m_bins)
        probs[plan.NearestBin(hr_bpm / 60.0)] = 1.0
    else:
        probs = np.exp(-0.5 * ((freqs_bpm - hr_bpm) / smoothing_bpm) ** 2)

        total = float(np.sum(probs))
        if total == 0.0:
            # The Gaussian underflows everywhere when it is much narrower than a bin
            probs = np.zeros(plan.m_bins)
            probs[plan.NearestBin(hr_bpm / 60.0)] = 1.0
        else:
            probs /= total

    return HrDistribution(probs, plan.freqs_hz)
