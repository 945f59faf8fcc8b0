# ----------------------------------------------------------------------
# |
# |  HeartRate.py
# |
# |  David Brownell <db@DavidBrownell.com>
# |      2024-03-03 14:05:52
# |
# ----------------------------------------------------------------------
# |
# |  Copyright David Brownell 2024
# |  Distributed under the MIT License.
# |
# ----------------------------------------------------------------------
"""Heart-rate estimation from a signal window: peak detection, FFT argmax, and CZT argmax."""

import math

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Optional, Protocol, Sequence

import numpy as np

from dbrownell_Common.InflectEx import inflect
from dbrownell_Common.Streams.DoneManager import DoneManager, DoneManagerException
from numpy.typing import NDArray
from scipy import signal as sp_signal

from CztHeartRate.Czt import (
    CztException,
    CztMatrix,
    CztPlan,
    DEFAULT_BAND_HZ,
    FftPeriodogram,
    SignalWindow,
    Spectrum,
)


# ----------------------------------------------------------------------
# |
# |  Public Types
# |
# ----------------------------------------------------------------------
class HeartRateException(DoneManagerException):
    """Exception raised when a heart rate cannot be estimated from a window."""

    pass  # pylint: disable=unnecessary-pass


# ----------------------------------------------------------------------
class Method(str, Enum):
    """Heart-rate estimation method; values are the names used on the command line."""

    PeakIbi = "peak"
    FftArgmax = "fft"
    CztArgmax = "czt"
    DeepCzt = "deep"


# ----------------------------------------------------------------------
@dataclass(frozen=True)
class HrEstimate:
    """A heart rate in beats per minute produced by one of the estimation methods."""

    # ----------------------------------------------------------------------
    bpm: float
    method: Method
    confidence: Optional[float] = field(default=None)

    # ----------------------------------------------------------------------
    def __post_init__(self):
        if not (math.isfinite(self.bpm) and self.bpm > 0):
            raise HeartRateException("The heart rate must be positive ({}).".format(self.bpm))

        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise HeartRateException("The confidence must be within [0, 1] ({}).".format(self.confidence))


# ----------------------------------------------------------------------
@dataclass(frozen=True)
class PeakDetectorConfig:
    """\
    Settings for the prominence-gated local-maxima detector.

    Peaks must be separated by the refractory period implied by `max_hr_bpm` and rise at least
    `prominence_fraction` of the window's interdecile range above their surroundings.
    """

    min_hr_bpm: float = 40.0
    max_hr_bpm: float = 180.0
    prominence_fraction: float = 0.3

    # ----------------------------------------------------------------------
    def __post_init__(self):
        if not 0 < self.min_hr_bpm < self.max_hr_bpm:
            raise HeartRateException(
                "The heart-rate limits must satisfy 0 < min ({}) < max ({}).".format(
                    self.min_hr_bpm,
                    self.max_hr_bpm,
                ),
            )

        if self.prominence_fraction < 0:
            raise HeartRateException(
                "The prominence fraction must not be negative ({}).".format(self.prominence_fraction)
            )


# ----------------------------------------------------------------------
class DistributionModel(Protocol):
    """Minimal interface of a trainable estimator that turns a window into an HrEstimate."""

    plan: CztPlan

    def Estimate(
        self,
        window: SignalWindow,
    ) -> HrEstimate: ...  # pragma: no cover


# ----------------------------------------------------------------------
@dataclass(frozen=True)
class SweepRow:
    """A single estimate (or the reason it was skipped) produced while sweeping window sizes."""

    size: int
    chunk_index: Optional[int]  # None when the size exceeds the signal length
    method: Method
    estimate: Optional[HrEstimate]
    gt_bpm: Optional[float] = field(default=None)
    skip_reason: Optional[str] = field(default=None)

    # ----------------------------------------------------------------------
    @property
    def is_skipped(self) -> bool:
        return self.estimate is None


# ----------------------------------------------------------------------
@dataclass(frozen=True)
class SweepSummary:
    """Aggregate error for one window size and method."""

    size: int
    method: Method
    mae_bpm: Optional[float]
    num_estimates: int
    num_skipped: int


# ----------------------------------------------------------------------
# |
# |  Public Functions
# |
# ----------------------------------------------------------------------
def HrFromSpectrum(
    spectrum: Spectrum,
    method: Method = Method.CztArgmax,
) -> HrEstimate:
    """\
    Returns 60 times the frequency with the maximal power response.

    Ties resolve to the lowest frequency; the confidence is the fraction of the spectral energy
    held by the winning bin.
    """

    total = float(np.sum(spectrum.values))
    if total <= 0.0:
        raise HeartRateException("no spectral energy")

    index = spectrum.ArgMax()

    return HrEstimate(
        60.0 * float(spectrum.freqs_hz[index]),
        method,
        min(float(spectrum.values[index]) / total, 1.0),
    )


# ----------------------------------------------------------------------
def HrFromPeaks(
    window: SignalWindow,
    min_hr_bpm: float = PeakDetectorConfig.min_hr_bpm,
    max_hr_bpm: float = PeakDetectorConfig.max_hr_bpm,
    *,
    prominence_fraction: float = PeakDetectorConfig.prominence_fraction,
) -> HrEstimate:
    """\
    Detects pulse peaks and returns 60 / mean(inter-beat interval).

    The confidence is the fraction of inter-beat intervals that fall within the physiological
    range [60 / max_hr_bpm, 60 / min_hr_bpm] seconds.
    """

    config = PeakDetectorConfig(min_hr_bpm, max_hr_bpm, prominence_fraction)
    peaks = DetectPeaks(window, config)

    if peaks.shape[0] < 2:
        raise HeartRateException(
            "insufficient peaks: {} detected in {:.3g} s".format(
                inflect.no("peak", peaks.shape[0]),
                window.duration_s,
            ),
        )

    ibis_s = np.diff(peaks) / window.sample_rate_hz

    in_range = (ibis_s >= 60.0 / config.max_hr_bpm) & (ibis_s <= 60.0 / config.min_hr_bpm)

    return HrEstimate(
        60.0 / float(np.mean(ibis_s)),
        Method.PeakIbi,
        float(np.mean(in_range)),
    )


# ----------------------------------------------------------------------
def DetectPeaks(
    window: SignalWindow,
    config: PeakDetectorConfig = PeakDetectorConfig(),
) -> NDArray[np.intp]:
    """Returns the sample indices of the detected pulse peaks."""

    samples = window.samples

    distance = max(1, math.floor(window.sample_rate_hz * 60.0 / config.max_hr_bpm))

    p10, p90 = np.percentile(samples, [10.0, 90.0])
    prominence = config.prominence_fraction * float(p90 - p10)

    peaks, _ = sp_signal.find_peaks(
        samples,
        distance=distance,
        prominence=prominence if prominence > 0 else None,
    )

    return peaks


# ----------------------------------------------------------------------
def GetPlan(
    n_input: int,
    band: tuple[float, float],
    sample_rate_hz: float,
) -> CztPlan:
    """Returns a shared zoom plan with one bin per input sample."""

    return _GetPlanImpl(n_input, float(band[0]), float(band[1]), float(sample_rate_hz))


# ----------------------------------------------------------------------
def EstimateWindow(
    window: SignalWindow,
    method: Method,
    *,
    band: tuple[float, float] = DEFAULT_BAND_HZ,
    model: Optional[DistributionModel] = None,
    peak_config: Optional[PeakDetectorConfig] = None,
    zero_pad_to: Optional[int] = None,
) -> HrEstimate:
    """Estimates the heart rate of a single window with the requested method."""

    if method == Method.PeakIbi:
        peak_config = peak_config or PeakDetectorConfig()

        return HrFromPeaks(
            window,
            peak_config.min_hr_bpm,
            peak_config.max_hr_bpm,
            prominence_fraction=peak_config.prominence_fraction,
        )

    if method == Method.FftArgmax:
        return HrFromSpectrum(FftPeriodogram(window, band, zero_pad_to), Method.FftArgmax)

    if method == Method.CztArgmax:
        plan = GetPlan(window.num_samples, band, window.sample_rate_hz)
        return HrFromSpectrum(CztMatrix(plan, window), Method.CztArgmax)

    if method == Method.DeepCzt:
        if model is None:
            raise HeartRateException("A trained model is required for the '{}' method.".format(method.value))

        return model.Estimate(window)

    assert False, method  # pragma: no cover


# ----------------------------------------------------------------------
def SweepWindows(
    signal: SignalWindow,
    sizes: Sequence[int],
    methods: Sequence[Method],
    *,
    band: tuple[float, float] = DEFAULT_BAND_HZ,
    model: Optional[DistributionModel] = None,
    peak_config: Optional[PeakDetectorConfig] = None,
    gt_bpm: None | float | NDArray[np.float64] = None,
    dm: Optional[DoneManager] = None,
) -> list[SweepRow]:
    """\
    Estimates the heart rate of every full, non-overlapping chunk of `signal` for each window size
    and method; the tail remainder of each size is discarded.

    `gt_bpm` is either a constant heart rate or a per-sample series; when provided, each row is
    labeled with the mean ground truth over its span.
    """

    gt_series: Optional[NDArray[np.float64]] = None

    if gt_bpm is not None:
        gt_series = np.broadcast_to(np.asarray(gt_bpm, dtype=np.float64), (signal.num_samples,))

    rows: list[SweepRow] = []

    for size in sizes:
        if size > signal.num_samples:
            reason = "window size {} exceeds the signal length {}".format(size, signal.num_samples)

            if dm is not None:
                dm.WriteWarning("Skipping size {}: {}.".format(size, reason))

            rows += [SweepRow(size, None, method, None, skip_reason=reason) for method in methods]
            continue

        model_mismatch = None

        if model is not None and Method.DeepCzt in methods:
            model_mismatch = _ModelMismatch(model.plan, size, signal.sample_rate_hz)

            if model_mismatch is not None and dm is not None:
                dm.WriteWarning(
                    "Skipping '{}' at size {}: {}.".format(Method.DeepCzt.value, size, model_mismatch)
                )

        num_skipped = 0

        for chunk_index in range(signal.num_samples // size):
            begin = chunk_index * size
            end = begin + size

            chunk = SignalWindow(signal.samples[begin:end], signal.sample_rate_hz)
            chunk_gt = None if gt_series is None else float(np.mean(gt_series[begin:end]))

            for method in methods:
                if method == Method.DeepCzt and model_mismatch is not None:
                    num_skipped += 1
                    rows.append(SweepRow(size, chunk_index, method, None, chunk_gt, model_mismatch))
                    continue

                try:
                    estimate = EstimateWindow(
                        chunk,
                        method,
                        band=band,
                        model=model,
                        peak_config=peak_config,
                    )

                    rows.append(SweepRow(size, chunk_index, method, estimate, chunk_gt))

                except (HeartRateException, CztException) as ex:
                    num_skipped += 1
                    rows.append(SweepRow(size, chunk_index, method, None, chunk_gt, str(ex)))

        if num_skipped and dm is not None:
            dm.WriteVerbose(
                "Size {}: {} skipped.\n".format(size, inflect.no("estimate", num_skipped))
            )

    return rows


# ----------------------------------------------------------------------
def SummarizeSweep(
    rows: Sequence[SweepRow],
) -> list[SweepSummary]:
    """Produces the per-size, per-method MAE table; the order follows the first appearance in `rows`."""

    groups: dict[tuple[int, Method], list[SweepRow]] = {}

    for row in rows:
        groups.setdefault((row.size, row.method), []).append(row)

    results: list[SweepSummary] = []

    for (size, method), group in groups.items():
        errors = [
            abs(row.estimate.bpm - row.gt_bpm)
            for row in group
            if row.estimate is not None and row.gt_bpm is not None
        ]

        results.append(
            SweepSummary(
                size,
                method,
                float(np.mean(errors)) if errors else None,
                sum(1 for row in group if row.estimate is not None),
                sum(1 for row in group if row.estimate is None),
            ),
        )

    return results


# ----------------------------------------------------------------------
# |
# |  Private Functions
# |
# ----------------------------------------------------------------------
@lru_cache(maxsize=32)
def _GetPlanImpl(
    n_input: int,
    f_start_hz: float,
    f_end_hz: float,
    sample_rate_hz: float,
) -> CztPlan:
    return CztPlan.Create(n_input, n_input, f_start_hz, f_end_hz, sample_rate_hz)


# ----------------------------------------------------------------------
def _ModelMismatch(
    plan: CztPlan,
    size: int,
    sample_rate_hz: float,
) -> Optional[str]:
    if size != plan.n_input:
        return "the model expects {} samples".format(plan.n_input)

    if not math.isclose(sample_rate_hz, plan.sample_rate_hz, rel_tol=1e-12):
        return "the model expects {} Hz".format(plan.sample_rate_hz)

    return None
