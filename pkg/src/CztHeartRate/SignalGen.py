# ----------------------------------------------------------------------
# |
# |  SignalGen.py
# |
# |  David Brownell <db@DavidBrownell.com>
# |      2024-03-04 10:22:37
# |
# ----------------------------------------------------------------------
# |
# |  Copyright David Brownell 2024
# |  Distributed under the MIT License.
# |
# ----------------------------------------------------------------------
"""Synthetic PPG-like signals and labeled datasets with known heart rates"""

import math

from dataclasses import dataclass, field
from enum import auto, Enum
from typing import Optional, Sequence, Union

import numpy as np

from dbrownell_Common.InflectEx import inflect
from dbrownell_Common.Streams.DoneManager import DoneManager, DoneManagerException
from numpy.typing import NDArray
from scipy import integrate as sp_integrate

from CztHeartRate.Czt import DEFAULT_SAMPLE_RATE_HZ, SignalWindow


# ----------------------------------------------------------------------
# |
# |  Public Types
# |
# ----------------------------------------------------------------------
MIN_HR_BPM: float = 40.0
MAX_HR_BPM: float = 180.0
MIN_NUM_SAMPLES: int = 64
MAX_WANDER_FREQ_HZ: float = 0.2

DEFAULT_HARMONICS: tuple[tuple[int, float], ...] = ((2, 0.35),)


# ----------------------------------------------------------------------
class SignalGenException(DoneManagerException):
    """Exception raised when a synthetic signal cannot be generated."""

    pass  # pylint: disable=unnecessary-pass


# ----------------------------------------------------------------------
@dataclass(frozen=True)
class ConstantProfile:
    """Heart rate that does not change over time."""

    bpm: float

    # ----------------------------------------------------------------------
    def Evaluate(
        self,
        times_s: NDArray[np.float64],
        duration_s: float,  # pylint: disable=unused-argument
    ) -> NDArray[np.float64]:
        return np.full(times_s.shape, float(self.bpm))

    # ----------------------------------------------------------------------
    def ToText(self) -> str:
        return "constant:{:g}".format(self.bpm)


# ----------------------------------------------------------------------
@dataclass(frozen=True)
class RampProfile:
    """Heart rate that changes linearly from `bpm_start` at the first sample to `bpm_end` at the last."""

    bpm_start: float
    bpm_end: float

    # ----------------------------------------------------------------------
    def Evaluate(
        self,
        times_s: NDArray[np.float64],
        duration_s: float,
    ) -> NDArray[np.float64]:
        return self.bpm_start + (self.bpm_end - self.bpm_start) * (times_s / duration_s)

    # ----------------------------------------------------------------------
    def ToText(self) -> str:
        return "ramp:{:g}:{:g}".format(self.bpm_start, self.bpm_end)


# ----------------------------------------------------------------------
@dataclass(frozen=True)
class PiecewiseProfile:
    """Heart rate interpolated linearly between (time_s, bpm) breakpoints; held constant beyond the ends."""

    breakpoints: tuple[tuple[float, float], ...]

    # ----------------------------------------------------------------------
    def __post_init__(self):
        breakpoints = tuple((float(t), float(bpm)) for t, bpm in self.breakpoints)

        if not breakpoints:
            raise SignalGenException("invalid profile: a piecewise profile requires at least one breakpoint")

        if any(later[0] <= earlier[0] for earlier, later in zip(breakpoints, breakpoints[1:])):
            raise SignalGenException("invalid profile: breakpoint times must be strictly increasing")

        object.__setattr__(self, "breakpoints", breakpoints)

    # ----------------------------------------------------------------------
    def Evaluate(
        self,
        times_s: NDArray[np.float64],
        duration_s: float,  # pylint: disable=unused-argument
    ) -> NDArray[np.float64]:
        return np.interp(
            times_s,
            [t for t, _ in self.breakpoints],
            [bpm for _, bpm in self.breakpoints],
        )

    # ----------------------------------------------------------------------
    def ToText(self) -> str:
        return "piecewise:{}".format(",".join("{:g}={:g}".format(t, bpm) for t, bpm in self.breakpoints))


# ----------------------------------------------------------------------
HrProfile = Union[ConstantProfile, RampProfile, PiecewiseProfile]


# ----------------------------------------------------------------------
@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a single synthetic PPG-like signal."""

    # ----------------------------------------------------------------------
    hr_profile: HrProfile
    duration_s: float
    sample_rate_hz: float = field(default=DEFAULT_SAMPLE_RATE_HZ)

    harmonics: tuple[tuple[int, float], ...] = field(kw_only=True, default=DEFAULT_HARMONICS)
    noise_snr_db: Optional[float] = field(kw_only=True, default=None)
    baseline_wander: Optional[tuple[float, float]] = field(kw_only=True, default=None)
    phase_cycles: float = field(kw_only=True, default=0.0)
    seed: int = field(kw_only=True, default=0)

    # ----------------------------------------------------------------------
    @classmethod
    def Create(
        cls,
        hr_profile: HrProfile,
        num_samples: int,
        sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
        **kwargs,
    ) -> "SynthSpec":
        """Creates a spec that produces exactly `num_samples` samples."""

        return cls(hr_profile, num_samples / sample_rate_hz, sample_rate_hz, **kwargs)

    # ----------------------------------------------------------------------
    def __post_init__(self):
        if not self.sample_rate_hz > 0:
            raise SignalGenException("The sample rate must be positive ({}).".format(self.sample_rate_hz))

        if self.num_samples < MIN_NUM_SAMPLES:
            raise SignalGenException(
                "The signal must contain at least {} samples ({} s at {} Hz yields {}).".format(
                    MIN_NUM_SAMPLES,
                    self.duration_s,
                    self.sample_rate_hz,
                    self.num_samples,
                ),
            )

        harmonics = tuple((int(order), float(amplitude)) for order, amplitude in self.harmonics)

        for order, amplitude in harmonics:
            if order < 2:
                raise SignalGenException("Harmonic orders must be 2 or greater ({}).".format(order))
            if amplitude < 0:
                raise SignalGenException("Harmonic amplitudes must not be negative ({}).".format(amplitude))

        object.__setattr__(self, "harmonics", harmonics)

        if self.baseline_wander is not None:
            wander_freq_hz, wander_amplitude = self.baseline_wander

            if not 0 < wander_freq_hz < MAX_WANDER_FREQ_HZ:
                raise SignalGenException(
                    "The baseline wander frequency must be within (0, {}) Hz ({}).".format(
                        MAX_WANDER_FREQ_HZ,
                        wander_freq_hz,
                    ),
                )
            if wander_amplitude < 0:
                raise SignalGenException(
                    "The baseline wander amplitude must not be negative ({}).".format(wander_amplitude)
                )

        if self.noise_snr_db is not None and not math.isfinite(self.noise_snr_db):
            raise SignalGenException("The noise SNR must be finite ({}).".format(self.noise_snr_db))

        hr_bpm = InstantaneousHr(self)

        if hr_bpm.min() < MIN_HR_BPM or hr_bpm.max() > MAX_HR_BPM:
            raise SignalGenException(
                "invalid profile: '{}' leaves [{:g}, {:g}] BPM (range {:.4g} to {:.4g}).".format(
                    self.hr_profile.ToText(),
                    MIN_HR_BPM,
                    MAX_HR_BPM,
                    hr_bpm.min(),
                    hr_bpm.max(),
                ),
            )

    # ----------------------------------------------------------------------
    @property
    def num_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate_hz))

    # ----------------------------------------------------------------------
    @property
    def times_s(self) -> NDArray[np.float64]:
        return np.arange(self.num_samples, dtype=np.float64) / self.sample_rate_hz


# ----------------------------------------------------------------------
class SensorKind(Enum):
    Identity = auto()
    Affine = auto()
    QuantizeToInt = auto()


# ----------------------------------------------------------------------
@dataclass(frozen=True)
class SensorModel:
    """\
    Maps the true mean heart rate of a window to the label a reference sensor would report.

    A non-identity model creates a systematic signal-to-label gap that a trainable estimator can
    learn while a fixed transform cannot.
    """

    kind: SensorKind = SensorKind.Identity
    gain: float = 1.0
    offset_bpm: float = 0.0

    # ----------------------------------------------------------------------
    @classmethod
    def Identity(cls) -> "SensorModel":
        return cls()

    # ----------------------------------------------------------------------
    @classmethod
    def Affine(
        cls,
        gain: float = 1.0,
        offset_bpm: float = 0.0,
    ) -> "SensorModel":
        return cls(SensorKind.Affine, gain, offset_bpm)

    # ----------------------------------------------------------------------
    @classmethod
    def QuantizeToInt(cls) -> "SensorModel":
        return cls(SensorKind.QuantizeToInt)

    # ----------------------------------------------------------------------
    def Apply(
        self,
        true_bpm: float,
    ) -> float:
        if self.kind == SensorKind.Identity:
            return float(true_bpm)
        if self.kind == SensorKind.Affine:
            return self.gain * float(true_bpm) + self.offset_bpm
        if self.kind == SensorKind.QuantizeToInt:
            return float(math.floor(true_bpm + 0.5))

        assert False, self.kind  # pragma: no cover


# ----------------------------------------------------------------------
@dataclass(frozen=True)
class LabeledWindow:
    """A signal window and the reference heart rate associated with it."""

    window: SignalWindow
    hr_gt_bpm: float
    source_tag: str = field(default="")

    # ----------------------------------------------------------------------
    def __post_init__(self):
        # Sensor labels are accepted outside of the synthesis range; they must only be usable.
        if not (math.isfinite(self.hr_gt_bpm) and self.hr_gt_bpm > 0):
            raise SignalGenException("The reference heart rate must be positive ({}).".format(self.hr_gt_bpm))


# ----------------------------------------------------------------------
@dataclass(frozen=True)
class SynthFamily:
    """\
    Describes a population of constant-HR signals; heart rates and phases are drawn uniformly
    with a generator seeded by `seed`.
    """

    hr_range_bpm: tuple[float, float] = (MIN_HR_BPM, MAX_HR_BPM)
    num_samples: int = 256
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ

    harmonics: tuple[tuple[int, float], ...] = field(kw_only=True, default=DEFAULT_HARMONICS)
    noise_snr_db: Optional[float] = field(kw_only=True, default=None)
    baseline_wander: Optional[tuple[float, float]] = field(kw_only=True, default=None)
    random_phase: bool = field(kw_only=True, default=True)
    seed: int = field(kw_only=True, default=0)

    # ----------------------------------------------------------------------
    def __post_init__(self):
        low, high = self.hr_range_bpm

        if not MIN_HR_BPM <= low <= high <= MAX_HR_BPM:
            raise SignalGenException(
                "The heart-rate range must be within [{:g}, {:g}] BPM ({}).".format(
                    MIN_HR_BPM,
                    MAX_HR_BPM,
                    self.hr_range_bpm,
                ),
            )

    # ----------------------------------------------------------------------
    def GenerateSpecs(
        self,
        count: int,
    ) -> list[SynthSpec]:
        rng = np.random.default_rng(self.seed)

        hr_values = rng.uniform(self.hr_range_bpm[0], self.hr_range_bpm[1], count)
        phases = rng.uniform(0.0, 1.0, count) if self.random_phase else np.zeros(count)

        return [
            SynthSpec.Create(
                ConstantProfile(float(hr_bpm)),
                self.num_samples,
                self.sample_rate_hz,
                harmonics=self.harmonics,
                noise_snr_db=self.noise_snr_db,
                baseline_wander=self.baseline_wander,
                phase_cycles=float(phase),
                seed=self.seed + index + 1,
            )
            for index, (hr_bpm, phase) in enumerate(zip(hr_values, phases))
        ]


# ----------------------------------------------------------------------
# |
# |  Public Functions
# |
# ----------------------------------------------------------------------
def ParseProfile(
    text: str,
) -> HrProfile:
    """\
    Parses a profile from its textual form:

        constant:72
        ramp:60:90
        piecewise:0=60,30=80,60=70
    """

    kind, _, remainder = text.strip().partition(":")

    try:
        if kind == "constant":
            return ConstantProfile(float(remainder))

        if kind == "ramp":
            start, end = remainder.split(":")
            return RampProfile(float(start), float(end))

        if kind == "piecewise":
            breakpoints: list[tuple[float, float]] = []

            for item in remainder.split(","):
                time_s, bpm = item.split("=")
                breakpoints.append((float(time_s), float(bpm)))

            return PiecewiseProfile(tuple(breakpoints))

    except ValueError as ex:
        raise SignalGenException("invalid profile: '{}' ({}).".format(text, ex)) from ex

    raise SignalGenException(
        "invalid profile: '{}' (expected 'constant:<bpm>', 'ramp:<bpm>:<bpm>', or 'piecewise:<t>=<bpm>,...').".format(
            text,
        ),
    )


# ----------------------------------------------------------------------
def InstantaneousHr(
    spec: SynthSpec,
) -> NDArray[np.float64]:
    """Returns the heart rate in BPM at every sample of the signal produced by `spec`."""

    return spec.hr_profile.Evaluate(spec.times_s, _RampDuration(spec))


# ----------------------------------------------------------------------
def SynthSignal(
    spec: SynthSpec,
) -> SignalWindow:
    """\
    Generates sum_h a_h * cos(2 pi h phi(t)) + wander + noise, where phi(t) is the integral of the
    instantaneous heart-rate frequency and the fundamental has unit amplitude.
    """

    times_s = spec.times_s
    phase_cycles = _PhaseCycles(spec) + spec.phase_cycles

    clean = np.cos(2.0 * np.pi * phase_cycles)

    for order, amplitude in spec.harmonics:
        clean += amplitude * np.cos(2.0 * np.pi * order * phase_cycles)

    if spec.baseline_wander is not None:
        wander_freq_hz, wander_amplitude = spec.baseline_wander
        clean += wander_amplitude * np.sin(2.0 * np.pi * wander_freq_hz * times_s)

    if spec.noise_snr_db is not None:
        rng = np.random.default_rng(spec.seed)

        signal_power = float(np.mean(clean**2))
        noise_std = math.sqrt(signal_power / (10.0 ** (spec.noise_snr_db / 10.0)))

        clean = clean + rng.normal(0.0, noise_std, clean.shape[0])

    return SignalWindow(clean, spec.sample_rate_hz)


# ----------------------------------------------------------------------
def SynthDataset(
    specs: Union[SynthFamily, Sequence[SynthSpec]],
    count: int,
    sensor_model: SensorModel = SensorModel(),
    *,
    dm: Optional[DoneManager] = None,
) -> list[LabeledWindow]:
    """\
    Generates `count` labeled windows; labels are the sensor model applied to each window's true
    mean heart rate. Explicit spec sequences are cycled when `count` exceeds their length.
    """

    if count < 1:
        raise SignalGenException("The dataset must contain at least 1 window ({}).".format(count))

    if isinstance(specs, SynthFamily):
        spec_list = specs.GenerateSpecs(count)
    else:
        if not specs:
            raise SignalGenException("At least one spec is required.")

        spec_list = [specs[index % len(specs)] for index in range(count)]

    results: list[LabeledWindow] = []

    for spec in spec_list:
        true_bpm = float(np.mean(InstantaneousHr(spec)))

        results.append(
            LabeledWindow(
                SynthSignal(spec),
                sensor_model.Apply(true_bpm),
                "synth:{}:seed={}".format(spec.hr_profile.ToText(), spec.seed),
            ),
        )

    if dm is not None:
        dm.WriteVerbose(
            "Generated {} ({} sensor).\n".format(
                inflect.no("synthetic window", len(results)),
                sensor_model.kind.name,
            ),
        )

    return results


# ----------------------------------------------------------------------
def SynthTones(
    hr_bpm_values: Sequence[float],
    num_samples: int = 256,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
) -> list[LabeledWindow]:
    """Returns pure, noiseless, zero-phase cosines at each heart rate."""

    return SynthDataset(
        [
            SynthSpec.Create(ConstantProfile(hr_bpm), num_samples, sample_rate_hz, harmonics=())
            for hr_bpm in hr_bpm_values
        ],
        len(hr_bpm_values),
    )


# ----------------------------------------------------------------------
# |
# |  Private Functions
# |
# ----------------------------------------------------------------------
def _RampDuration(
    spec: SynthSpec,
) -> float:
    # Ramps reach their final value on the last sample
    return (spec.num_samples - 1) / spec.sample_rate_hz


# ----------------------------------------------------------------------
def _PhaseCycles(
    spec: SynthSpec,
) -> NDArray[np.float64]:
    times_s = spec.times_s
    profile = spec.hr_profile

    if isinstance(profile, ConstantProfile):
        return profile.bpm / 60.0 * times_s

    if isinstance(profile, RampProfile):
        duration_s = _RampDuration(spec)

        return (
            profile.bpm_start * times_s + (profile.bpm_end - profile.bpm_start) * times_s**2 / (2.0 * duration_s)
        ) / 60.0

    return sp_integrate.cumulative_trapezoid(InstantaneousHr(spec) / 60.0, times_s, initial=0.0)
