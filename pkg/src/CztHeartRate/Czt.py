# ----------------------------------------------------------------------
# |
# |  Czt.py
# |
# |  David Brownell <db@DavidBrownell.com>
# |      2024-03-02 09:41:17
# |
# ----------------------------------------------------------------------
# |
# |  Copyright David Brownell 2024
# |  Distributed under the MIT License.
# |
# ----------------------------------------------------------------------
"""Chirp-Z Transform evaluation on a zoomed frequency band and the FFT periodogram baseline."""

import math

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from dbrownell_Common.Streams.DoneManager import DoneManagerException
from numpy.typing import NDArray
from scipy import fft as sp_fft
from scipy import signal as sp_signal


# ----------------------------------------------------------------------
# |
# |  Public Types
# |
# ----------------------------------------------------------------------
DEFAULT_BAND_HZ: tuple[float, float] = (0.66, 3.0)
DEFAULT_SAMPLE_RATE_HZ: float = 30.0

UNIT_CIRCLE_TOLERANCE: float = 1e-12


# ----------------------------------------------------------------------
class CztException(DoneManagerException):
    """Exception raised when a transform cannot be planned or evaluated."""

    pass  # pylint: disable=unnecessary-pass


# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class SignalWindow:
    """A fixed-length, uniformly sampled real-valued signal segment."""

    # ----------------------------------------------------------------------
    samples: NDArray[np.float64]
    sample_rate_hz: float

    # ----------------------------------------------------------------------
    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)

        if samples.ndim != 1:
            raise CztException("Signal samples must be one-dimensional ({} dimensions).".format(samples.ndim))
        if samples.shape[0] < 2:
            raise CztException("A signal window requires at least 2 samples ({}).".format(samples.shape[0]))
        if not np.all(np.isfinite(samples)):
            raise CztException(
                "Signal samples must be finite; sample {} is not.".format(
                    int(np.flatnonzero(~np.isfinite(samples))[0]),
                ),
            )
        if not self.sample_rate_hz > 0:
            raise CztException("The sample rate must be positive ({}).".format(self.sample_rate_hz))

        samples.setflags(write=False)

        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    # ----------------------------------------------------------------------
    @property
    def num_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return self.num_samples / self.sample_rate_hz

    @property
    def nyquist_hz(self) -> float:
        return self.sample_rate_hz / 2.0

    # ----------------------------------------------------------------------
    def Centered(self) -> NDArray[np.float64]:
        """Returns the samples with the window mean removed."""

        return self.samples - np.mean(self.samples)


# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class Spectrum:
    """Frequencies paired with nonnegative magnitudes (or probabilities) over an analysis band."""

    # ----------------------------------------------------------------------
    NORMALIZATION_TOLERANCE = 1e-9

    freqs_hz: NDArray[np.float64]
    values: NDArray[np.float64]
    normalized: bool = field(default=False)

    # ----------------------------------------------------------------------
    def __post_init__(self):
        freqs = np.array(self.freqs_hz, dtype=np.float64)
        values = np.array(self.values, dtype=np.float64)

        if freqs.ndim != 1 or freqs.shape != values.shape:
            raise CztException(
                "Spectrum frequencies and values must be vectors of the same length ({} vs. {}).".format(
                    freqs.shape,
                    values.shape,
                ),
            )
        if freqs.shape[0] == 0:
            raise CztException("A spectrum requires at least one bin.")
        if np.any(np.diff(freqs) <= 0):
            raise CztException("Spectrum frequencies must be strictly increasing.")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise CztException("Spectrum values must be finite and nonnegative.")
        if self.normalized and abs(float(np.sum(values)) - 1.0) > self.NORMALIZATION_TOLERANCE:
            raise CztException(
                "Normalized spectrum values must sum to 1 ({}).".format(float(np.sum(values)))
            )

        freqs.setflags(write=False)
        values.setflags(write=False)

        object.__setattr__(self, "freqs_hz", freqs)
        object.__setattr__(self, "values", values)

    # ----------------------------------------------------------------------
    @property
    def num_bins(self) -> int:
        return self.freqs_hz.shape[0]

    # ----------------------------------------------------------------------
    def ArgMax(self) -> int:
        """Index of the largest value; the lowest-frequency bin wins ties."""

        return int(np.argmax(self.values))

    # ----------------------------------------------------------------------
    def Normalized(self) -> "Spectrum":
        total = float(np.sum(self.values))
        if total <= 0.0:
            raise CztException("A spectrum without energy cannot be normalized.")

        return Spectrum(self.freqs_hz, self.values / total, normalized=True)


# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class CztPlan:
    """\
    Parameterization of a zoomed Chirp-Z Transform restricted to the unit circle.

    Bin k is evaluated at z_k = A * W^-k where A = exp(+i*2*pi*f_start/fs) and
    W = exp(-i*2*pi*df/fs), which places the bins at f_start + k * df with df chosen so that the
    last bin lands exactly on f_end.

    The plan materializes everything that does not depend on the input signal: the cos/-sin
    Vandermonde blocks used by the matrix form, the diagonal of A applied to a real signal, and the
    chirps used by the Bluestein evaluation. Plans are immutable and may be shared across threads.
    """

    # ----------------------------------------------------------------------
    n_input: int
    m_bins: int
    f_start_hz: float
    f_end_hz: float
    sample_rate_hz: float

    is_full_circle: bool = field(kw_only=True, default=False)

    a_point: complex = field(init=False)
    w_ratio: complex = field(init=False)

    freqs_hz: NDArray[np.float64] = field(init=False)

    w_re: NDArray[np.float64] = field(init=False)
    w_im: NDArray[np.float64] = field(init=False)
    a_re: NDArray[np.float64] = field(init=False)
    a_im: NDArray[np.float64] = field(init=False)

    _fast_len: int = field(init=False)
    _pre_chirp: NDArray[np.complex128] = field(init=False)
    _post_chirp: NDArray[np.complex128] = field(init=False)
    _chirp_filter_fft: NDArray[np.complex128] = field(init=False)

    # ----------------------------------------------------------------------
    @classmethod
    def Create(
        cls,
        n_input: int,
        m_bins: Optional[int] = None,
        f_start_hz: float = DEFAULT_BAND_HZ[0],
        f_end_hz: float = DEFAULT_BAND_HZ[1],
        sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
    ) -> "CztPlan":
        """Creates a zoom plan; the number of bins defaults to the size of the input."""

        return cls(
            n_input,
            n_input if m_bins is None else m_bins,
            f_start_hz,
            f_end_hz,
            sample_rate_hz,
        )

    # ----------------------------------------------------------------------
    @classmethod
    def CreateDft(
        cls,
        n_input: int,
        sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
    ) -> "CztPlan":
        """Creates the plan that walks the entire unit circle (A = 1, W = exp(-i*2*pi/N)), i.e. the DFT."""

        return cls(
            n_input,
            n_input,
            0.0,
            sample_rate_hz * (n_input - 1) / n_input,
            sample_rate_hz,
            is_full_circle=True,
        )

    # ----------------------------------------------------------------------
    def __post_init__(self):
        if self.n_input < 2:
            raise CztException("The input size must be at least 2 ({}).".format(self.n_input))
        if self.m_bins < 2:
            raise CztException("The number of bins must be at least 2 ({}).".format(self.m_bins))
        if not self.sample_rate_hz > 0:
            raise CztException("The sample rate must be positive ({}).".format(self.sample_rate_hz))
        if self.is_full_circle:
            if self.f_start_hz != 0.0:
                raise CztException("A full-circle plan must start at 0 Hz ({}).".format(self.f_start_hz))
        elif not self.f_start_hz > 0:
            raise CztException("f_start_hz must be positive ({}).".format(self.f_start_hz))
        if self.f_start_hz >= self.f_end_hz:
            raise CztException(
                "f_start_hz ({}) must be less than f_end_hz ({}).".format(self.f_start_hz, self.f_end_hz)
            )

        nyquist_hz = self.sample_rate_hz / 2.0

        if not self.is_full_circle and self.f_end_hz > nyquist_hz:
            raise CztException(
                "f_end_hz ({}) exceeds the Nyquist frequency ({}).".format(self.f_end_hz, nyquist_hz)
            )

        start_angle = 2.0 * math.pi * self.f_start_hz / self.sample_rate_hz
        step_angle = 2.0 * math.pi * self.bin_width_hz / self.sample_rate_hz

        a_point = complex(math.cos(start_angle), math.sin(start_angle))
        w_ratio = complex(math.cos(step_angle), -math.sin(step_angle))

        assert abs(abs(a_point) - 1.0) <= UNIT_CIRCLE_TOLERANCE, a_point
        assert abs(abs(w_ratio) - 1.0) <= UNIT_CIRCLE_TOLERANCE, w_ratio

        n = np.arange(self.n_input)
        k = np.arange(self.m_bins)

        kn = np.outer(k, n)
        if self.is_full_circle:
            # Exact integer reduction keeps the DFT contour on the FFT grid
            kn %= self.n_input

        vandermonde_angles = step_angle * kn

        w_re = np.cos(vandermonde_angles)
        w_im = -np.sin(vandermonde_angles)

        a_re = np.cos(start_angle * n)
        a_im = -np.sin(start_angle * n)

        freqs_hz = self.f_start_hz + k * self.bin_width_hz

        # Bluestein chirps: W^(n^2/2) on the input side, W^(-m^2/2) as the convolution filter
        fast_len = sp_fft.next_fast_len(self.n_input + self.m_bins - 1)

        pre_chirp = np.exp(-1j * (start_angle * n + step_angle * (n * n) / 2.0))
        post_chirp = np.exp(-1j * step_angle * (k * k) / 2.0)

        chirp_filter = np.zeros(fast_len, dtype=np.complex128)
        chirp_filter[: self.m_bins] = np.exp(1j * step_angle * (k * k) / 2.0)

        tail = np.arange(self.n_input - 1, 0, -1)
        chirp_filter[fast_len - self.n_input + 1 :] = np.exp(1j * step_angle * (tail * tail) / 2.0)

        chirp_filter_fft = sp_fft.fft(chirp_filter)

        for name, value in [
            ("a_point", a_point),
            ("w_ratio", w_ratio),
            ("freqs_hz", freqs_hz),
            ("w_re", w_re),
            ("w_im", w_im),
            ("a_re", a_re),
            ("a_im", a_im),
            ("_fast_len", fast_len),
            ("_pre_chirp", pre_chirp),
            ("_post_chirp", post_chirp),
            ("_chirp_filter_fft", chirp_filter_fft),
        ]:
            if isinstance(value, np.ndarray):
                value.setflags(write=False)

            object.__setattr__(self, name, value)

    # ----------------------------------------------------------------------
    @property
    def bin_width_hz(self) -> float:
        return (self.f_end_hz - self.f_start_hz) / (self.m_bins - 1)

    @property
    def start_angle(self) -> float:
        return 2.0 * math.pi * self.f_start_hz / self.sample_rate_hz

    @property
    def step_angle(self) -> float:
        return 2.0 * math.pi * self.bin_width_hz / self.sample_rate_hz

    # ----------------------------------------------------------------------
    def ResolutionRatio(self) -> float:
        """Ratio of the FFT grid step (fs/N) to the zoomed bin width."""

        return (self.sample_rate_hz / self.n_input) / self.bin_width_hz

    # ----------------------------------------------------------------------
    def NearestBin(
        self,
        freq_hz: float,
    ) -> int:
        index = int(round((freq_hz - self.f_start_hz) / self.bin_width_hz))
        return min(max(index, 0), self.m_bins - 1)

    # ----------------------------------------------------------------------
    def ApplyStartPoint(
        self,
        samples: NDArray[np.float64],
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Applies the diagonal A^-n to a real signal (or a batch of signals along the last axis)."""

        return self.a_re * samples, self.a_im * samples


# ----------------------------------------------------------------------
# |
# |  Public Functions
# |
# ----------------------------------------------------------------------
def BlockProduct(
    w_re: NDArray[np.float64],
    w_im: NDArray[np.float64],
    ax_re: NDArray[np.float64],
    ax_im: NDArray[np.float64],
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """\
    Real-block expansion of the complex product W * (A x):

        X_re = W_re * Ax_re - W_im * Ax_im
        X_im = W_im * Ax_re + W_re * Ax_im

    `ax_re` and `ax_im` are vectors of length N or batches of shape (B, N).
    """

    return (
        ax_re @ w_re.T - ax_im @ w_im.T,
        ax_re @ w_im.T + ax_im @ w_re.T,
    )


# ----------------------------------------------------------------------
def EvaluateMatrix(
    plan: CztPlan,
    window: SignalWindow,
    *,
    remove_mean: bool = True,
) -> NDArray[np.complex128]:
    """Evaluates the transform with the cos/-sin Vandermonde matrix form."""

    ax_re, ax_im = plan.ApplyStartPoint(_PrepareSamples(plan, window, remove_mean))
    x_re, x_im = BlockProduct(plan.w_re, plan.w_im, ax_re, ax_im)

    return x_re + 1j * x_im


# ----------------------------------------------------------------------
def EvaluateDirect(
    plan: CztPlan,
    window: SignalWindow,
    *,
    remove_mean: bool = True,
) -> NDArray[np.complex128]:
    """Evaluates sum(x[n] * z_k^-n) one bin at a time; the brute-force reference."""

    samples = _PrepareSamples(plan, window, remove_mean)
    n = np.arange(plan.n_input)

    results = np.empty(plan.m_bins, dtype=np.complex128)

    for k in range(plan.m_bins):
        angle = plan.start_angle + k * plan.step_angle
        results[k] = np.sum(samples * np.exp(-1j * angle * n))

    return results


# ----------------------------------------------------------------------
def EvaluateFast(
    plan: CztPlan,
    window: SignalWindow,
    *,
    remove_mean: bool = True,
) -> NDArray[np.complex128]:
    """Evaluates the transform as a Bluestein chirp convolution in O((N + M) log(N + M))."""

    samples = _PrepareSamples(plan, window, remove_mean)

    convolved = sp_fft.ifft(
        sp_fft.fft(samples * plan._pre_chirp, plan._fast_len)  # pylint: disable=protected-access
        * plan._chirp_filter_fft,  # pylint: disable=protected-access
    )

    return convolved[: plan.m_bins] * plan._post_chirp  # pylint: disable=protected-access


# ----------------------------------------------------------------------
def CztMatrix(
    plan: CztPlan,
    window: SignalWindow,
    *,
    remove_mean: bool = True,
) -> Spectrum:
    return Spectrum(plan.freqs_hz, np.abs(EvaluateMatrix(plan, window, remove_mean=remove_mean)))


# ----------------------------------------------------------------------
def CztDirect(
    plan: CztPlan,
    window: SignalWindow,
    *,
    remove_mean: bool = True,
) -> Spectrum:
    return Spectrum(plan.freqs_hz, np.abs(EvaluateDirect(plan, window, remove_mean=remove_mean)))


# ----------------------------------------------------------------------
def CztFast(
    plan: CztPlan,
    window: SignalWindow,
    *,
    remove_mean: bool = True,
) -> Spectrum:
    return Spectrum(plan.freqs_hz, np.abs(EvaluateFast(plan, window, remove_mean=remove_mean)))


# ----------------------------------------------------------------------
def FftPeriodogram(
    window: SignalWindow,
    band: tuple[float, float] = DEFAULT_BAND_HZ,
    zero_pad_to: Optional[int] = None,
    *,
    welch: bool = False,
    remove_mean: bool = True,
) -> Spectrum:
    """\
    Magnitude-squared spectrum on the uniform DFT grid, masked to `band`.

    By default this is a single (optionally zero-padded) periodogram. When `welch` is set, Hann
    windowed segments of half the window length with 50% overlap are averaged instead.
    """

    low_hz, high_hz = band

    if not 0 < low_hz < high_hz <= window.nyquist_hz:
        raise CztException(
            "The band ({}, {}) must lie within (0, {}].".format(low_hz, high_hz, window.nyquist_hz)
        )

    num_fft = window.num_samples if zero_pad_to is None else zero_pad_to

    if num_fft < window.num_samples:
        raise CztException(
            "zero_pad_to ({}) must not be less than the window length ({}).".format(
                num_fft,
                window.num_samples,
            ),
        )

    samples = window.Centered() if remove_mean else np.asarray(window.samples)

    if welch:
        segment_length = max(window.num_samples // 2, 2)

        freqs, values = sp_signal.welch(
            samples,
            fs=window.sample_rate_hz,
            window="hann",
            nperseg=segment_length,
            noverlap=segment_length // 2,
            nfft=num_fft,
            detrend=False,
            scaling="spectrum",
            average="mean",
        )
    else:
        freqs = sp_fft.rfftfreq(num_fft, d=1.0 / window.sample_rate_hz)
        values = np.abs(sp_fft.rfft(samples, num_fft)) ** 2

    mask = (freqs >= low_hz) & (freqs <= high_hz)
    if not np.any(mask):
        raise CztException(
            "band too narrow for grid: no DFT bin (step {:.6g} Hz) falls within ({}, {}).".format(
                window.sample_rate_hz / num_fft,
                low_hz,
                high_hz,
            ),
        )

    return Spectrum(freqs[mask], values[mask])


# ----------------------------------------------------------------------
# |
# |  Private Functions
# |
# ----------------------------------------------------------------------
def _PrepareSamples(
    plan: CztPlan,
    window: SignalWindow,
    remove_mean: bool,
) -> NDArray[np.float64]:
    if window.num_samples != plan.n_input:
        raise CztException(
            "The window length ({}) does not match the plan input size ({}).".format(
                window.num_samples,
                plan.n_input,
            ),
        )

    if not math.isclose(window.sample_rate_hz, plan.sample_rate_hz, rel_tol=1e-12):
        raise CztException(
            "The window sample rate ({}) does not match the plan sample rate ({}).".format(
                window.sample_rate_hz,
                plan.sample_rate_hz,
            ),
        )

    if remove_mean:
        return window.Centered()

    return np.asarray(window.samples)
