# ----------------------------------------------------------------------
# |
# |  Traces.py
# |
# |  David Brownell <db@DavidBrownell.com>
# |      2024-03-07 09:03:15
# |
# ----------------------------------------------------------------------
# |
# |  Copyright David Brownell 2024
# |  Distributed under the MIT License.
# |
# ----------------------------------------------------------------------
"""\
Trace CSV ingestion, windowing, and writing.

Trace files have the header `t,ppg` (seconds, arbitrary amplitude) or `ppg` (the sample rate must
then be provided). Ground-truth sidecars have the header `t,hr_bpm` (a time series interpolated
onto the trace samples) or `window_index,hr_bpm` (one label per window).
"""

import math

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from dbrownell_Common.Streams.DoneManager import DoneManagerException
from numpy.typing import NDArray

from CztHeartRate.Czt import SignalWindow
from CztHeartRate.SignalGen import LabeledWindow


# ----------------------------------------------------------------------
# |
# |  Public Types
# |
# ----------------------------------------------------------------------
GROUND_TRUTH_SUFFIX = ".gt.csv"
MAX_GT_BPM = 300.0


# ----------------------------------------------------------------------
class TraceException(DoneManagerException):
    """Exception raised when a trace cannot be loaded or windowed."""

    pass  # pylint: disable=unnecessary-pass


# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class Trace:
    """A recorded signal and its optional heart-rate reference."""

    # ----------------------------------------------------------------------
    samples: NDArray[np.float64]
    sample_rate_hz: float
    subject_id: str

    gt_series: Optional[NDArray[np.float64]] = field(kw_only=True, default=None)
    gt_windows: Optional[dict[int, float]] = field(kw_only=True, default=None)

    # ----------------------------------------------------------------------
    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)

        if samples.ndim != 1 or samples.shape[0] < 2:
            raise TraceException("'{}' must contain at least 2 samples.".format(self.subject_id))
        if not np.all(np.isfinite(samples)):
            raise TraceException(
                "'{}': sample {} is not finite.".format(
                    self.subject_id,
                    int(np.flatnonzero(~np.isfinite(samples))[0]),
                ),
            )
        if not self.sample_rate_hz > 0:
            raise TraceException(
                "'{}': the sample rate must be positive ({}).".format(self.subject_id, self.sample_rate_hz)
            )
        if self.gt_series is not None and self.gt_windows is not None:
            raise TraceException("'{}': only one form of ground truth may be provided.".format(self.subject_id))

        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

        if self.gt_series is not None:
            gt_series = np.array(self.gt_series, dtype=np.float64)

            if gt_series.shape != samples.shape:
                raise TraceException(
                    "ground-truth coverage gap: '{}' has {} samples but {} ground-truth values.".format(
                        self.subject_id,
                        samples.shape[0],
                        gt_series.shape[0],
                    ),
                )

            _VerifyGtValues(self.subject_id, gt_series)

            gt_series.setflags(write=False)
            object.__setattr__(self, "gt_series", gt_series)

        if self.gt_windows is not None:
            _VerifyGtValues(self.subject_id, np.array(list(self.gt_windows.values()), dtype=np.float64))

    # ----------------------------------------------------------------------
    @property
    def num_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def has_ground_truth(self) -> bool:
        return self.gt_series is not None or self.gt_windows is not None

    # ----------------------------------------------------------------------
    def ToWindow(self) -> SignalWindow:
        return SignalWindow(self.samples, self.sample_rate_hz)


# ----------------------------------------------------------------------
# |
# |  Public Functions
# |
# ----------------------------------------------------------------------
def GroundTruthPath(
    trace_path: Path,
) -> Path:
    """Returns the sidecar ground-truth filename for a trace: `<name>.csv` -> `<name>.gt.csv`."""

    return trace_path.with_name(trace_path.stem + GROUND_TRUTH_SUFFIX)


# ----------------------------------------------------------------------
def LoadTrace(
    path: Path,
    gt_path: Optional[Path] = None,
    *,
    sample_rate_hz: Optional[float] = None,
    subject_id: Optional[str] = None,
) -> Trace:
    """\
    Loads a trace and its ground truth; when `gt_path` is None, the sidecar next to the trace is
    used if it exists.
    """

    if not path.is_file():
        raise TraceException("The trace '{}' does not exist.".format(path))

    subject_id = subject_id or path.stem

    content = _ReadCsv(path)

    if "ppg" not in content.columns:
        raise TraceException("'{}' does not contain a 'ppg' column.".format(path))

    samples = _NumericColumn(path, content, "ppg")
    times_s: Optional[NDArray[np.float64]] = None

    if "t" in content.columns:
        times_s = _NumericColumn(path, content, "t")
        _VerifyIncreasing(path, times_s, "t")

        if times_s.shape[0] < 2:
            raise TraceException("'{}' must contain at least 2 rows.".format(path))

        derived_rate_hz = float(np.round(1.0 / float(np.median(np.diff(times_s))), 6))

        if sample_rate_hz is None:
            sample_rate_hz = derived_rate_hz
        elif not math.isclose(sample_rate_hz, derived_rate_hz, rel_tol=1e-2):
            raise TraceException(
                "'{}': the timestamps imply {} Hz but {} Hz was provided.".format(
                    path,
                    derived_rate_hz,
                    sample_rate_hz,
                ),
            )

    elif sample_rate_hz is None:
        raise TraceException("missing fs: '{}' has no 't' column and no sample rate was provided.".format(path))

    else:
        times_s = np.arange(samples.shape[0], dtype=np.float64) / sample_rate_hz

    if gt_path is None:
        candidate = GroundTruthPath(path)
        gt_path = candidate if candidate.is_file() else None

    gt_series: Optional[NDArray[np.float64]] = None
    gt_windows: Optional[dict[int, float]] = None

    if gt_path is not None:
        gt_series, gt_windows = _LoadGroundTruth(gt_path, subject_id, times_s)

    return Trace(
        samples,
        sample_rate_hz,
        subject_id,
        gt_series=gt_series,
        gt_windows=gt_windows,
    )


# ----------------------------------------------------------------------
def SplitWindows(
    trace: Trace,
    size: int,
    overlap: int = 0,
) -> list[SignalWindow]:
    """Returns contiguous windows advancing by `size - overlap` samples; the tail remainder is discarded."""

    return [
        SignalWindow(trace.samples[begin : begin + size], trace.sample_rate_hz)
        for begin in _WindowStarts(trace, size, overlap)
    ]


# ----------------------------------------------------------------------
def WindowTrace(
    trace: Trace,
    size: int,
    overlap: int = 0,
) -> list[LabeledWindow]:
    """Returns windows labeled with the mean ground truth over their span (or their per-window label)."""

    if not trace.has_ground_truth:
        raise TraceException("'{}' has no ground truth.".format(trace.subject_id))

    results: list[LabeledWindow] = []

    for window_index, begin in enumerate(_WindowStarts(trace, size, overlap)):
        if trace.gt_series is not None:
            label = float(np.mean(trace.gt_series[begin : begin + size]))
        else:
            assert trace.gt_windows is not None

            if window_index not in trace.gt_windows:
                raise TraceException(
                    "ground-truth coverage gap: '{}' has no label for window {}.".format(
                        trace.subject_id,
                        window_index,
                    ),
                )

            label = trace.gt_windows[window_index]

        results.append(
            LabeledWindow(
                SignalWindow(trace.samples[begin : begin + size], trace.sample_rate_hz),
                label,
                "{}#{}".format(trace.subject_id, window_index),
            ),
        )

    return results


# ----------------------------------------------------------------------
def WriteTrace(
    path: Path,
    trace: Trace,
) -> None:
    """Writes the trace as `t,ppg` and, when present, its ground truth to the sidecar file."""

    path.parent.mkdir(parents=True, exist_ok=True)

    times_s = np.arange(trace.num_samples, dtype=np.float64) / trace.sample_rate_hz

    pd.DataFrame({"t": times_s, "ppg": trace.samples}).to_csv(path, index=False)

    if trace.gt_series is not None:
        pd.DataFrame({"t": times_s, "hr_bpm": trace.gt_series}).to_csv(GroundTruthPath(path), index=False)

    elif trace.gt_windows is not None:
        indexes = sorted(trace.gt_windows)

        pd.DataFrame(
            {
                "window_index": indexes,
                "hr_bpm": [trace.gt_windows[index] for index in indexes],
            },
        ).to_csv(GroundTruthPath(path), index=False)


# ----------------------------------------------------------------------
# |
# |  Private Functions
# |
# ----------------------------------------------------------------------
def _ReadCsv(
    path: Path,
) -> pd.DataFrame:
    try:
        content = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as ex:
        raise TraceException("'{}' could not be parsed: {}".format(path, ex)) from ex

    content.columns = [str(column).strip() for column in content.columns]
    return content


# ----------------------------------------------------------------------
def _NumericColumn(
    path: Path,
    content: pd.DataFrame,
    column: str,
) -> NDArray[np.float64]:
    values = pd.to_numeric(content[column], errors="coerce").to_numpy(dtype=np.float64)

    invalid = np.flatnonzero(~np.isfinite(values))
    if invalid.size:
        # Row numbers are 1-based and the header is row 1
        row = int(invalid[0]) + 2

        raise TraceException(
            "'{}', row {}: '{}' is not a finite number ({!r}).".format(
                path,
                row,
                column,
                content[column].iloc[int(invalid[0])],
            ),
        )

    return values


# ----------------------------------------------------------------------
def _VerifyIncreasing(
    path: Path,
    values: NDArray[np.float64],
    column: str,
) -> None:
    decreasing = np.flatnonzero(np.diff(values) <= 0)
    if decreasing.size:
        raise TraceException(
            "'{}', row {}: '{}' is not monotonically increasing.".format(path, int(decreasing[0]) + 3, column)
        )


# ----------------------------------------------------------------------
def _VerifyGtValues(
    subject_id: str,
    values: NDArray[np.float64],
) -> None:
    invalid = np.flatnonzero(~((values > 0) & (values < MAX_GT_BPM)))
    if invalid.size:
        raise TraceException(
            "'{}': ground-truth value {} is outside of (0, {:g}) BPM.".format(
                subject_id,
                values[int(invalid[0])],
                MAX_GT_BPM,
            ),
        )


# ----------------------------------------------------------------------
def _LoadGroundTruth(
    path: Path,
    subject_id: str,
    times_s: NDArray[np.float64],
) -> tuple[Optional[NDArray[np.float64]], Optional[dict[int, float]]]:
    if not path.is_file():
        raise TraceException("The ground truth '{}' does not exist.".format(path))

    content = _ReadCsv(path)

    if "hr_bpm" not in content.columns:
        raise TraceException("'{}' does not contain an 'hr_bpm' column.".format(path))

    hr_bpm = _NumericColumn(path, content, "hr_bpm")

    if "window_index" in content.columns:
        indexes = _NumericColumn(path, content, "window_index")

        if np.any(indexes < 0) or np.any(indexes != np.floor(indexes)):
            raise TraceException("'{}': window indexes must be non-negative integers.".format(path))

        _VerifyIncreasing(path, indexes, "window_index")

        return None, {int(index): float(value) for index, value in zip(indexes, hr_bpm)}

    if "t" not in content.columns:
        raise TraceException("'{}' must contain a 't' or 'window_index' column.".format(path))

    gt_times_s = _NumericColumn(path, content, "t")
    _VerifyIncreasing(path, gt_times_s, "t")

    if gt_times_s.shape[0] == 0:
        raise TraceException("ground-truth coverage gap: '{}' is empty.".format(path))

    # A reference sensor may report less often than the trace is sampled; one reporting interval
    # of slack is allowed at either end.
    if gt_times_s.shape[0] > 1:
        slack_s = float(np.median(np.diff(gt_times_s)))
    else:
        slack_s = 0.0

    slack_s = max(slack_s, float(np.median(np.diff(times_s)))) * (1.0 + 1e-9)

    if gt_times_s[0] - times_s[0] > slack_s or times_s[-1] - gt_times_s[-1] > slack_s:
        raise TraceException(
            "ground-truth coverage gap: '{}' covers {:.4g}..{:.4g} s but '{}' spans {:.4g}..{:.4g} s.".format(
                path,
                gt_times_s[0],
                gt_times_s[-1],
                subject_id,
                times_s[0],
                times_s[-1],
            ),
        )

    return np.interp(times_s, gt_times_s, hr_bpm), None


# ----------------------------------------------------------------------
def _WindowStarts(
    trace: Trace,
    size: int,
    overlap: int,
) -> range:
    if size < 2:
        raise TraceException("The window size must be at least 2 ({}).".format(size))
    if not 0 <= overlap < size:
        raise TraceException("The overlap must be within [0, {}) ({}).".format(size, overlap))
    if size > trace.num_samples:
        raise TraceException(
            "The window size {} exceeds the length of '{}' ({} samples).".format(
                size,
                trace.subject_id,
                trace.num_samples,
            ),
        )

    stride = size - overlap
    num_windows = (trace.num_samples - size) // stride + 1

    return range(0, num_windows * stride, stride)
