# ----------------------------------------------------------------------
# |
# |  Report.py
# |
# |  David Brownell <db@DavidBrownell.com>
# |      2024-03-08 08:20:31
# |
# ----------------------------------------------------------------------
# |
# |  Copyright David Brownell 2024
# |  Distributed under the MIT License.
# |
# ----------------------------------------------------------------------
"""Evaluation of estimation methods over a corpus of traces"""

import json

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import pandas as pd

from dbrownell_Common.InflectEx import inflect
from dbrownell_Common.Streams.DoneManager import DoneManager

from CztHeartRate.Czt import CztException, DEFAULT_BAND_HZ
from CztHeartRate.HeartRate import (
    DistributionModel,
    EstimateWindow,
    HeartRateException,
    Method,
    PeakDetectorConfig,
)
from CztHeartRate.Evaluation.Metrics import ComputeMetrics, Metrics
from CztHeartRate.Evaluation.Traces import Trace, TraceException, WindowTrace


# ----------------------------------------------------------------------
# |
# |  Public Types
# |
# ----------------------------------------------------------------------
SIGNIFICANT_DIGITS = 6


# ----------------------------------------------------------------------
@dataclass(frozen=True)
class EvalRow:
    """Prediction (or skip reason) for a single window and method."""

    subject: str
    window_index: int
    method: Method
    pred_bpm: Optional[float]
    gt_bpm: float
    skip_reason: Optional[str] = field(default=None)


# ----------------------------------------------------------------------
@dataclass(frozen=True)
class MethodSummary:
    method: Method
    metrics: Optional[Metrics]  # None when every window was skipped
    num_windows: int
    num_skipped: int


# ----------------------------------------------------------------------
@dataclass(frozen=True)
class EvalReport:
    """Per-window predictions ordered by (subject, window index, method) and per-method aggregates."""

    # ----------------------------------------------------------------------
    window_size: int
    rows: list[EvalRow]
    summaries: list[MethodSummary]

    # ----------------------------------------------------------------------
    def GetSummary(
        self,
        method: Method,
    ) -> MethodSummary:
        for summary in self.summaries:
            if summary.method == method:
                return summary

        raise KeyError(method)

    # ----------------------------------------------------------------------
    def ToCsv(self) -> str:
        return pd.DataFrame(
            [
                {
                    "subject": row.subject,
                    "window_index": row.window_index,
                    "method": row.method.value,
                    "pred_bpm": "" if row.pred_bpm is None else _Format(row.pred_bpm),
                    "gt_bpm": _Format(row.gt_bpm),
                    "skip_reason": row.skip_reason or "",
                }
                for row in self.rows
            ],
            columns=["subject", "window_index", "method", "pred_bpm", "gt_bpm", "skip_reason"],
        ).to_csv(index=False, lineterminator="\n")

    # ----------------------------------------------------------------------
    def ToJson(self) -> str:
        content: dict[str, Any] = {
            "window_size": self.window_size,
            "methods": {},
        }

        for summary in self.summaries:
            method_content: dict[str, Any] = {
                "num_windows": summary.num_windows,
                "num_skipped": summary.num_skipped,
            }

            if summary.metrics is not None:
                method_content.update(
                    {
                        key: value if isinstance(value, int) or value is None else _Round(value)
                        for key, value in summary.metrics.ToDict().items()
                    },
                )

            content["methods"][summary.method.value] = method_content

        return json.dumps(content, indent=2)


# ----------------------------------------------------------------------
# |
# |  Public Functions
# |
# ----------------------------------------------------------------------
def Evaluate(
    traces: Sequence[Trace],
    methods: Sequence[Method],
    window_size: int,
    *,
    model: Optional[DistributionModel] = None,
    overlap: int = 0,
    band: tuple[float, float] = DEFAULT_BAND_HZ,
    peak_config: Optional[PeakDetectorConfig] = None,
    max_num_threads: Optional[int] = None,
    dm: Optional[DoneManager] = None,
) -> EvalReport:
    """\
    Estimates every window of every trace with each method and compares against the reference.

    Windows that a method cannot estimate are recorded as skipped rows rather than aborting the
    run. Traces are processed in parallel; the report does not depend on the number of threads.
    """

    if not traces:
        raise TraceException("At least one trace is required.")
    if not methods:
        raise HeartRateException("At least one method is required.")
    if Method.DeepCzt in methods and model is None:
        raise HeartRateException("A trained model is required for the '{}' method.".format(Method.DeepCzt.value))

    # ----------------------------------------------------------------------
    def EvaluateTrace(
        trace: Trace,
    ) -> list[EvalRow]:
        rows: list[EvalRow] = []

        for window_index, labeled in enumerate(WindowTrace(trace, window_size, overlap)):
            for method in methods:
                try:
                    estimate = EstimateWindow(
                        labeled.window,
                        method,
                        band=band,
                        model=model,
                        peak_config=peak_config,
                    )

                    rows.append(EvalRow(trace.subject_id, window_index, method, estimate.bpm, labeled.hr_gt_bpm))

                except (HeartRateException, CztException) as ex:
                    rows.append(
                        EvalRow(trace.subject_id, window_index, method, None, labeled.hr_gt_bpm, str(ex))
                    )

        return rows

    # ----------------------------------------------------------------------

    with ThreadPoolExecutor(max_workers=max_num_threads) as executor:
        per_trace_rows = list(executor.map(EvaluateTrace, traces))

    method_order = {method: index for index, method in enumerate(methods)}

    rows = sorted(
        (row for trace_rows in per_trace_rows for row in trace_rows),
        key=lambda row: (row.subject, row.window_index, method_order[row.method]),
    )

    summaries: list[MethodSummary] = []

    for method in methods:
        method_rows = [row for row in rows if row.method == method]
        estimated = [row for row in method_rows if row.pred_bpm is not None]

        metrics = (
            ComputeMetrics(
                [row.pred_bpm for row in estimated if row.pred_bpm is not None],
                [row.gt_bpm for row in estimated],
            )
            if estimated
            else None
        )

        summary = MethodSummary(method, metrics, len(method_rows), len(method_rows) - len(estimated))
        summaries.append(summary)

        if dm is not None:
            if summary.num_skipped:
                dm.WriteWarning(
                    "'{}': {} of {} skipped.\n".format(
                        method.value,
                        inflect.no("window", summary.num_skipped),
                        summary.num_windows,
                    ),
                )

            if metrics is not None:
                dm.WriteVerbose(
                    "'{}': MAE {:.4g} BPM, RMSE {:.4g} BPM over {}.\n".format(
                        method.value,
                        metrics.mae,
                        metrics.rmse,
                        inflect.no("window", metrics.num_values),
                    ),
                )

    return EvalReport(window_size, rows, summaries)


# ----------------------------------------------------------------------
# |
# |  Private Functions
# |
# ----------------------------------------------------------------------
def _Format(
    value: float,
) -> str:
    return "{:.{}g}".format(value, SIGNIFICANT_DIGITS)


# ----------------------------------------------------------------------
def _Round(
    value: float,
) -> float:
    return float(_Format(value))
