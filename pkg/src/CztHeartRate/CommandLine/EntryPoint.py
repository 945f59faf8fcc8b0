# ----------------------------------------------------------------------
# |
# |  EntryPoint.py
# |
# |  David Brownell <db@DavidBrownell.com>
# |      2024-03-08 14:12:09
# |
# ----------------------------------------------------------------------
# |
# |  Copyright David Brownell 2024
# |  Distributed under the MIT License.
# |
# ----------------------------------------------------------------------
"""Heart-rate estimation with zoomed and trainable Chirp-Z Transforms."""

import sys

from contextlib import contextmanager
from enum import Enum
from pathlib import Path
from typing import Annotated, Iterator, Optional

import numpy as np
import pandas as pd
import typer

from dbrownell_Common.InflectEx import inflect
from dbrownell_Common.Streams.DoneManager import DoneManager, Flags as DoneManagerFlags
from typer_config import use_json_config

from CztHeartRate import __version__
from CztHeartRate.Czt import CztException, CztMatrix, CztPlan, DEFAULT_BAND_HZ, FftPeriodogram
from CztHeartRate.DeepCzt.Checkpoint import ReadCheckpoint, WriteCheckpoint
from CztHeartRate.DeepCzt.Config import DistributionLoss, TrainConfig
from CztHeartRate.DeepCzt.Model import DeepCztModel
from CztHeartRate.DeepCzt.Training import Train
from CztHeartRate.Evaluation.Report import Evaluate, SIGNIFICANT_DIGITS
from CztHeartRate.Evaluation.Traces import (
    GROUND_TRUTH_SUFFIX,
    LoadTrace,
    SplitWindows,
    Trace,
    TraceException,
    WindowTrace,
    WriteTrace,
)
from CztHeartRate.HeartRate import (
    EstimateWindow,
    HeartRateException,
    Method,
    SummarizeSweep,
    SweepWindows,
)
from CztHeartRate.SignalGen import (
    ConstantProfile,
    InstantaneousHr,
    ParseProfile,
    SensorModel,
    SynthSignal,
    SynthSpec,
)


# ----------------------------------------------------------------------
app = typer.Typer(
    help=__doc__,
    no_args_is_help=True,
    pretty_exceptions_show_locals=False,
    pretty_exceptions_enable=False,
)


# ----------------------------------------------------------------------
class SpectrumMethod(str, Enum):
    fft = Method.FftArgmax.value
    czt = Method.CztArgmax.value


# ----------------------------------------------------------------------
class SensorChoice(str, Enum):
    identity = "identity"
    affine = "affine"
    quantize = "quantize"


# ----------------------------------------------------------------------
_band_option = typer.Option("--band", help="Analysis band in Hz as 'lo:hi'.")
_band_bpm_option = typer.Option("--band-bpm", help="Analysis band in BPM as 'lo:hi'; takes precedence over --band.")
_fs_option = typer.Option("--fs", min=0.0, help="Sample rate (Hz) of traces without a 't' column.")
_window_option = typer.Option("--window", min=2, help="Window size in samples.")
_verbose_option = typer.Option("--verbose", help="Write verbose information to the terminal.")
_debug_option = typer.Option("--debug", help="Write debug information to the terminal.")


# ----------------------------------------------------------------------
@app.command("estimate", no_args_is_help=True)
@use_json_config()
def EstimateCommand(
    input_filename: Annotated[Path, typer.Option("--input", help="Trace CSV file.")],
    method: Annotated[Method, typer.Option("--method", help="Estimation method.")] = Method.CztArgmax,
    window: Annotated[int, _window_option] = 256,
    overlap: Annotated[int, typer.Option("--overlap", min=0, help="Samples shared by adjacent windows.")] = 0,
    band: Annotated[str, _band_option] = "{}:{}".format(*DEFAULT_BAND_HZ),
    band_bpm: Annotated[Optional[str], _band_bpm_option] = None,
    model_filename: Annotated[Optional[Path], typer.Option("--model", help="Checkpoint for the 'deep' method.")] = None,
    fs: Annotated[Optional[float], _fs_option] = None,
    verbose: Annotated[bool, _verbose_option] = False,
    debug: Annotated[bool, _debug_option] = False,
) -> None:
    """Writes the per-window heart rate of a trace as CSV."""

    band_hz = _ResolveBand(band, band_bpm)
    _VerifyModelOption(method == Method.DeepCzt, model_filename)

    if overlap >= window:
        raise typer.BadParameter("--overlap must be less than --window.")

    with _YieldDoneManager(verbose, debug) as dm:
        trace = LoadTrace(input_filename, sample_rate_hz=fs)
        model = None if model_filename is None else ReadCheckpoint(model_filename, expected_n_input=window)

        rows: list[dict[str, object]] = []
        num_skipped = 0

        for window_index, signal_window in enumerate(SplitWindows(trace, window, overlap)):
            row: dict[str, object] = {
                "window_index": window_index,
                "t_start_s": _Format(window_index * (window - overlap) / trace.sample_rate_hz),
            }

            try:
                estimate = EstimateWindow(signal_window, method, band=band_hz, model=model)

                row["hr_bpm"] = _Format(estimate.bpm)
                row["confidence"] = "" if estimate.confidence is None else _Format(estimate.confidence)
                row["skip_reason"] = ""

            except (HeartRateException, CztException) as ex:
                num_skipped += 1

                row["hr_bpm"] = ""
                row["confidence"] = ""
                row["skip_reason"] = str(ex)

            rows.append(row)

        if num_skipped:
            dm.WriteWarning("{} of {} skipped.\n".format(inflect.no("window", num_skipped), len(rows)))

        _WriteCsv(
            pd.DataFrame(rows, columns=["window_index", "t_start_s", "hr_bpm", "confidence", "skip_reason"]),
            None,
        )


# ----------------------------------------------------------------------
@app.command("train", no_args_is_help=True)
@use_json_config()
def TrainCommand(
    data_dir: Annotated[Path, typer.Option("--data", help="Directory of trace CSVs with '.gt.csv' sidecars.")],
    output_filename: Annotated[Path, typer.Option("--out", help="Checkpoint to write.")],
    alpha: Annotated[float, typer.Option("--alpha", min=0.0, help="Weight of the distribution loss.")] = 100.0,
    beta: Annotated[float, typer.Option("--beta", min=0.0, help="Weight of the deviation-from-classical loss.")] = 0.01,
    learning_rate: Annotated[float, typer.Option("--lr", help="Initial learning rate.")] = 1e-4,
    epochs: Annotated[int, typer.Option("--epochs", min=1, help="Number of epochs.")] = 50,
    batch_size: Annotated[int, typer.Option("--batch-size", min=1, help="Mini-batch size.")] = 32,
    seed: Annotated[int, typer.Option("--seed", help="Seed for the validation split and shuffling.")] = 0,
    loss: Annotated[DistributionLoss, typer.Option("--loss", help="Distribution loss.")] = DistributionLoss.Emd,
    smoothing_bpm: Annotated[
        float, typer.Option("--smoothing-bpm", min=0.0, help="Std. dev. of Gaussian targets (0 = one-hot).")
    ] = 0.0,
    window: Annotated[int, _window_option] = 256,
    band: Annotated[str, _band_option] = "{}:{}".format(*DEFAULT_BAND_HZ),
    band_bpm: Annotated[Optional[str], _band_bpm_option] = None,
    report_filename: Annotated[
        Optional[Path], typer.Option("--report", help="JSON training report; written to stdout when omitted.")
    ] = None,
    fs: Annotated[Optional[float], _fs_option] = None,
    verbose: Annotated[bool, _verbose_option] = False,
    debug: Annotated[bool, _debug_option] = False,
) -> None:
    """Trains a Chirp-Z Transform estimator initialized to the classical transform."""

    band_hz = _ResolveBand(band, band_bpm)

    if alpha + beta <= 0:
        raise typer.BadParameter("At least one of --alpha and --beta must be positive.")

    with _YieldDoneManager(verbose, debug) as dm:
        config = TrainConfig(
            alpha,
            beta,
            learning_rate,
            batch_size=batch_size,
            epochs=epochs,
            target_smoothing_bpm=smoothing_bpm,
            loss=loss,
            seed=seed,
        )

        traces = _LoadDirectory(dm, data_dir, fs)

        dataset = [item for trace in traces for item in WindowTrace(trace, window)]

        plan = CztPlan.Create(window, window, band_hz[0], band_hz[1], traces[0].sample_rate_hz)
        model = DeepCztModel.Create(plan)

        with dm.Nested("Training on {}...".format(inflect.no("window", len(dataset)))) as train_dm:
            report = Train(model, dataset, config, dm=train_dm)

        WriteCheckpoint(output_filename, model)
        dm.WriteInfo("The checkpoint was written to '{}'.\n".format(output_filename))

        if report_filename is None:
            sys.stdout.write(report.ToJson())
            sys.stdout.write("\n")
        else:
            report_filename.parent.mkdir(parents=True, exist_ok=True)
            report_filename.write_text(report.ToJson() + "\n", encoding="utf-8")


# ----------------------------------------------------------------------
@app.command("evaluate", no_args_is_help=True)
@use_json_config()
def EvaluateCommand(
    input_filenames: Annotated[Optional[list[Path]], typer.Option("--input", help="Trace CSV file(s).")] = None,
    data_dir: Annotated[Optional[Path], typer.Option("--data", help="Directory of trace CSVs.")] = None,
    methods: Annotated[str, typer.Option("--methods", help="Comma-delimited methods.")] = "fft,czt",
    window: Annotated[int, _window_option] = 256,
    overlap: Annotated[int, typer.Option("--overlap", min=0, help="Samples shared by adjacent windows.")] = 0,
    band: Annotated[str, _band_option] = "{}:{}".format(*DEFAULT_BAND_HZ),
    band_bpm: Annotated[Optional[str], _band_bpm_option] = None,
    model_filename: Annotated[Optional[Path], typer.Option("--model", help="Checkpoint for the 'deep' method.")] = None,
    jobs: Annotated[Optional[int], typer.Option("--jobs", min=1, help="Traces evaluated in parallel.")] = None,
    output_filename: Annotated[
        Optional[Path], typer.Option("--out", help="Per-window CSV; written to stdout when omitted.")
    ] = None,
    json_filename: Annotated[Optional[Path], typer.Option("--json", help="Aggregate metrics JSON.")] = None,
    fs: Annotated[Optional[float], _fs_option] = None,
    verbose: Annotated[bool, _verbose_option] = False,
    debug: Annotated[bool, _debug_option] = False,
) -> None:
    """Compares methods against the ground truth of one or more traces."""

    band_hz = _ResolveBand(band, band_bpm)
    method_list = _ParseMethods(methods)
    _VerifyModelOption(Method.DeepCzt in method_list, model_filename)

    if not input_filenames and data_dir is None:
        raise typer.BadParameter("--input or --data must be provided.")
    if overlap >= window:
        raise typer.BadParameter("--overlap must be less than --window.")

    with _YieldDoneManager(verbose, debug) as dm:
        traces = [LoadTrace(filename, sample_rate_hz=fs) for filename in input_filenames or []]

        if data_dir is not None:
            traces += _LoadDirectory(dm, data_dir, fs)

        model = None if model_filename is None else ReadCheckpoint(model_filename, expected_n_input=window)

        report = Evaluate(
            traces,
            method_list,
            window,
            model=model,
            overlap=overlap,
            band=band_hz,
            max_num_threads=jobs,
            dm=dm,
        )

        if output_filename is None:
            sys.stdout.write(report.ToCsv())
        else:
            output_filename.parent.mkdir(parents=True, exist_ok=True)
            output_filename.write_text(report.ToCsv(), encoding="utf-8")

        if json_filename is not None:
            json_filename.parent.mkdir(parents=True, exist_ok=True)
            json_filename.write_text(report.ToJson() + "\n", encoding="utf-8")


# ----------------------------------------------------------------------
@app.command("sweep", no_args_is_help=True)
@use_json_config()
def SweepCommand(
    input_filename: Annotated[Path, typer.Option("--input", help="Trace CSV file.")],
    sizes: Annotated[str, typer.Option("--sizes", help="Comma-delimited window sizes.")] = "64,128,256,512",
    methods: Annotated[str, typer.Option("--methods", help="Comma-delimited methods.")] = "peak,fft,czt",
    band: Annotated[str, _band_option] = "{}:{}".format(*DEFAULT_BAND_HZ),
    band_bpm: Annotated[Optional[str], _band_bpm_option] = None,
    model_filename: Annotated[Optional[Path], typer.Option("--model", help="Checkpoint for the 'deep' method.")] = None,
    fs: Annotated[Optional[float], _fs_option] = None,
    verbose: Annotated[bool, _verbose_option] = False,
    debug: Annotated[bool, _debug_option] = False,
) -> None:
    """Writes the MAE of each method for each window size as CSV."""

    band_hz = _ResolveBand(band, band_bpm)
    method_list = _ParseMethods(methods)
    _VerifyModelOption(Method.DeepCzt in method_list, model_filename)

    try:
        size_list = [int(value) for value in sizes.split(",") if value.strip()]
    except ValueError as ex:
        raise typer.BadParameter("--sizes must be comma-delimited integers ({}).".format(sizes)) from ex

    if not size_list or any(size < 2 for size in size_list):
        raise typer.BadParameter("--sizes must contain integers of at least 2 ({}).".format(sizes))

    with _YieldDoneManager(verbose, debug) as dm:
        trace = LoadTrace(input_filename, sample_rate_hz=fs)
        model = None if model_filename is None else ReadCheckpoint(model_filename)

        if trace.gt_series is None:
            dm.WriteWarning("'{}' has no per-sample ground truth; MAE values will be empty.\n".format(input_filename))

        rows = SweepWindows(
            trace.ToWindow(),
            size_list,
            method_list,
            band=band_hz,
            model=model,
            gt_bpm=trace.gt_series,
            dm=dm,
        )

        _WriteCsv(
            pd.DataFrame(
                [
                    {
                        "size": summary.size,
                        "method": summary.method.value,
                        "mae_bpm": "" if summary.mae_bpm is None else _Format(summary.mae_bpm),
                        "num_estimates": summary.num_estimates,
                        "num_skipped": summary.num_skipped,
                    }
                    for summary in SummarizeSweep(rows)
                ],
                columns=["size", "method", "mae_bpm", "num_estimates", "num_skipped"],
            ),
            None,
        )


# ----------------------------------------------------------------------
@app.command("spectrum", no_args_is_help=True)
@use_json_config()
def SpectrumCommand(
    input_filename: Annotated[Path, typer.Option("--input", help="Trace CSV file.")],
    window_index: Annotated[int, typer.Option("--window-index", help="Zero-based index of the window.")] = 0,
    method: Annotated[SpectrumMethod, typer.Option("--method", help="Spectral method.")] = SpectrumMethod.czt,
    window: Annotated[int, _window_option] = 256,
    bins: Annotated[Optional[int], typer.Option("--bins", min=2, help="CZT bins (defaults to the window size).")] = None,
    zero_pad: Annotated[Optional[int], typer.Option("--zero-pad", min=2, help="FFT length.")] = None,
    band: Annotated[str, _band_option] = "{}:{}".format(*DEFAULT_BAND_HZ),
    band_bpm: Annotated[Optional[str], _band_bpm_option] = None,
    fs: Annotated[Optional[float], _fs_option] = None,
    verbose: Annotated[bool, _verbose_option] = False,
    debug: Annotated[bool, _debug_option] = False,
) -> None:
    """Writes the in-band spectrum of one window as 'freq_hz,magnitude' CSV."""

    band_hz = _ResolveBand(band, band_bpm)

    with _YieldDoneManager(verbose, debug):
        trace = LoadTrace(input_filename, sample_rate_hz=fs)
        windows = SplitWindows(trace, window)

        if not 0 <= window_index < len(windows):
            raise TraceException(
                "The window index {} is outside of [0, {}) for '{}'.".format(
                    window_index,
                    len(windows),
                    input_filename,
                ),
            )

        signal_window = windows[window_index]

        if method == SpectrumMethod.czt:
            plan = CztPlan.Create(window, bins or window, band_hz[0], band_hz[1], signal_window.sample_rate_hz)
            spectrum = CztMatrix(plan, signal_window)
        elif method == SpectrumMethod.fft:
            spectrum = FftPeriodogram(signal_window, band_hz, zero_pad)
        else:
            assert False, method  # pragma: no cover

        _WriteCsv(
            pd.DataFrame(
                {
                    "freq_hz": [_Format(value) for value in spectrum.freqs_hz],
                    "magnitude": [_Format(value) for value in spectrum.values],
                },
            ),
            None,
        )


# ----------------------------------------------------------------------
@app.command("synth", no_args_is_help=True)
@use_json_config()
def SynthCommand(
    output_dir: Annotated[Path, typer.Option("--out", help="Output directory.")],
    profile: Annotated[
        str, typer.Option("--profile", help="'constant:<bpm>', 'ramp:<bpm>:<bpm>', or 'piecewise:<t>=<bpm>,...'.")
    ] = "constant:72",
    hr_range: Annotated[
        Optional[str], typer.Option("--hr-range", help="Draw a constant heart rate per trace from 'lo:hi' BPM.")
    ] = None,
    duration: Annotated[float, typer.Option("--duration", min=0.0, help="Duration in seconds.")] = 60.0,
    fs: Annotated[float, typer.Option("--fs", min=0.0, help="Sample rate in Hz.")] = 30.0,
    snr: Annotated[Optional[float], typer.Option("--snr", help="Noise SNR in dB; noiseless when omitted.")] = None,
    harmonic_amplitude: Annotated[
        float, typer.Option("--harmonic-amplitude", min=0.0, help="Relative amplitude of the 2nd harmonic.")
    ] = 0.35,
    seed: Annotated[int, typer.Option("--seed", help="Noise seed.")] = 0,
    count: Annotated[int, typer.Option("--count", min=1, help="Number of traces.")] = 1,
    name: Annotated[str, typer.Option("--name", help="Base filename of the traces.")] = "synth",
    sensor: Annotated[SensorChoice, typer.Option("--sensor", help="Reference sensor model.")] = SensorChoice.identity,
    gain: Annotated[float, typer.Option("--gain", help="Gain of the affine sensor.")] = 1.0,
    offset_bpm: Annotated[float, typer.Option("--offset-bpm", help="Offset of the affine sensor.")] = 0.0,
    verbose: Annotated[bool, _verbose_option] = False,
    debug: Annotated[bool, _debug_option] = False,
) -> None:
    """Writes synthetic traces and their ground-truth sidecars."""

    hr_range_bpm = None if hr_range is None else _ParseRange("--hr-range", hr_range)

    if sensor == SensorChoice.identity:
        sensor_model = SensorModel.Identity()
    elif sensor == SensorChoice.affine:
        sensor_model = SensorModel.Affine(gain, offset_bpm)
    elif sensor == SensorChoice.quantize:
        sensor_model = SensorModel.QuantizeToInt()
    else:
        assert False, sensor  # pragma: no cover

    with _YieldDoneManager(verbose, debug) as dm:
        rng = np.random.default_rng(seed)

        for index in range(count):
            hr_profile = (
                ParseProfile(profile)
                if hr_range_bpm is None
                else ConstantProfile(float(rng.uniform(hr_range_bpm[0], hr_range_bpm[1])))
            )

            spec = SynthSpec(
                hr_profile,
                duration,
                fs,
                harmonics=((2, harmonic_amplitude),) if harmonic_amplitude else (),
                noise_snr_db=snr,
                seed=seed + index,
            )

            gt_series = np.array([sensor_model.Apply(value) for value in InstantaneousHr(spec)])

            filename = output_dir / (
                "{}.csv".format(name) if count == 1 else "{}_{:04d}.csv".format(name, index)
            )

            WriteTrace(
                filename,
                Trace(SynthSignal(spec).samples, fs, filename.stem, gt_series=gt_series),
            )

            dm.WriteVerbose("Wrote '{}' ({}).\n".format(filename, hr_profile.ToText()))

        dm.WriteInfo("Wrote {} to '{}'.\n".format(inflect.no("trace", count), output_dir))


# ----------------------------------------------------------------------
@app.command("weights-diff", no_args_is_help=True)
@use_json_config()
def WeightsDiffCommand(
    model_filename: Annotated[Path, typer.Option("--model", help="Checkpoint file.")],
    output_filename: Annotated[
        Optional[Path], typer.Option("--out", help="CSV file; written to stdout when omitted.")
    ] = None,
    verbose: Annotated[bool, _verbose_option] = False,
    debug: Annotated[bool, _debug_option] = False,
) -> None:
    """Writes the difference between the learned and the classical weights as 'row,col,delta' CSV."""

    with _YieldDoneManager(verbose, debug) as dm:
        model = ReadCheckpoint(model_filename)
        difference = model.WeightDifference()

        rows, cols = np.indices(difference.shape)

        _WriteCsv(
            pd.DataFrame(
                {
                    "row": rows.ravel(),
                    "col": cols.ravel(),
                    "delta": [_Format(value) for value in difference.ravel()],
                },
            ),
            output_filename,
        )

        dm.WriteVerbose(
            "Mean absolute difference: {}\n".format(_Format(float(np.mean(np.abs(difference)))))
        )


# ----------------------------------------------------------------------
@app.command("version")
def VersionCommand() -> None:
    """Displays the version."""

    sys.stdout.write("{}\n".format(__version__))


# ----------------------------------------------------------------------
# ----------------------------------------------------------------------
# ----------------------------------------------------------------------
@contextmanager
def _YieldDoneManager(
    verbose: bool,
    debug: bool,
) -> Iterator[DoneManager]:
    """Status output goes to stderr; any error exits with 1."""

    with DoneManager.Create(
        sys.stderr,
        "",
        line_prefix="",
        display=False,
        suppress_exceptions=True,
        flags=DoneManagerFlags.Create(verbose=verbose, debug=debug),
    ) as dm:
        yield dm

    if dm.result < 0:
        raise typer.Exit(1)


# ----------------------------------------------------------------------
def _ParseRange(
    option_name: str,
    value: str,
) -> tuple[float, float]:
    parts = value.split(":")

    try:
        if len(parts) != 2:
            raise ValueError(value)

        low, high = float(parts[0]), float(parts[1])
    except ValueError as ex:
        raise typer.BadParameter("{} must be 'lo:hi' ({}).".format(option_name, value)) from ex

    if not 0 < low < high:
        raise typer.BadParameter("{} must satisfy 0 < lo < hi ({}).".format(option_name, value))

    return low, high


# ----------------------------------------------------------------------
def _ResolveBand(
    band: str,
    band_bpm: Optional[str],
) -> tuple[float, float]:
    if band_bpm is not None:
        low, high = _ParseRange("--band-bpm", band_bpm)
        return low / 60.0, high / 60.0

    return _ParseRange("--band", band)


# ----------------------------------------------------------------------
def _ParseMethods(
    value: str,
) -> list[Method]:
    methods: list[Method] = []

    for item in value.split(","):
        item = item.strip()
        if not item:
            continue

        try:
            method = Method(item)
        except ValueError as ex:
            raise typer.BadParameter(
                "'{}' is not a valid method; valid values are {}.".format(
                    item,
                    ", ".join(method.value for method in Method),
                ),
            ) from ex

        if method not in methods:
            methods.append(method)

    if not methods:
        raise typer.BadParameter("At least one method is required.")

    return methods


# ----------------------------------------------------------------------
def _VerifyModelOption(
    requires_model: bool,
    model_filename: Optional[Path],
) -> None:
    if requires_model and model_filename is None:
        raise typer.BadParameter("--model is required for the '{}' method.".format(Method.DeepCzt.value))


# ----------------------------------------------------------------------
def _LoadDirectory(
    dm: DoneManager,
    data_dir: Path,
    fs: Optional[float],
) -> list[Trace]:
    if not data_dir.is_dir():
        raise TraceException("The directory '{}' does not exist.".format(data_dir))

    filenames = sorted(
        filename for filename in data_dir.glob("*.csv") if not filename.name.endswith(GROUND_TRUTH_SUFFIX)
    )

    if not filenames:
        raise TraceException("'{}' does not contain any traces.".format(data_dir))

    traces = [LoadTrace(filename, sample_rate_hz=fs) for filename in filenames]
    dm.WriteVerbose("Loaded {} from '{}'.\n".format(inflect.no("trace", len(traces)), data_dir))

    return traces


# ----------------------------------------------------------------------
def _Format(
    value: float,
) -> str:
    return "{:.{}g}".format(value, SIGNIFICANT_DIGITS)


# ----------------------------------------------------------------------
def _WriteCsv(
    content: pd.DataFrame,
    output_filename: Optional[Path],
) -> None:
    text = content.to_csv(index=False, lineterminator="\n")

    if output_filename is None:
        sys.stdout.write(text)
    else:
        output_filename.parent.mkdir(parents=True, exist_ok=True)
        output_filename.write_text(text, encoding="utf-8")


# ----------------------------------------------------------------------
# ----------------------------------------------------------------------
# ----------------------------------------------------------------------
if __name__ == "__main__":
    app()  # pragma: no cover
