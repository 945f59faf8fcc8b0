# ----------------------------------------------------------------------
# |
# |  EntryPoint_UnitTest.py
# |
# |  David Brownell <db@DavidBrownell.com>
# |      2024-03-08 16:40:17
# |
# ----------------------------------------------------------------------
# |
# |  Copyright David Brownell 2024
# |  Distributed under the MIT License.
# |
# ----------------------------------------------------------------------
"""Unit tests for EntryPoint.py"""

import io
import json

from pathlib import Path

import pandas as pd
import pytest

from click.testing import Result
from typer.testing import CliRunner

from CztHeartRate import __version__
from CztHeartRate.CommandLine.EntryPoint import app
from CztHeartRate.DeepCzt.Checkpoint import ReadCheckpoint


# ----------------------------------------------------------------------
def _Invoke(*args) -> Result:
    return CliRunner().invoke(app, [str(arg) for arg in args])


# ----------------------------------------------------------------------
def _ReadCsvOutput(
    output: str,
    header: str,
) -> pd.DataFrame:
    # Status information may be interleaved with stdout, depending on the version of click
    lines = output.splitlines()
    begin = lines.index(header)

    return pd.read_csv(io.StringIO("\n".join(lines[begin:])), keep_default_na=False)


# ----------------------------------------------------------------------
@pytest.fixture(scope="module")
def trace_path(tmp_path_factory) -> Path:
    output_dir = tmp_path_factory.mktemp("trace")

    result = _Invoke("synth", "--out", output_dir, "--profile", "constant:72", "--duration", 60)
    assert result.exit_code == 0, result.output

    return output_dir / "synth.csv"


# ----------------------------------------------------------------------
@pytest.fixture(scope="module")
def data_dir(tmp_path_factory) -> Path:
    output_dir = tmp_path_factory.mktemp("data")

    result = _Invoke(
        "synth",
        "--out",
        output_dir,
        "--hr-range",
        "50:150",
        "--count",
        4,
        "--duration",
        20,
        "--seed",
        5,
    )
    assert result.exit_code == 0, result.output

    return output_dir


# ----------------------------------------------------------------------
@pytest.fixture(scope="module")
def model_path(tmp_path_factory, data_dir) -> Path:
    output_dir = tmp_path_factory.mktemp("model")
    model_path = output_dir / "model.dczt"

    result = _Invoke(
        "train",
        "--data",
        data_dir,
        "--out",
        model_path,
        "--epochs",
        2,
        "--lr",
        1e-3,
        "--report",
        output_dir / "report.json",
    )
    assert result.exit_code == 0, result.output

    return model_path


# ----------------------------------------------------------------------
class TestSynth:
    # ----------------------------------------------------------------------
    def test_Single(self, trace_path):
        assert trace_path.is_file()
        assert trace_path.with_name("synth.gt.csv").is_file()

        content = pd.read_csv(trace_path)

        assert list(content.columns) == ["t", "ppg"]
        assert len(content) == 1800

        gt = pd.read_csv(trace_path.with_name("synth.gt.csv"))

        assert list(gt.columns) == ["t", "hr_bpm"]
        assert (gt["hr_bpm"] == 72.0).all()

    # ----------------------------------------------------------------------
    def test_Multiple(self, data_dir):
        assert sorted(path.name for path in data_dir.glob("*.csv")) == [
            "synth_0000.csv",
            "synth_0000.gt.csv",
            "synth_0001.csv",
            "synth_0001.gt.csv",
            "synth_0002.csv",
            "synth_0002.gt.csv",
            "synth_0003.csv",
            "synth_0003.gt.csv",
        ]

        for index in range(4):
            hr_bpm = pd.read_csv(data_dir / "synth_{:04d}.gt.csv".format(index))["hr_bpm"]

            assert hr_bpm.nunique() == 1
            assert 50.0 <= hr_bpm.iloc[0] <= 150.0

    # ----------------------------------------------------------------------
    def test_AffineSensor(self, tmp_path):
        result = _Invoke(
            "synth",
            "--out",
            tmp_path,
            "--profile",
            "constant:60",
            "--duration",
            5,
            "--sensor",
            "affine",
            "--offset-bpm",
            3,
        )
        assert result.exit_code == 0, result.output

        assert (pd.read_csv(tmp_path / "synth.gt.csv")["hr_bpm"] == 63.0).all()

    # ----------------------------------------------------------------------
    def test_InvalidProfile(self, tmp_path):
        result = _Invoke("synth", "--out", tmp_path, "--profile", "constant:200")

        assert result.exit_code == 1
        assert "invalid profile" in result.output

    # ----------------------------------------------------------------------
    def test_InvalidRange(self, tmp_path):
        result = _Invoke("synth", "--out", tmp_path, "--hr-range", "150:50")

        assert result.exit_code == 2


# ----------------------------------------------------------------------
class TestEstimate:
    # ----------------------------------------------------------------------
    def test_Czt(self, trace_path):
        result = _Invoke("estimate", "--input", trace_path, "--method", "czt")
        assert result.exit_code == 0, result.output

        content = _ReadCsvOutput(result.stdout, "window_index,t_start_s,hr_bpm,confidence,skip_reason")

        assert list(content["window_index"]) == list(range(7))
        assert content["t_start_s"].iloc[1] == pytest.approx(256 / 30.0, rel=1e-5)
        assert all(abs(value - 72.0) <= 0.5 for value in content["hr_bpm"])

    # ----------------------------------------------------------------------
    def test_BandBpm(self, trace_path):
        result = _Invoke("estimate", "--input", trace_path, "--band-bpm", "40:180", "--window", 512)
        assert result.exit_code == 0, result.output

        content = _ReadCsvOutput(result.stdout, "window_index,t_start_s,hr_bpm,confidence,skip_reason")

        assert len(content) == 3
        assert all(abs(value - 72.0) <= 0.5 for value in content["hr_bpm"])

    # ----------------------------------------------------------------------
    def test_DeepWithoutModel(self, trace_path):
        result = _Invoke("estimate", "--input", trace_path, "--method", "deep")

        assert result.exit_code == 2
        assert "--model is required" in result.output

    # ----------------------------------------------------------------------
    def test_Deep(self, trace_path, model_path):
        result = _Invoke("estimate", "--input", trace_path, "--method", "deep", "--model", model_path)
        assert result.exit_code == 0, result.output

        content = _ReadCsvOutput(result.stdout, "window_index,t_start_s,hr_bpm,confidence,skip_reason")

        assert len(content) == 7

    # ----------------------------------------------------------------------
    def test_MissingFile(self, tmp_path):
        result = _Invoke("estimate", "--input", tmp_path / "missing.csv")

        assert result.exit_code == 1
        assert "does not exist" in result.output

    # ----------------------------------------------------------------------
    def test_InvalidArguments(self, trace_path):
        assert _Invoke("estimate", "--input", trace_path, "--overlap", 256).exit_code == 2
        assert _Invoke("estimate", "--input", trace_path, "--band", "3.0:0.66").exit_code == 2
        assert _Invoke("estimate", "--input", trace_path, "--band", "0:3.0").exit_code == 2
        assert _Invoke("estimate", "--input", trace_path, "--band", "invalid").exit_code == 2
        assert _Invoke("estimate", "--input", trace_path, "--method", "invalid").exit_code == 2


# ----------------------------------------------------------------------
class TestSpectrum:
    # ----------------------------------------------------------------------
    def test_Czt(self, trace_path):
        result = _Invoke("spectrum", "--input", trace_path, "--window-index", 2)
        assert result.exit_code == 0, result.output

        content = _ReadCsvOutput(result.stdout, "freq_hz,magnitude")

        assert len(content) == 256
        assert content["freq_hz"].iloc[0] == pytest.approx(0.66)
        assert content["freq_hz"].iloc[-1] == pytest.approx(3.0)
        assert abs(60.0 * content["freq_hz"].iloc[content["magnitude"].idxmax()] - 72.0) <= 0.5

    # ----------------------------------------------------------------------
    def test_Bins(self, trace_path):
        result = _Invoke("spectrum", "--input", trace_path, "--bins", 64)
        assert result.exit_code == 0, result.output

        assert len(_ReadCsvOutput(result.stdout, "freq_hz,magnitude")) == 64

    # ----------------------------------------------------------------------
    def test_Fft(self, trace_path):
        result = _Invoke("spectrum", "--input", trace_path, "--method", "fft")
        assert result.exit_code == 0, result.output

        content = _ReadCsvOutput(result.stdout, "freq_hz,magnitude")

        assert content["freq_hz"].iloc[1] - content["freq_hz"].iloc[0] == pytest.approx(30.0 / 256, rel=1e-4)
        assert content["freq_hz"].iloc[0] >= 0.66
        assert content["freq_hz"].iloc[-1] <= 3.0

    # ----------------------------------------------------------------------
    def test_InvalidWindowIndex(self, trace_path):
        result = _Invoke("spectrum", "--input", trace_path, "--window-index", 100)

        assert result.exit_code == 1
        assert "The window index 100 is outside of [0, 7)" in result.output


# ----------------------------------------------------------------------
class TestSweep:
    # ----------------------------------------------------------------------
    def test_Standard(self, trace_path):
        result = _Invoke("sweep", "--input", trace_path, "--sizes", "64,256", "--methods", "fft,czt")
        assert result.exit_code == 0, result.output

        content = _ReadCsvOutput(result.stdout, "size,method,mae_bpm,num_estimates,num_skipped")

        assert [(row.size, row.method) for row in content.itertuples()] == [
            (64, "fft"),
            (64, "czt"),
            (256, "fft"),
            (256, "czt"),
        ]

        assert list(content["num_estimates"]) == [28, 28, 7, 7]
        assert (content["num_skipped"] == 0).all()

        czt_256 = content[(content["size"] == 256) & (content["method"] == "czt")]["mae_bpm"].iloc[0]
        assert czt_256 <= 0.5

    # ----------------------------------------------------------------------
    def test_DeepSkipsOtherSizes(self, trace_path, model_path):
        result = _Invoke(
            "sweep",
            "--input",
            trace_path,
            "--sizes",
            "128,256",
            "--methods",
            "czt,deep",
            "--model",
            model_path,
        )
        assert result.exit_code == 0, result.output

        content = _ReadCsvOutput(result.stdout, "size,method,mae_bpm,num_estimates,num_skipped")

        assert [(row.size, row.method) for row in content.itertuples()] == [
            (128, "czt"),
            (128, "deep"),
            (256, "czt"),
            (256, "deep"),
        ]

        assert list(content["num_estimates"]) == [14, 0, 7, 7]
        assert list(content["num_skipped"]) == [0, 14, 0, 0]
        assert content["mae_bpm"].iloc[1] == ""

    # ----------------------------------------------------------------------
    def test_InvalidSizes(self, trace_path):
        assert _Invoke("sweep", "--input", trace_path, "--sizes", "64,abc").exit_code == 2
        assert _Invoke("sweep", "--input", trace_path, "--sizes", "1").exit_code == 2


# ----------------------------------------------------------------------
class TestTrain:
    # ----------------------------------------------------------------------
    def test_Report(self, model_path):
        report = json.loads(model_path.with_name("report.json").read_text())

        assert report["epochs_run"] == 2
        assert report["unregularized"] is False
        assert report["num_train"] + report["num_val"] == 8

        model = ReadCheckpoint(model_path)

        assert model.n_input == 256
        assert model.plan.f_start_hz == 0.66
        assert model.plan.f_end_hz == 3.0

    # ----------------------------------------------------------------------
    def test_Deterministic(self, tmp_path, data_dir):
        for name in ["first", "second"]:
            result = _Invoke(
                "train",
                "--data",
                data_dir,
                "--out",
                tmp_path / "{}.dczt".format(name),
                "--epochs",
                2,
                "--seed",
                3,
                "--report",
                tmp_path / "{}.json".format(name),
            )
            assert result.exit_code == 0, result.output

        assert (tmp_path / "first.dczt").read_bytes() == (tmp_path / "second.dczt").read_bytes()
        assert (tmp_path / "first.json").read_text() == (tmp_path / "second.json").read_text()

    # ----------------------------------------------------------------------
    def test_Unregularized(self, tmp_path, data_dir):
        result = _Invoke(
            "train",
            "--data",
            data_dir,
            "--out",
            tmp_path / "model.dczt",
            "--epochs",
            1,
            "--beta",
            0,
            "--loss",
            "ce",
            "--report",
            tmp_path / "report.json",
        )
        assert result.exit_code == 0, result.output

        report = json.loads((tmp_path / "report.json").read_text())

        assert report["unregularized"] is True
        assert report["loss"] == "ce"

    # ----------------------------------------------------------------------
    def test_Errors(self, tmp_path):
        result = _Invoke("train", "--data", tmp_path / "missing", "--out", tmp_path / "model.dczt")

        assert result.exit_code == 1
        assert "does not exist" in result.output
        assert not (tmp_path / "model.dczt").exists()

        result = _Invoke("train", "--data", tmp_path, "--out", tmp_path / "model.dczt", "--alpha", 0, "--beta", 0)
        assert result.exit_code == 2


# ----------------------------------------------------------------------
class TestEvaluate:
    # ----------------------------------------------------------------------
    def test_Files(self, tmp_path, data_dir):
        result = _Invoke(
            "evaluate",
            "--data",
            data_dir,
            "--out",
            tmp_path / "rows.csv",
            "--json",
            tmp_path / "metrics.json",
        )
        assert result.exit_code == 0, result.output

        rows = pd.read_csv(tmp_path / "rows.csv", keep_default_na=False)

        assert list(rows.columns) == ["subject", "window_index", "method", "pred_bpm", "gt_bpm", "skip_reason"]
        assert len(rows) == 4 * 2 * 2

        metrics = json.loads((tmp_path / "metrics.json").read_text())

        assert metrics["window_size"] == 256
        assert list(metrics["methods"]) == ["fft", "czt"]
        assert metrics["methods"]["czt"]["mae"] < metrics["methods"]["fft"]["mae"]

    # ----------------------------------------------------------------------
    def test_Deep(self, tmp_path, trace_path, model_path):
        result = _Invoke(
            "evaluate",
            "--input",
            trace_path,
            "--methods",
            "czt,deep",
            "--model",
            model_path,
            "--json",
            tmp_path / "metrics.json",
            "--out",
            tmp_path / "rows.csv",
        )
        assert result.exit_code == 0, result.output

        metrics = json.loads((tmp_path / "metrics.json").read_text())

        assert metrics["methods"]["deep"]["num_windows"] == 7

    # ----------------------------------------------------------------------
    def test_Config(self, tmp_path, trace_path):
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({"methods": "czt", "window": 512}))

        result = _Invoke("evaluate", "--config", config_path, "--input", trace_path, "--out", tmp_path / "rows.csv")
        assert result.exit_code == 0, result.output

        rows = pd.read_csv(tmp_path / "rows.csv")

        assert list(rows["method"]) == ["czt", "czt", "czt"]

    # ----------------------------------------------------------------------
    def test_Errors(self, trace_path):
        assert _Invoke("evaluate", "--methods", "czt").exit_code == 2
        assert _Invoke("evaluate", "--input", trace_path, "--methods", "czt,deep").exit_code == 2
        assert _Invoke("evaluate", "--input", trace_path, "--methods", "czt,unknown").exit_code == 2

    # ----------------------------------------------------------------------
    def test_ModelWindowMismatch(self, tmp_path, trace_path, model_path):
        result = _Invoke(
            "evaluate",
            "--input",
            trace_path,
            "--methods",
            "deep",
            "--model",
            model_path,
            "--window",
            512,
            "--out",
            tmp_path / "rows.csv",
        )

        assert result.exit_code == 1
        assert "256-sample windows" in result.output


# ----------------------------------------------------------------------
def test_WeightsDiff(tmp_path, model_path):
    result = _Invoke("weights-diff", "--model", model_path, "--out", tmp_path / "diff.csv")
    assert result.exit_code == 0, result.output

    content = pd.read_csv(tmp_path / "diff.csv")

    assert list(content.columns) == ["row", "col", "delta"]
    assert len(content) == 256 * 512
    assert content["delta"].abs().max() > 0.0


# ----------------------------------------------------------------------
def test_Version():
    result = _Invoke("version")

    assert result.exit_code == 0
    assert result.stdout.strip() == __version__
