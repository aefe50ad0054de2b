"""
Tests for CLI commands (returns, proxy, fit, predict, compare, the test battery, synthetic, report)
"""

import json

import pytest
from click.testing import CliRunner

from cli import cli
from demolink_gen import GDP_FILE, POPULATION_FILE, SP500_FILE


@pytest.fixture
def data_args(bundle_dir):
    """Dataset flags pointing at the synthetic bundle"""
    return [
        "--sp500",
        str(bundle_dir / SP500_FILE),
        "--population",
        str(bundle_dir / POPULATION_FILE),
        "--gdp",
        str(bundle_dir / GDP_FILE),
    ]


def run(args):
    result = CliRunner().invoke(cli, args)
    return result


class TestSeriesCommands:
    """Tests for returns, proxy and predict"""

    def test_returns_csv(self, data_args):
        """Test the month,value layout of the rolling return"""
        result = run(["returns", *data_args])

        assert result.exit_code == 0
        lines = result.stdout.splitlines()
        assert lines[0] == "month,value"
        assert lines[1].startswith("1981-01,")

    def test_returns_json(self, data_args):
        """Test the JSON series payload"""
        result = run(["--format", "json", "returns", "--series", "monthly", *data_args])

        assert result.exit_code == 0
        payload = json.loads(result.stdout)
        assert payload["label"] == "returns.monthly"
        assert payload["start"] == "1980-02"

    def test_verbose_keeps_stdout_clean(self, data_args):
        """Test that progress logging stays off stdout"""
        result = run(["-vv", "returns", *data_args])

        assert result.exit_code == 0
        assert result.stdout.startswith("month,value\n")

    def test_proxy_levels(self, data_args):
        """Test the proxy level series"""
        result = run(["proxy", "--level", *data_args])

        assert result.exit_code == 0
        assert result.stdout.splitlines()[0] == "month,value"

    def test_list_presets(self):
        """Test that presets are listed without any dataset"""
        result = run(["--format", "json", "proxy", "--list-presets"])

        assert result.exit_code == 0
        names = [p["name"] for p in json.loads(result.stdout)["presets"]]
        assert names == ["postcensal-n9", "intercensal-n9", "n7-forecast", "n17-backcast", "n3-forecast"]

    def test_table_format(self):
        """Test the rich table rendering"""
        result = run(["--format", "table", "proxy", "--list-presets"])

        assert result.exit_code == 0
        assert "presets" in result.stdout
        assert not result.stdout.lstrip().startswith("{")

    def test_predict_constant(self, data_args):
        """Test that a zero slope predicts the intercept everywhere"""
        result = run(["predict", "--v1", "0", "--v2=-0.04", *data_args])

        assert result.exit_code == 0
        values = [line.split(",")[1] for line in result.stdout.splitlines()[1:]]
        assert values
        assert set(values) == {"-0.04"}

    def test_predict_from_saved_fit(self, data_args, tmp_path):
        """Test that --fit reuses the coefficients written by fit"""
        fit_path = tmp_path / "fit.json"
        assert run(["--out", str(fit_path), "fit", *data_args]).exit_code == 0
        saved = json.loads(fit_path.read_text())["fit"]

        from_file = run(["predict", "--fit", str(fit_path), *data_args])
        from_flags = run(["predict", f"--v1={saved['v1']!r}", f"--v2={saved['v2']!r}", *data_args])

        assert from_file.exit_code == 0
        assert from_file.stdout == from_flags.stdout


class TestCompareCommand:
    """Tests for compare"""

    def test_csv(self, data_args):
        """Test the month,observed,predicted layout"""
        result = run(["compare", *data_args])

        assert result.exit_code == 0
        lines = result.stdout.splitlines()
        assert lines[0] == "month,observed,predicted"
        assert lines[1].startswith("1981-01,")

    def test_reported_splice(self, data_args):
        """Test the built-in backcast-then-postcensal splice"""
        result = run(["--format", "json", "compare", "--splice", "n17-n9", *data_args])

        assert result.exit_code == 0
        payload = json.loads(result.stdout)
        assert (payload["start"], payload["end"]) == ("1985-01", "2009-12")
        assert [row["v1"] for row in payload["segments"]] == [35.0, 170.0]
        assert {row["coefficients"] for row in payload["segments"]} == {"given"}

    def test_fitted_segments(self, data_args):
        """Test --segment with fitted and given coefficients"""
        result = run(
            [
                "--format",
                "json",
                "compare",
                "--segment",
                "1990-01..1999-12",
                "--segment",
                "2000-01..2009-12:intercensal-n9:165,-0.055",
                *data_args,
            ]
        )

        assert result.exit_code == 0
        segments = json.loads(result.stdout)["segments"]
        assert [row["coefficients"] for row in segments] == ["fitted", "given"]
        assert segments[1]["predictor"] == "intercensal-n9"

    def test_segments_not_consecutive(self, data_args):
        """Test that a gap between segments exits with 2"""
        result = run(["compare", "--segment", "1990-01..1994-12", "--segment", "1996-01..1999-12", *data_args])

        assert result.exit_code == 2
        assert result.stderr.startswith("demolink: error[CONFIG]")

    def test_splice_and_segment_exclusive(self, data_args):
        """Test that --splice and --segment cannot be combined"""
        result = run(["compare", "--splice", "n17-n9", "--segment", "1990-01..1994-12", *data_args])

        assert result.exit_code == 2
        assert result.stdout == ""


class TestFitCommand:
    """Tests for fit"""

    def test_fit_payload(self, data_args):
        """Test the fit output keys and provenance"""
        result = run(["fit", *data_args])

        assert result.exit_code == 0
        payload = json.loads(result.stdout)
        assert set(payload) == {"config", "provenance", "fit", "fit_summary", "naive_residual_std"}
        assert payload["fit"]["method"] == "ols"
        assert payload["provenance"]["predictor"] == "population"
        assert payload["provenance"]["smoothing"]["population"] is not None

    def test_fit_gdp(self, data_args):
        """Test the GDP predictor source"""
        result = run(["fit", "--source", "gdp", *data_args])

        assert result.exit_code == 0
        payload = json.loads(result.stdout)
        assert payload["provenance"]["predictor"] == "gdp"
        assert payload["naive_residual_std"] is None

    def test_fit_window(self, data_args):
        """Test that the fit window is respected"""
        result = run(["fit", "--window", "1991-01..2001-12", *data_args])

        assert result.exit_code == 0
        assert json.loads(result.stdout)["fit"]["fit_window"] == ["1991-01", "2001-12"]


class TestBatteryCommands:
    """Tests for unit-root, cointegrate, johansen and lag-select"""

    def test_unit_root(self, data_args):
        """Test one report per series and test"""
        result = run(["unit-root", "--series", "observed", "--series", "residual", "--test", "adf", *data_args])

        assert result.exit_code == 0
        reports = json.loads(result.stdout)["reports"]
        assert [r["series"] for r in reports] == ["observed", "residual"]
        assert {r["test"] for r in reports} == {"adf"}

    def test_unit_root_difference(self, data_args):
        """Test first-difference labels and the max-lag override"""
        result = run(["unit-root", "--difference", "--max-lag", "2", *data_args])

        assert result.exit_code == 0
        reports = json.loads(result.stdout)["reports"]
        assert [(r["series"], r["test"]) for r in reports] == [("d.observed", "adf"), ("d.observed", "dfgls")]
        assert all(len(r["per_lag"]) == 3 for r in reports)

    def test_unit_root_trend_none_runs_adf_only(self, data_args):
        """Test that --trend none with both tests falls back to ADF"""
        result = run(["unit-root", "--trend", "none", *data_args])

        assert result.exit_code == 0
        reports = json.loads(result.stdout)["reports"]
        assert [(r["test"], r["trend"]) for r in reports] == [("adf", "none")]

    def test_unit_root_dfgls_trend_none(self, data_args):
        """Test that DF-GLS alone rejects --trend none"""
        result = run(["unit-root", "--test", "dfgls", "--trend", "none", *data_args])

        assert result.exit_code == 2
        assert "--trend" in result.stderr

    def test_unit_root_default_dfgls_trend(self, data_args):
        """Test that DF-GLS runs the trend case against its own table by default"""
        result = run(["unit-root", "--test", "dfgls", *data_args])

        assert result.exit_code == 0
        report = json.loads(result.stdout)["reports"][0]
        assert report["trend"] == "constant_trend"
        assert report["critical_source"] == "ers-1996"

    def test_cointegrate(self, data_args):
        """Test the pre-fit residual mode"""
        result = run(["cointegrate", *data_args])

        assert result.exit_code == 0
        test = json.loads(result.stdout)["test"]
        assert test["trend"] == "none"
        assert test["critical_source"] == "fuller-1976"

    def test_cointegrate_two_step(self, data_args):
        """Test the two-step mode"""
        result = run(["cointegrate", "--two-step", *data_args])

        assert result.exit_code == 0
        payload = json.loads(result.stdout)
        assert len(payload["first_step"]["coefficients"]) == 2
        assert payload["test"]["critical_source"] == "mackinnon-2010-eg"

    def test_johansen(self, data_args):
        """Test the rank table"""
        result = run(["johansen", "--lag", "2", "--trend", "rconstant", *data_args])

        assert result.exit_code == 0
        jo = json.loads(result.stdout)["johansen"]
        assert jo["lag"] == 2
        assert jo["trend"] == "rconstant"
        assert [row["rank"] for row in jo["ranks"]] == [0, 1, 2]

    def test_lag_select(self, data_args):
        """Test the lag-selection table"""
        result = run(["lag-select", "--max-lag", "3", *data_args])

        assert result.exit_code == 0
        table = json.loads(result.stdout)["lag_selection"]
        assert [row["lag"] for row in table["rows"]] == [0, 1, 2, 3]
        assert set(table["selected"]) == {"lr", "fpe", "aic", "hqic", "sbic"}


class TestSyntheticCommand:
    """Tests for synthetic"""

    def test_deterministic(self):
        """Test that the same seed gives the same bytes"""
        first = run(["--seed", "3", "synthetic", "--length", "20"])
        second = run(["--seed", "3", "synthetic", "--length", "20"])

        assert first.exit_code == 0
        assert first.stdout == second.stdout
        lines = first.stdout.splitlines()
        assert lines[0] == "t,value"
        assert len(lines) == 21

    def test_pair_columns(self):
        """Test the header of a two-column draw"""
        result = run(["synthetic", "--kind", "cointegrated_pair", "--length", "30"])

        assert result.exit_code == 0
        assert result.stdout.splitlines()[0] == "t,x1,x2"

    def test_var_coefficients(self):
        """Test VAR matrices passed as JSON"""
        result = run(["synthetic", "--kind", "var_p", "--length", "30", "--var-coefs", "[[[0.5, 0.0], [0.0, 0.5]]]"])

        assert result.exit_code == 0
        assert result.stdout.splitlines()[0] == "t,x1,x2"

    def test_invalid_spec(self):
        """Test that a too-short series is a spec error with exit code 2"""
        result = run(["synthetic", "--length", "5"])

        assert result.exit_code == 2
        assert result.stderr.startswith("demolink: error[SPEC]")


class TestReportCommand:
    """Tests for report"""

    def test_report_is_reproducible(self, data_args, tmp_path):
        """Test that two runs write identical bytes"""
        first, second = tmp_path / "a.json", tmp_path / "b.json"

        assert run(["--out", str(first), "report", *data_args]).exit_code == 0
        assert run(["--out", str(second), "report", *data_args]).exit_code == 0
        assert first.read_bytes() == second.read_bytes()

    def test_report_sections(self, data_args):
        """Test the report layout"""
        result = run(["report", *data_args])

        assert result.exit_code == 0
        payload = json.loads(result.stdout)
        assert set(payload) == {
            "config",
            "provenance",
            "fit",
            "fit_summary",
            "naive_residual_std",
            "unit_root",
            "engle_granger",
            "lag_selection",
            "var",
            "johansen",
        }
        assert len(payload["unit_root"]) == 8

    def test_report_as_config(self, data_args, tmp_path):
        """Test that a saved report can be replayed as the config"""
        saved = tmp_path / "report.json"
        assert run(["--out", str(saved), "report", "--preset", "intercensal-n9", *data_args]).exit_code == 0

        result = run(["--config", str(saved), "fit"])

        assert result.exit_code == 0
        assert json.loads(result.stdout)["config"]["preset"] == "intercensal-n9"


class TestErrors:
    """Tests for error reporting and exit codes"""

    def test_missing_dataset(self):
        """Test that a missing dataset is a config error"""
        result = run(["returns"])

        assert result.exit_code == 2
        assert result.stderr.startswith("demolink: error[CONFIG]")
        assert result.stdout == ""

    def test_unknown_preset(self, data_args):
        """Test that an unknown preset exits with 2"""
        result = run(["fit", "--preset", "n99", *data_args])

        assert result.exit_code == 2
        assert "error[CONFIG]" in result.stderr

    def test_parse_error(self, tmp_path):
        """Test that a malformed file exits with 1 and names the line"""
        path = tmp_path / "sp500.csv"
        path.write_text("date,close\n2000-01-03,1.0\n2000-01-03,2.0\n")

        result = run(["returns", "--sp500", str(path)])

        assert result.exit_code == 1
        assert result.stderr.startswith("demolink: error[PARSE]")
        assert ":3:" in result.stderr

    def test_bad_config_file(self, tmp_path):
        """Test that an unreadable config exits with 2"""
        path = tmp_path / "config.json"
        path.write_text("{not json")

        result = run(["--config", str(path), "returns"])

        assert result.exit_code == 2
        assert "error[CONFIG]" in result.stderr

    def test_malformed_fit_file(self, data_args, tmp_path):
        """Test that a fit file with broken JSON is a config error"""
        path = tmp_path / "fit.json"
        path.write_text("{not json")

        result = run(["predict", "--fit", str(path), *data_args])

        assert result.exit_code == 2
        assert result.stderr.startswith("demolink: error[CONFIG]")
        assert "Traceback" not in result.stderr

    def test_fit_file_not_an_object(self, data_args, tmp_path):
        """Test that a JSON array is not accepted as a fit"""
        path = tmp_path / "fit.json"
        path.write_text("[1, 2]")

        result = run(["predict", "--fit", str(path), *data_args])

        assert result.exit_code == 2
        assert result.stderr.startswith("demolink: error[CONFIG]")

    def test_out_in_missing_directory(self, data_args, tmp_path):
        """Test that an unwritable --out exits with 1 and an IO error"""
        target = tmp_path / "missing" / "x.csv"

        result = run(["--out", str(target), "returns", *data_args])

        assert result.exit_code == 1
        assert result.stderr.startswith("demolink: error[IO]")
        assert result.stdout == ""
        assert not target.exists()

    def test_table_out_in_missing_directory(self, tmp_path):
        """Test the IO error for table output as well"""
        result = run(["--format", "table", "--out", str(tmp_path / "missing" / "t.txt"), "proxy", "--list-presets"])

        assert result.exit_code == 1
        assert result.stderr.startswith("demolink: error[IO]")
