"""
Tests for the run configuration
"""

import json
from pathlib import Path

import pytest

from config import (
    EconometricParams,
    ObservedMeasure,
    OutputFormat,
    RunConfig,
    load_config,
    load_fit,
    parse_window,
)
from demography import AgeAveraging, ProxySpec
from econometrics import JohansenTrend, TrendSpec
from errors import ConfigError
from ingest import DatasetKind
from linkage import FitMethod, ModelFit
from market import ReturnMode
from series import MonthStamp


class TestRunConfig:
    """Tests for RunConfig"""

    def test_defaults(self):
        """Test the default preset, measure and test parameters"""
        config = RunConfig()

        assert config.preset == "postcensal-n9"
        assert config.return_mode == ReturnMode.SIMPLE
        assert config.observed == ObservedMeasure.ROLLING
        assert config.tests.johansen_lag == 3
        assert config.tests.johansen_trend == JohansenTrend.NONE
        assert config.format == OutputFormat.CSV

    def test_unknown_preset(self):
        """Test that an unknown preset is a config error"""
        with pytest.raises(ConfigError):
            RunConfig(preset="n42")

    def test_empty_window(self):
        """Test that a window ending before it starts is rejected"""
        with pytest.raises(ConfigError):
            RunConfig(fit_window=(MonthStamp(2001, 1), MonthStamp(2000, 1)))

    def test_explicit_proxy_wins(self):
        """Test that an explicit proxy spec overrides the preset's"""
        proxy = ProxySpec(11, AgeAveraging.NONE)

        assert RunConfig(proxy=proxy).resolved_proxy() == proxy
        assert RunConfig().resolved_proxy().anchor_age == 9

    def test_missing_dataset(self):
        """Test that asking for an unconfigured dataset names it"""
        with pytest.raises(ConfigError, match="no gdp dataset"):
            RunConfig().manifest("gdp")

    def test_overrides_skip_none(self):
        """Test that None overrides leave fields alone"""
        config = RunConfig().with_overrides(preset="n3-forecast", seed=None)

        assert config.preset == "n3-forecast"
        assert config.seed == 0

    def test_synthetic_spec_uses_seed(self):
        """Test that the run seed reaches the synthetic spec"""
        assert RunConfig(seed=17).synthetic_spec().seed == 17

    def test_dict_round_trip(self, tmp_path):
        """Test to_dict/from_dict on a populated config"""
        data = {
            "datasets": {"sp500": {"path": str(tmp_path / "s.csv")}},
            "preset": "n7-forecast",
            "return_mode": "log",
            "fit_window": ["1991-01", "2001-12"],
            "tests": {"adf_max_lag": 2, "johansen_trend": "rconstant"},
            "seed": 5,
        }
        config = RunConfig.from_dict(data)

        assert config.datasets["sp500"].kind == DatasetKind.SP500_DAILY
        assert config.tests.johansen_trend == JohansenTrend.RCONSTANT
        assert config.fit_window == (MonthStamp(1991, 1), MonthStamp(2001, 12))
        assert RunConfig.from_dict(config.to_dict()) == config

    def test_to_dict_is_json(self):
        """Test that the serialized config is plain JSON"""
        text = json.dumps(RunConfig().to_dict())

        assert json.loads(text)["tests"]["adf_trend"] == "constant"

    @pytest.mark.parametrize(
        "data",
        [
            {"colour": "red"},
            {"datasets": {"bonds": {"path": "b.csv"}}},
            {"tests": {"adf_lags": 3}},
            {"return_mode": "geometric"},
            {"fit_window": ["1991-01"]},
            {"proxy": {"age_averaging": "none"}},
            {"synthetic": {"kind": "random_walk", "length": 3}},
        ],
    )
    def test_invalid(self, data):
        """Test that malformed configs are config errors"""
        with pytest.raises(ConfigError):
            RunConfig.from_dict(data)


class TestEconometricParams:
    """Tests for EconometricParams"""

    def test_trend_names(self):
        """Test that trends are converted from their names"""
        params = EconometricParams.from_dict({"adf_trend": "constant_trend"})

        assert params.adf_trend == TrendSpec.CONSTANT_TREND
        assert params.to_dict()["adf_trend"] == "constant_trend"

    def test_dfgls_defaults_to_trend_case(self):
        """Test that DF-GLS detrends with constant and trend unless told otherwise"""
        assert EconometricParams().dfgls_trend == TrendSpec.CONSTANT_TREND
        assert EconometricParams().adf_trend == TrendSpec.CONSTANT


class TestLoadConfig:
    """Tests for load_config and parse_window"""

    def test_no_file(self):
        """Test the default config without a file"""
        assert load_config(None) == RunConfig()

    def test_missing_file(self, tmp_path):
        """Test that an unreadable path is a config error"""
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        """Test that broken JSON names the file and line"""
        path = tmp_path / "bad.json"
        path.write_text('{\n  "preset": \n}\n')

        with pytest.raises(ConfigError, match=r"bad\.json:3"):
            load_config(path)

    def test_report_as_config(self, tmp_path):
        """Test that a previous report's config block is reused"""
        path = tmp_path / "report.json"
        config = RunConfig(preset="n17-backcast", seed=9)
        path.write_text(json.dumps({"config": config.to_dict(), "provenance": {}}))

        assert load_config(Path(path)) == config

    def test_parse_window(self):
        """Test YYYY-MM..YYYY-MM"""
        assert parse_window("1991-01..2001-12") == (MonthStamp(1991, 1), MonthStamp(2001, 12))
        assert parse_window(None) is None

    @pytest.mark.parametrize("text", ["1991-01", "1991-01..2001", "1991-01-2001-12"])
    def test_parse_window_invalid(self, text):
        """Test malformed windows"""
        with pytest.raises(ConfigError):
            parse_window(text)


class TestLoadFit:
    """Tests for load_fit"""

    FIT = ModelFit(
        v1=170.0,
        v2=-0.04,
        residual_mean=0.0,
        residual_std=0.05,
        n_obs=120,
        fit_window=(MonthStamp(1991, 1), MonthStamp(2000, 12)),
        method=FitMethod.OLS,
    )

    def test_whole_fit_output(self, tmp_path):
        """Test that the fit command's full JSON output is accepted"""
        path = tmp_path / "fit.json"
        path.write_text(json.dumps({"fit": self.FIT.to_dict(), "config": {}}))

        assert load_fit(path) == self.FIT

    def test_bare_fit_object(self, tmp_path):
        """Test that a bare fit object is accepted"""
        path = tmp_path / "fit.json"
        path.write_text(json.dumps(self.FIT.to_dict()))

        assert load_fit(path) == self.FIT

    def test_invalid_json(self, tmp_path):
        """Test that broken JSON is a config error naming the line"""
        path = tmp_path / "fit.json"
        path.write_text("{not json")

        with pytest.raises(ConfigError, match=r"fit\.json:1"):
            load_fit(path)

    def test_not_an_object(self, tmp_path):
        """Test that a JSON array is rejected"""
        path = tmp_path / "fit.json"
        path.write_text("[1, 2]")

        with pytest.raises(ConfigError, match="got JSON list"):
            load_fit(path)

    def test_missing_key(self, tmp_path):
        """Test that an incomplete fit object is a config error"""
        path = tmp_path / "fit.json"
        path.write_text(json.dumps({"v1": 1.0}))

        with pytest.raises(ConfigError):
            load_fit(path)

    def test_missing_file(self, tmp_path):
        """Test that an absent file is a config error"""
        with pytest.raises(ConfigError, match="cannot read fit"):
            load_fit(tmp_path / "absent.json")
