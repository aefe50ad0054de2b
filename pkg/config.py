import json
import logging
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

from demography import Preset, ProxySpec, get_preset, spec_from_dict
from econometrics import JohansenTrend, TrendSpec
from errors import ConfigError, DemolinkError
from ingest import DatasetKind, DatasetManifest
from linkage import FitMethod, GridSpec, ModelFit
from market import LevelKind, ReturnMode
from series import MonthStamp
from synthetic import SyntheticKind, SyntheticSpec

logger = logging.getLogger(__name__)

DATASET_KINDS = {
    "sp500": DatasetKind.SP500_DAILY,
    "population": DatasetKind.POPULATION_SYA,
    "gdp": DatasetKind.GDP_QUARTERLY,
}


class ObservedMeasure(str, Enum):
    ROLLING = "rolling"  # running sum of twelve monthly returns
    MA12 = "ma12"  # twelve-month mean of monthly returns


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"
    TABLE = "table"


@dataclass(frozen=True)
class EconometricParams:
    """Lags and deterministic terms for the test battery."""

    adf_max_lag: int = 3
    adf_trend: TrendSpec = TrendSpec.CONSTANT
    dfgls_max_lag: int = 4
    dfgls_trend: TrendSpec = TrendSpec.CONSTANT_TREND
    eg_max_lag: int = 3
    lag_select_max: int = 4
    var_lag: Optional[int] = None
    johansen_lag: int = 3
    johansen_trend: JohansenTrend = JohansenTrend.NONE

    def to_dict(self) -> dict:
        return {
            f.name: (getattr(self, f.name).value if isinstance(getattr(self, f.name), Enum) else getattr(self, f.name))
            for f in fields(self)
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EconometricParams":
        _reject_unknown(data, {f.name for f in fields(cls)}, "tests")
        params = cls(**data)
        return replace(
            params,
            adf_trend=TrendSpec(params.adf_trend),
            dfgls_trend=TrendSpec(params.dfgls_trend),
            johansen_trend=JohansenTrend(params.johansen_trend),
        )


def _reject_unknown(data: dict, known: set, where: str) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(unknown)}")


@dataclass(frozen=True)
class RunConfig:
    datasets: Dict[str, DatasetManifest] = field(default_factory=dict)
    preset: str = "postcensal-n9"
    proxy: Optional[ProxySpec] = None
    return_mode: ReturnMode = ReturnMode.SIMPLE
    observed: ObservedMeasure = ObservedMeasure.ROLLING
    level_kind: LevelKind = LevelKind.CLOSE
    fit_window: Optional[Tuple[MonthStamp, MonthStamp]] = None
    fit_method: FitMethod = FitMethod.OLS
    grid: GridSpec = field(default_factory=GridSpec)
    tests: EconometricParams = field(default_factory=EconometricParams)
    synthetic: SyntheticSpec = field(
        default_factory=lambda: SyntheticSpec(SyntheticKind.RANDOM_WALK, 207)
    )
    format: OutputFormat = OutputFormat.CSV
    seed: int = 0

    def __post_init__(self) -> None:
        if self.fit_window is not None and self.fit_window[1] < self.fit_window[0]:
            raise ConfigError(f"fit window {self.fit_window[0]}..{self.fit_window[1]} is empty")
        get_preset(self.preset)

    def resolved_preset(self) -> Preset:
        return get_preset(self.preset)

    def resolved_proxy(self) -> ProxySpec:
        """Explicit proxy spec if given, else the preset's."""
        return self.proxy if self.proxy is not None else self.resolved_preset().proxy

    def manifest(self, name: str) -> DatasetManifest:
        try:
            return self.datasets[name]
        except KeyError:
            raise ConfigError(f"no {name} dataset configured (use --{name} or the config file)") from None

    def synthetic_spec(self) -> SyntheticSpec:
        return replace(self.synthetic, seed=self.seed)

    def with_overrides(self, **overrides) -> "RunConfig":
        """Copy with every non-None override applied."""
        changes = {key: value for key, value in overrides.items() if value is not None}
        return replace(self, **changes) if changes else self

    def to_dict(self) -> dict:
        return {
            "datasets": {name: m.to_dict() for name, m in sorted(self.datasets.items())},
            "preset": self.preset,
            "proxy": self.proxy.to_dict() if self.proxy is not None else None,
            "return_mode": self.return_mode.value,
            "observed": self.observed.value,
            "level_kind": self.level_kind.value,
            "fit_window": (
                [str(self.fit_window[0]), str(self.fit_window[1])] if self.fit_window else None
            ),
            "fit_method": self.fit_method.value,
            "grid": self.grid.to_dict(),
            "tests": self.tests.to_dict(),
            "synthetic": self.synthetic.to_dict(),
            "format": self.format.value,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        _reject_unknown(data, {f.name for f in fields(cls)}, "config")
        try:
            kwargs = {}
            if "datasets" in data:
                _reject_unknown(data["datasets"], set(DATASET_KINDS), "datasets")
                kwargs["datasets"] = {
                    name: DatasetManifest.from_dict(entry, DATASET_KINDS[name])
                    for name, entry in data["datasets"].items()
                }
            if data.get("proxy") is not None:
                kwargs["proxy"] = spec_from_dict(data["proxy"])
            if data.get("fit_window") is not None:
                first, last = data["fit_window"]
                kwargs["fit_window"] = (MonthStamp.parse(first), MonthStamp.parse(last))
            if "grid" in data:
                kwargs["grid"] = GridSpec(**data["grid"])
            if "tests" in data:
                kwargs["tests"] = EconometricParams.from_dict(data["tests"])
            if "synthetic" in data:
                kwargs["synthetic"] = SyntheticSpec.from_dict(data["synthetic"])
            for name, kind in (
                ("return_mode", ReturnMode),
                ("observed", ObservedMeasure),
                ("level_kind", LevelKind),
                ("fit_method", FitMethod),
                ("format", OutputFormat),
            ):
                if name in data:
                    kwargs[name] = kind(data[name])
            if "preset" in data:
                kwargs["preset"] = str(data["preset"])
            if "seed" in data:
                kwargs["seed"] = int(data["seed"])
            return cls(**kwargs)
        except ConfigError:
            raise
        except DemolinkError as exc:
            raise ConfigError(f"invalid config: {exc.message}") from None
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from None


def load_config(path: Union[str, Path, None]) -> RunConfig:
    """
    Read a RunConfig from JSON. A previous report is accepted too: its
    ``config`` object is used.
    """
    if path is None:
        return RunConfig()
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise ConfigError(f"{p}: config file is not UTF-8 text") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    if isinstance(data, dict) and "config" in data and "provenance" in data:
        data = data["config"]
    config = RunConfig.from_dict(data)
    logger.debug("config loaded from %s", p)
    return config


def load_fit(path: Union[str, Path]) -> ModelFit:
    """Coefficients saved by ``fit``: its whole output or just the ``fit`` object."""
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read fit {p}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise ConfigError(f"{p}: fit file is not UTF-8 text") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    if isinstance(data, dict) and isinstance(data.get("fit"), dict):
        data = data["fit"]
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: expected a fit object, got JSON {type(data).__name__}")
    try:
        return ModelFit.from_dict(data)
    except DemolinkError as exc:
        raise ConfigError(f"{p}: {exc.message}") from None


def parse_window(text: Optional[str]) -> Optional[Tuple[MonthStamp, MonthStamp]]:
    """``YYYY-MM..YYYY-MM`` to a month pair."""
    if text is None:
        return None
    first, sep, last = text.partition("..")
    if not sep:
        raise ConfigError(f"window must look like YYYY-MM..YYYY-MM, got {text!r}")
    try:
        return MonthStamp.parse(first), MonthStamp.parse(last)
    except DemolinkError as exc:
        raise ConfigError(f"invalid window {text!r}: {exc.message}") from None
