"""
Pipeline assembly and output rendering.

``Pipeline`` builds the observed and predicted return series lazily from a
RunConfig, so a subcommand only loads the datasets it actually needs.
``build_report`` runs the whole chain (fit, unit-root battery, Engle-Granger,
lag selection, VAR, Johansen) into a self-describing RunReport.
"""

import json
import logging
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from rich import box
from rich.console import Console
from rich.table import Table

from config import ObservedMeasure, RunConfig, parse_window
from demography import PRESETS, cohort_proxy, get_preset, predictor_dln
from econometrics import (
    JohansenReport,
    LagSelectionTable,
    OlsResult,
    UnitRootReport,
    UnitRootTest,
    VarModel,
    adf_test,
    dfgls_test,
    eg_residual_test,
    eg_two_step,
    johansen,
    lag_select,
    var_fit,
)
from errors import AlignmentError, ConfigError
from ingest import load_gdp, load_population, load_sp500
from linkage import (
    ANNUALIZATION,
    GDP_SMOOTHING,
    GDP_V1,
    GDP_V2,
    ModelFit,
    fit_linear,
    fit_summary,
    gdp_predictor,
    naive_residual_std,
    predict_returns,
    residual_series,
    smooth_predicted,
)
from market import (
    ANNUAL_WINDOW,
    annual_return,
    cumulative_return,
    mean_close_divergence,
    monthly_levels,
    monthly_returns,
    monthly_volatility,
    rolling_annual_return,
)
from series import MonthlySeries, MonthStamp, SmoothSpec, align, describe, ma

logger = logging.getLogger(__name__)


class PredictorSource(str, Enum):
    POPULATION = "population"
    GDP = "gdp"


class ReturnsView(str, Enum):
    ROLLING = "rolling"
    ANNUAL = "annual"
    MONTHLY = "monthly"
    CUMULATIVE = "cumulative"
    VOLATILITY = "volatility"
    DIVERGENCE = "divergence"
    MA12 = "ma12"


# -----------------------------
# Pipeline
# -----------------------------


class Pipeline:
    """Lazily evaluated series chain for one configuration."""

    def __init__(
        self,
        config: RunConfig,
        source: PredictorSource = PredictorSource.POPULATION,
        coefficients: Optional[Tuple[float, float]] = None,
    ) -> None:
        self.config = config
        self.source = PredictorSource(source)
        self.explicit = coefficients

    @cached_property
    def daily(self):
        return load_sp500(self.config.manifest("sp500"))

    @cached_property
    def levels(self) -> MonthlySeries:
        return monthly_levels(self.daily, self.config.level_kind)

    def returns(self, view: ReturnsView) -> MonthlySeries:
        mode = self.config.return_mode
        view = ReturnsView(view)
        if view == ReturnsView.ROLLING:
            return rolling_annual_return(self.levels, mode)
        if view == ReturnsView.ANNUAL:
            return annual_return(self.levels, mode)
        if view == ReturnsView.MONTHLY:
            return monthly_returns(self.levels, mode)
        if view == ReturnsView.CUMULATIVE:
            return cumulative_return(monthly_returns(self.levels, mode))
        if view == ReturnsView.VOLATILITY:
            return monthly_volatility(self.daily)
        if view == ReturnsView.DIVERGENCE:
            return mean_close_divergence(self.daily)
        return ma(monthly_returns(self.levels, mode), SmoothSpec(ANNUAL_WINDOW))

    @cached_property
    def observed(self) -> MonthlySeries:
        """R_o(t) in the configured measure."""
        if self.config.observed == ObservedMeasure.ROLLING:
            return self.returns(ReturnsView.ROLLING)
        return self.returns(ReturnsView.MA12)

    @cached_property
    def pyramid(self):
        return load_population(self.config.manifest("population"))

    @cached_property
    def gdp(self):
        return load_gdp(self.config.manifest("gdp"))

    @cached_property
    def proxy(self) -> MonthlySeries:
        return cohort_proxy(self.pyramid, self.config.resolved_proxy())

    @cached_property
    def predictor(self) -> MonthlySeries:
        if self.source == PredictorSource.GDP:
            return gdp_predictor(self.gdp)
        return predictor_dln(self.proxy)

    @cached_property
    def fit(self) -> ModelFit:
        return fit_linear(
            self.observed,
            self.predictor,
            self.config.fit_method,
            self.config.fit_window,
            self.config.grid,
        )

    def default_coefficients(self) -> Tuple[float, float]:
        """The preset's reported pair, or the GDP pair."""
        if self.source == PredictorSource.GDP:
            return GDP_V1, GDP_V2
        preset = self.config.resolved_preset()
        return preset.v1, preset.v2

    @cached_property
    def coefficients(self) -> Tuple[float, float]:
        if self.explicit is not None:
            return self.explicit
        return self.fit.v1, self.fit.v2

    @cached_property
    def predicted(self) -> MonthlySeries:
        v1, v2 = self.coefficients
        predicted = predict_returns(self.predictor, v1, v2)
        if self.source == PredictorSource.POPULATION:
            predicted = smooth_predicted(predicted, self.config.resolved_preset())
        return predicted

    @cached_property
    def residual(self) -> MonthlySeries:
        return residual_series(self.observed, self.predicted)

    def test_pair(self) -> Tuple[MonthlySeries, MonthlySeries]:
        """Observed and predicted on their common months, cut to the fit window when set."""
        o, p = align(self.observed, self.predicted)
        window = self.config.fit_window
        if window is not None:
            first, last = max(window[0], o.start), min(window[1], o.end)
            if last < first:
                raise AlignmentError(f"fit window {window[0]}..{window[1]} misses {o.start}..{o.end}")
            o, p = o.window(first, last), p.window(first, last)
        return o, p

    def provenance(self) -> dict:
        config = self.config
        data = {
            "vintages": {name: m.vintage_label for name, m in sorted(config.datasets.items())},
            "predictor": self.source.value,
            "return_mode": config.return_mode.value,
            "observed_measure": config.observed.value,
            "level_kind": config.level_kind.value,
        }
        if self.source == PredictorSource.GDP:
            data["smoothing"] = {"gdp_growth": GDP_SMOOTHING.label()}
            data["annualization"] = f"{ANNUALIZATION:g} x quarterly log growth"
        else:
            proxy = config.resolved_proxy()
            preset = config.resolved_preset()
            data["proxy"] = proxy.to_dict()
            data["smoothing"] = {
                "population": proxy.month_smoothing.label() if proxy.month_smoothing else None,
                "predicted": preset.predicted_smoothing.label() if preset.predicted_smoothing else None,
            }
        return data


# -----------------------------
# Report
# -----------------------------


def unit_root_battery(
    series: Dict[str, MonthlySeries],
    config: RunConfig,
    tests: Sequence[UnitRootTest] = (UnitRootTest.ADF, UnitRootTest.DFGLS),
    difference: bool = False,
) -> List[UnitRootReport]:
    """Run the configured unit-root tests on each named series (or its first difference)."""
    params = config.tests
    reports = []
    for name, s in series.items():
        values = np.diff(s.values) if difference else s.values
        label = f"d.{name}" if difference else name
        for test in tests:
            if UnitRootTest(test) == UnitRootTest.ADF:
                report = adf_test(values, params.adf_max_lag, params.adf_trend)
            else:
                report = dfgls_test(values, params.dfgls_max_lag, params.dfgls_trend)
            reports.append(report.with_label(label))
    return reports


@dataclass(frozen=True)
class RunReport:
    config: dict
    provenance: dict
    fit: ModelFit
    fit_summary: dict
    naive_residual_std: Optional[float]
    unit_root: Tuple[UnitRootReport, ...]
    eg_residual: UnitRootReport
    eg_first_step: OlsResult
    eg_two_step: UnitRootReport
    lag_selection: LagSelectionTable
    var: VarModel
    johansen: JohansenReport

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "provenance": self.provenance,
            "fit": self.fit.to_dict(),
            "fit_summary": self.fit_summary,
            "naive_residual_std": self.naive_residual_std,
            "unit_root": [r.to_dict() for r in self.unit_root],
            "engle_granger": {
                "residual": self.eg_residual.to_dict(),
                "two_step": {
                    "first_step": self.eg_first_step.to_dict(),
                    "test": self.eg_two_step.to_dict(),
                },
            },
            "lag_selection": self.lag_selection.to_dict(),
            "var": self.var.to_dict(),
            "johansen": self.johansen.to_dict(),
        }


def build_report(config: RunConfig, source: PredictorSource = PredictorSource.POPULATION) -> RunReport:
    pipeline = Pipeline(config, source)
    params = config.tests
    fit = pipeline.fit
    observed, predicted = pipeline.test_pair()
    residual = observed.with_values(observed.values - predicted.values)

    horizon = None
    if source == PredictorSource.POPULATION:
        horizon = abs(config.resolved_proxy().shift_months)
    naive = None
    if horizon and len(pipeline.observed) > horizon:
        naive = naive_residual_std(pipeline.observed, horizon)

    pair = {"observed": observed, "predicted": predicted}
    unit_root = unit_root_battery(pair, config) + unit_root_battery(pair, config, difference=True)
    eg_residual = eg_residual_test(residual.values, params.eg_max_lag).with_label("residual")
    first_step, two_step = eg_two_step(observed.values, predicted.values, params.eg_max_lag)

    data = np.column_stack((observed.values, predicted.values))
    selection = lag_select(data, params.lag_select_max)
    var_lag = params.var_lag if params.var_lag is not None else max(1, selection.selected["sbic"])
    var = var_fit(data, var_lag)
    jo = johansen(data, params.johansen_lag, params.johansen_trend)

    logger.info("report assembled over %s..%s (%d months)", observed.start, observed.end, len(observed))
    return RunReport(
        config=config.to_dict(),
        provenance=pipeline.provenance(),
        fit=fit,
        fit_summary=fit_summary(pipeline.observed, pipeline.predicted, fit),
        naive_residual_std=naive,
        unit_root=tuple(unit_root),
        eg_residual=eg_residual,
        eg_first_step=first_step,
        eg_two_step=two_step.with_label("observed~predicted"),
        lag_selection=selection,
        var=var,
        johansen=jo,
    )


# -----------------------------
# Cumulative comparison
# -----------------------------


@dataclass(frozen=True)
class Segment:
    """Months predicted with one preset and one coefficient pair (fitted over the segment when None)."""

    first: MonthStamp
    last: MonthStamp
    preset: Optional[str] = None
    coefficients: Optional[Tuple[float, float]] = None

    def __post_init__(self) -> None:
        if self.last < self.first:
            raise ConfigError(f"segment {self.first}..{self.last} is empty")
        if self.preset is not None:
            get_preset(self.preset)

    @classmethod
    def parse(cls, text: str) -> "Segment":
        """``YYYY-MM..YYYY-MM[:preset[:v1,v2]]``"""
        window, _, rest = text.partition(":")
        first, last = parse_window(window)
        preset, _, pair = rest.partition(":")
        coefficients = None
        if pair:
            try:
                v1, v2 = (float(v) for v in pair.split(","))
            except ValueError:
                raise ConfigError(f"segment coefficients must look like v1,v2, got {pair!r}") from None
            coefficients = (v1, v2)
        return cls(first, last, preset or None, coefficients)


def _reported(name: str) -> Tuple[float, float]:
    preset = PRESETS[name]
    return preset.v1, preset.v2


SPLICES: Dict[str, Tuple[Segment, ...]] = {
    # seventeen-year-olds backcast until the nine-year-old estimates take over in 1991
    "n17-n9": (
        Segment(MonthStamp(1985, 1), MonthStamp(1990, 12), "n17-backcast", _reported("n17-backcast")),
        Segment(MonthStamp(1991, 1), MonthStamp(2009, 12), "postcensal-n9", _reported("postcensal-n9")),
    ),
    # one fitted nine-year-old model per stretch
    "n9-three-fits": (
        Segment(MonthStamp(1985, 1), MonthStamp(1991, 12), "postcensal-n9"),
        Segment(MonthStamp(1992, 1), MonthStamp(2001, 12), "postcensal-n9"),
        Segment(MonthStamp(2002, 1), MonthStamp(2009, 12), "postcensal-n9"),
    ),
}


@dataclass(frozen=True)
class CumulativeComparison:
    observed: MonthlySeries
    predicted: MonthlySeries
    segments: Tuple[dict, ...]

    def to_csv(self) -> str:
        lines = ["month,observed,predicted"]
        for month, o, p in zip(self.observed.months(), self.observed.values, self.predicted.values):
            lines.append(f"{month},{float(o)!r},{float(p)!r}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "start": str(self.observed.start),
            "end": str(self.observed.end),
            "final_gap": float(self.observed.values[-1] - self.predicted.values[-1]),
            "segments": list(self.segments),
            "values": [
                {"month": str(month), "observed": float(o), "predicted": float(p)}
                for month, o, p in zip(self.observed.months(), self.observed.values, self.predicted.values)
            ],
        }


def cumulative_comparison(
    config: RunConfig,
    source: PredictorSource = PredictorSource.POPULATION,
    segments: Sequence[Segment] = (),
) -> CumulativeComparison:
    """
    Observed against predicted cumulative returns. Predicted pieces from
    consecutive segments are spliced before accumulating; with no segments the
    whole common range is one segment with the configured coefficients.
    """
    source = PredictorSource(source)
    if not segments:
        observed, _ = Pipeline(config, source).test_pair()
        segments = (Segment(observed.start, observed.end),)
    observed_parts, predicted_parts, rows = [], [], []
    previous = None
    for segment in segments:
        if previous is not None and segment.first != previous.last.shift(1):
            raise ConfigError(
                f"segment {segment.first}..{segment.last} does not follow {previous.first}..{previous.last}"
            )
        piece = replace(config, fit_window=(segment.first, segment.last))
        if segment.preset is not None:
            piece = replace(piece, preset=segment.preset, proxy=None)
        pipeline = Pipeline(piece, source, segment.coefficients)
        o, p = pipeline.test_pair()
        if (o.start, o.end) != (segment.first, segment.last):
            raise AlignmentError(
                f"segment {segment.first}..{segment.last} is only covered over {o.start}..{o.end}"
            )
        v1, v2 = pipeline.coefficients
        rows.append(
            {
                "first": str(segment.first),
                "last": str(segment.last),
                "predictor": piece.preset if source == PredictorSource.POPULATION else source.value,
                "v1": v1,
                "v2": v2,
                "coefficients": "given" if segment.coefficients is not None else "fitted",
                "observed": describe(o),
                "predicted": describe(p),
            }
        )
        observed_parts.append(o.values)
        predicted_parts.append(p.values)
        previous = segment
    start = segments[0].first
    observed = cumulative_return(MonthlySeries(start, np.concatenate(observed_parts)))
    predicted = cumulative_return(MonthlySeries(start, np.concatenate(predicted_parts)))
    logger.info("cumulative comparison over %s..%s in %d segment(s)", observed.start, observed.end, len(rows))
    return CumulativeComparison(observed, predicted, tuple(rows))


# -----------------------------
# Rendering
# -----------------------------


def series_csv(s: MonthlySeries) -> str:
    """``month,value`` rows; values use the shortest round-trip decimal."""
    lines = ["month,value"]
    lines.extend(f"{month},{value!r}" for month, value in s.items())
    return "\n".join(lines) + "\n"


def series_payload(s: MonthlySeries, label: str) -> dict:
    return {
        "label": label,
        "start": str(s.start),
        "end": str(s.end),
        "values": [{"month": str(m), "value": v} for m, v in s.items()],
    }


def matrix_csv(header: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
    lines = [",".join(header)]
    for t, row in enumerate(rows):
        lines.append(",".join([str(t)] + [repr(float(v)) for v in row]))
    return "\n".join(lines) + "\n"


def json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2) + "\n"


def _cell(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, (dict, list)):
        return json.dumps(value, separators=(",", ":"))
    return str(value)


def _is_record_list(value) -> bool:
    return isinstance(value, list) and bool(value) and all(isinstance(v, dict) for v in value)


def render_table(payload: dict, console: Console, title: str = "") -> None:
    """Render a nested report: scalars in a field/value table, record lists as tables."""
    scalars = [
        (key, value)
        for key, value in payload.items()
        if not isinstance(value, dict) and not _is_record_list(value)
    ]
    if scalars:
        table = Table(title=title or None, box=box.ROUNDED, header_style="bold magenta")
        table.add_column("Field", style="cyan")
        table.add_column("Value", justify="right", style="green")
        for key, value in scalars:
            table.add_row(key, _cell(value))
        console.print(table)
    for key, value in payload.items():
        name = f"{title}.{key}" if title else key
        if isinstance(value, dict):
            render_table(value, console, name)
        elif _is_record_list(value):
            columns = list(value[0])
            table = Table(title=name, box=box.ROUNDED, header_style="bold magenta")
            for column in columns:
                table.add_column(column, justify="right")
            for record in value:
                table.add_row(*(_cell(record.get(column)) for column in columns))
            console.print(table)
