import json
import logging
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import click
from rich.console import Console
from rich.logging import RichHandler

from config import ObservedMeasure, OutputFormat, RunConfig, load_config, load_fit, parse_window
from demography import PRESETS
from econometrics import JohansenTrend, TrendSpec, UnitRootTest, eg_residual_test, eg_two_step, johansen, lag_select
from errors import DemolinkError, OutputError
from ingest import DatasetKind, DatasetManifest
from linkage import FitMethod, fit_summary, naive_residual_std
from market import LevelKind, ReturnMode
from report import (
    SPLICES,
    Pipeline,
    PredictorSource,
    ReturnsView,
    Segment,
    build_report,
    cumulative_comparison,
    json_text,
    matrix_csv,
    render_table,
    series_csv,
    series_payload,
    unit_root_battery,
)
from series import MonthlySeries
from synthetic import SyntheticKind, SyntheticSpec, generate

logger = logging.getLogger(__name__)

# diagnostics only; data goes to stdout or --out
err_console = Console(stderr=True)


# -----------------------------
# Errors and logging
# -----------------------------


class DemolinkCliError(click.ClickException):
    """One-line ``demolink: error[CODE] message`` on stderr."""

    def __init__(self, error: DemolinkError) -> None:
        super().__init__(error.message)
        self.code = error.code
        self.exit_code = 2 if error.code in ("CONFIG", "SPEC") else 1

    def show(self, file=None) -> None:
        click.echo(f"demolink: error[{self.code}] {self.message}", err=True)


class DemolinkGroup(click.Group):
    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except DemolinkError as exc:
            raise DemolinkCliError(exc) from None


def configure_logging(verbosity: int) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    handler = RichHandler(console=err_console, show_time=False, show_path=False)
    logging.basicConfig(level=level, format="%(message)s", handlers=[handler], force=True)


# -----------------------------
# Output
# -----------------------------


class CliState:
    def __init__(self, config: RunConfig, out: Optional[str]) -> None:
        self.config = config
        self.out = out

    def write(self, text: str) -> None:
        if self.out:
            try:
                Path(self.out).write_text(text, encoding="utf-8")
            except OSError as exc:
                raise OutputError(f"cannot write {self.out}: {exc.strerror}") from None
        else:
            click.echo(text, nl=False)

    def render(self, payload: dict, fmt: OutputFormat, title: str) -> None:
        """Structured result: JSON for csv/json, rich tables for table."""
        if fmt != OutputFormat.TABLE:
            self.write(json_text(payload))
            return
        if self.out:
            try:
                with Path(self.out).open("w", encoding="utf-8") as f:
                    render_table(payload, Console(file=f, width=120), title)
            except OSError as exc:
                raise OutputError(f"cannot write {self.out}: {exc.strerror}") from None
        else:
            render_table(payload, Console(width=120), title)

    def emit_series(self, s: MonthlySeries, fmt: OutputFormat, label: str) -> None:
        if fmt == OutputFormat.CSV:
            self.write(series_csv(s))
        else:
            self.render(series_payload(s, label), fmt, label)


# -----------------------------
# CLI
# -----------------------------


@click.group(cls=DemolinkGroup)
@click.option(
    "--config",
    "config_path",
    type=click.Path(dir_okay=False),
    default=None,
    help="JSON run configuration (a previous report works too).",
)
@click.option(
    "--out",
    type=click.Path(dir_okay=False, writable=True, resolve_path=True),
    default=None,
    help="Output file. If omitted, prints to stdout.",
)
@click.option(
    "--format",
    "fmt",
    type=click.Choice([f.value for f in OutputFormat], case_sensitive=False),
    default=None,
    help="Output format (default: csv, or the config file's).",
)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Seed for synthetic draws.")
@click.option("-v", "--verbose", count=True, help="-v for progress, -vv for debug detail.")
@click.pass_context
def cli(
    ctx: click.Context,
    config_path: Optional[str],
    out: Optional[str],
    fmt: Optional[str],
    seed: Optional[int],
    verbose: int,
) -> None:
    """demolink: S&P 500 returns against demographic and GDP predictors."""
    configure_logging(verbose)
    config = load_config(config_path).with_overrides(
        format=OutputFormat(fmt.lower()) if fmt else None,
        seed=seed,
    )
    ctx.obj = CliState(config, out)


dataset_options = [
    click.option("--sp500", type=click.Path(dir_okay=False), default=None, help="Daily closes CSV (date,close)."),
    click.option(
        "--population",
        type=click.Path(dir_okay=False),
        default=None,
        help="Single-year-of-age CSV (month,age,population).",
    ),
    click.option("--gdp", type=click.Path(dir_okay=False), default=None, help="Quarterly GDP CSV (quarter,real_gdp,population)."),
    click.option("--vintage", default=None, help="Vintage label recorded for datasets given on the command line."),
]

model_options = [
    click.option("--preset", default=None, help="Proxy preset (see `demolink proxy --list-presets`)."),
    click.option("--mode", type=click.Choice([m.value for m in ReturnMode]), default=None, help="Simple or log returns."),
    click.option(
        "--observed",
        type=click.Choice([m.value for m in ObservedMeasure]),
        default=None,
        help="Observed measure: running 12-month sum or MA(12) of monthly returns.",
    ),
    click.option("--level-kind", type=click.Choice([k.value for k in LevelKind]), default=None, help="Monthly level: last close or mean close."),
    click.option("--window", default=None, help="Fit window YYYY-MM..YYYY-MM."),
    click.option("--method", type=click.Choice([m.value for m in FitMethod]), default=None, help="Fit method."),
]

source_option = click.option(
    "--source",
    type=click.Choice([s.value for s in PredictorSource]),
    default=PredictorSource.POPULATION.value,
    show_default=True,
    help="Predictor: cohort proxy or GDP per capita growth.",
)


def apply_options(options):
    """Decorator to apply a list of shared options to a subcommand."""

    def decorate(func):
        for opt in reversed(options):
            func = opt(func)
        return func

    return decorate


def resolve_config(state: CliState, options: Dict[str, Optional[str]]) -> RunConfig:
    """File config with command-line datasets and model flags layered on top."""
    config = state.config
    datasets = dict(config.datasets)
    for name, kind in (
        ("sp500", DatasetKind.SP500_DAILY),
        ("population", DatasetKind.POPULATION_SYA),
        ("gdp", DatasetKind.GDP_QUARTERLY),
    ):
        path = options.pop(name, None)
        if path is not None:
            datasets[name] = DatasetManifest(Path(path), kind, options.get("vintage") or "")
    options.pop("vintage", None)
    return config.with_overrides(
        datasets=datasets,
        preset=options.pop("preset", None),
        return_mode=ReturnMode(options["mode"]) if options.get("mode") else None,
        observed=ObservedMeasure(options["observed"]) if options.get("observed") else None,
        level_kind=LevelKind(options["level_kind"]) if options.get("level_kind") else None,
        fit_window=parse_window(options.get("window")),
        fit_method=FitMethod(options["method"]) if options.get("method") else None,
    )


def _split(kwargs: dict, names: List[str]) -> dict:
    return {name: kwargs.pop(name) for name in names if name in kwargs}


SHARED = ["sp500", "population", "gdp", "vintage", "preset", "mode", "observed", "level_kind", "window", "method"]


@cli.command()
@apply_options(dataset_options + model_options)
@click.option(
    "--series",
    "view",
    type=click.Choice([v.value for v in ReturnsView]),
    default=ReturnsView.ROLLING.value,
    show_default=True,
    help="Measure to emit.",
)
@click.pass_obj
def returns(state: CliState, view: str, **kwargs) -> None:
    """Emit a return or volatility series built from daily closes."""
    config = resolve_config(state, _split(kwargs, SHARED))
    s = Pipeline(config).returns(ReturnsView(view))
    state.emit_series(s, config.format, f"returns.{view}")


@cli.command()
@apply_options(dataset_options + model_options)
@click.option("--level", is_flag=True, help="Emit the proxy level instead of its log change.")
@click.option("--list-presets", is_flag=True, help="List the proxy presets and exit.")
@click.pass_obj
def proxy(state: CliState, level: bool, list_presets: bool, **kwargs) -> None:
    """Emit the cohort predictor series for a preset."""
    config = resolve_config(state, _split(kwargs, SHARED))
    if list_presets:
        payload = {"presets": [preset.to_dict() | {"description": preset.description} for preset in PRESETS.values()]}
        state.render(payload, config.format, "presets")
        return
    pipeline = Pipeline(config)
    s = pipeline.proxy if level else pipeline.predictor
    state.emit_series(s, config.format, f"proxy.{config.preset}")


@cli.command()
@apply_options(dataset_options + model_options)
@source_option
@click.pass_obj
def fit(state: CliState, source: str, **kwargs) -> None:
    """Fit observed = v1 * predictor + v2 and report residual statistics."""
    config = resolve_config(state, _split(kwargs, SHARED))
    pipeline = Pipeline(config, PredictorSource(source))
    model = pipeline.fit
    horizon = abs(config.resolved_proxy().shift_months) if pipeline.source == PredictorSource.POPULATION else 0
    naive = None
    if horizon and len(pipeline.observed) > horizon:
        naive = naive_residual_std(pipeline.observed, horizon)
    payload = {
        "config": config.to_dict(),
        "provenance": pipeline.provenance(),
        "fit": model.to_dict(),
        "fit_summary": fit_summary(pipeline.observed, pipeline.predicted, model),
        "naive_residual_std": naive,
    }
    state.render(payload, config.format, "fit")


@cli.command()
@apply_options(dataset_options + model_options)
@source_option
@click.option("--v1", type=float, default=None, help="Slope (default: the preset's, or the GDP model's).")
@click.option("--v2", type=float, default=None, help="Intercept (default: the preset's, or the GDP model's).")
@click.option(
    "--fit",
    "fit_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Take v1/v2 from a saved fit (the JSON written by `fit`).",
)
@click.pass_obj
def predict(
    state: CliState,
    source: str,
    v1: Optional[float],
    v2: Optional[float],
    fit_path: Optional[str],
    **kwargs,
) -> None:
    """Emit the predicted return series R_p(t)."""
    config = resolve_config(state, _split(kwargs, SHARED))
    pipeline = Pipeline(config, PredictorSource(source))
    base = pipeline.default_coefficients()
    if fit_path:
        saved = load_fit(fit_path)
        base = (saved.v1, saved.v2)
    coefficients = (base[0] if v1 is None else v1, base[1] if v2 is None else v2)
    logger.info("predicting with v1=%g v2=%g", *coefficients)
    predicted = Pipeline(config, PredictorSource(source), coefficients).predicted
    state.emit_series(predicted, config.format, f"predicted.{source}")


@cli.command()
@apply_options(dataset_options + model_options)
@source_option
@click.option(
    "--segment",
    "segment_texts",
    multiple=True,
    help="YYYY-MM..YYYY-MM[:preset[:v1,v2]], repeatable and consecutive; fitted when v1,v2 are omitted.",
)
@click.option("--splice", type=click.Choice(sorted(SPLICES)), default=None, help="Built-in segment set.")
@click.pass_obj
def compare(state: CliState, source: str, segment_texts: Tuple[str, ...], splice: Optional[str], **kwargs) -> None:
    """Observed against predicted cumulative returns, optionally spliced from segments."""
    if splice and segment_texts:
        raise click.UsageError("use either --splice or --segment")
    config = resolve_config(state, _split(kwargs, SHARED))
    segments = SPLICES[splice] if splice else tuple(Segment.parse(text) for text in segment_texts)
    result = cumulative_comparison(config, PredictorSource(source), segments)
    if config.format == OutputFormat.CSV:
        state.write(result.to_csv())
    else:
        state.render(result.to_dict(), config.format, "compare")


def _test_series(pipeline: Pipeline, names: Tuple[str, ...]) -> Dict[str, MonthlySeries]:
    if names == ("observed",):
        observed = pipeline.observed
        window = pipeline.config.fit_window
        if window is not None:
            observed = observed.window(max(window[0], observed.start), min(window[1], observed.end))
        return {"observed": observed}
    observed, predicted = pipeline.test_pair()
    available = {
        "observed": observed,
        "predicted": predicted,
        "residual": observed.with_values(observed.values - predicted.values),
    }
    return {name: available[name] for name in names}


@cli.command("unit-root")
@apply_options(dataset_options + model_options)
@source_option
@click.option(
    "--series",
    "names",
    type=click.Choice(["observed", "predicted", "residual"]),
    multiple=True,
    help="Series to test (repeatable; default observed).",
)
@click.option("--test", type=click.Choice(["adf", "dfgls", "both"]), default="both", show_default=True)
@click.option("--difference", is_flag=True, help="Test first differences.")
@click.option("--max-lag", type=click.IntRange(0), default=None, help="Maximum augmentation lag.")
@click.option("--trend", type=click.Choice([t.value for t in TrendSpec]), default=None, help="Deterministic terms.")
@click.pass_obj
def unit_root(
    state: CliState,
    source: str,
    names: Tuple[str, ...],
    test: str,
    difference: bool,
    max_lag: Optional[int],
    trend: Optional[str],
    **kwargs,
) -> None:
    """ADF and DF-GLS unit-root tests over lags 0..max-lag."""
    config = resolve_config(state, _split(kwargs, SHARED))
    params = config.tests
    if max_lag is not None:
        params = replace(params, adf_max_lag=max_lag, dfgls_max_lag=max_lag)
    tests = [UnitRootTest.ADF, UnitRootTest.DFGLS] if test == "both" else [UnitRootTest(test)]
    if trend == TrendSpec.NONE.value:
        # GLS detrending needs a constant at least
        if test == "dfgls":
            raise click.BadParameter("DF-GLS needs trend constant or constant_trend", param_hint="--trend")
        if test == "both":
            logger.warning("--trend none: running ADF only")
            tests = [UnitRootTest.ADF]
        params = replace(params, adf_trend=TrendSpec.NONE)
    elif trend is not None:
        params = replace(params, adf_trend=TrendSpec(trend), dfgls_trend=TrendSpec(trend))
    config = replace(config, tests=params)
    pipeline = Pipeline(config, PredictorSource(source))
    series = _test_series(pipeline, tuple(dict.fromkeys(names)) or ("observed",))
    reports = unit_root_battery(series, config, tests, difference)
    payload = {"config": config.to_dict(), "reports": [r.to_dict() for r in reports]}
    state.render(payload, config.format, "unit-root")


@cli.command()
@apply_options(dataset_options + model_options)
@source_option
@click.option("--two-step", is_flag=True, help="Regress observed on predicted first, then test its residual.")
@click.option("--max-lag", type=click.IntRange(0), default=None, help="Maximum augmentation lag.")
@click.pass_obj
def cointegrate(state: CliState, source: str, two_step: bool, max_lag: Optional[int], **kwargs) -> None:
    """Engle-Granger residual test of observed against predicted."""
    config = resolve_config(state, _split(kwargs, SHARED))
    lag = config.tests.eg_max_lag if max_lag is None else max_lag
    observed, predicted = Pipeline(config, PredictorSource(source)).test_pair()
    if two_step:
        first, report = eg_two_step(observed.values, predicted.values, lag)
        payload = {"first_step": first.to_dict(), "test": report.with_label("observed~predicted").to_dict()}
    else:
        report = eg_residual_test(observed.values - predicted.values, lag)
        payload = {"test": report.with_label("residual").to_dict()}
    payload["config"] = config.to_dict()
    state.render(payload, config.format, "engle-granger")


@cli.command("johansen")
@apply_options(dataset_options + model_options)
@source_option
@click.option("--lag", type=click.IntRange(1), default=None, help="VAR order in levels.")
@click.option("--trend", type=click.Choice([t.value for t in JohansenTrend]), default=None)
@click.pass_obj
def johansen_cmd(state: CliState, source: str, lag: Optional[int], trend: Optional[str], **kwargs) -> None:
    """Johansen trace test on (observed, predicted)."""
    config = resolve_config(state, _split(kwargs, SHARED))
    params = config.tests
    observed, predicted = Pipeline(config, PredictorSource(source)).test_pair()
    result = johansen(
        [list(pair) for pair in zip(observed.values, predicted.values)],
        params.johansen_lag if lag is None else lag,
        params.johansen_trend if trend is None else JohansenTrend(trend),
    )
    state.render({"config": config.to_dict(), "johansen": result.to_dict()}, config.format, "johansen")


@cli.command("lag-select")
@apply_options(dataset_options + model_options)
@source_option
@click.option("--max-lag", type=click.IntRange(0), default=None, help="Largest VAR lag considered.")
@click.pass_obj
def lag_select_cmd(state: CliState, source: str, max_lag: Optional[int], **kwargs) -> None:
    """VAR lag-order selection table (LR, FPE, AIC, HQIC, SBIC)."""
    config = resolve_config(state, _split(kwargs, SHARED))
    observed, predicted = Pipeline(config, PredictorSource(source)).test_pair()
    table = lag_select(
        [list(pair) for pair in zip(observed.values, predicted.values)],
        config.tests.lag_select_max if max_lag is None else max_lag,
    )
    state.render({"config": config.to_dict(), "lag_selection": table.to_dict()}, config.format, "lag-select")


@cli.command()
@click.option("--kind", type=click.Choice([k.value for k in SyntheticKind]), default=None)
@click.option("--length", type=click.IntRange(1), default=None)
@click.option("--sigma", type=float, default=None)
@click.option("--phi", type=float, default=None)
@click.option("--coint-sigma", type=float, default=None)
@click.option("--var-coefs", default=None, help="VAR matrices as JSON, lag x k x k.")
@click.pass_obj
def synthetic(
    state: CliState,
    kind: Optional[str],
    length: Optional[int],
    sigma: Optional[float],
    phi: Optional[float],
    coint_sigma: Optional[float],
    var_coefs: Optional[str],
) -> None:
    """Emit a seeded synthetic series (uses the global --seed)."""
    config = state.config
    data = config.synthetic_spec().to_dict()
    for key, value in (
        ("kind", kind),
        ("length", length),
        ("sigma", sigma),
        ("phi", phi),
        ("coint_sigma", coint_sigma),
    ):
        if value is not None:
            data[key] = value
    if var_coefs is not None:
        try:
            data["var_coefs"] = json.loads(var_coefs)
        except json.JSONDecodeError as exc:
            raise click.BadParameter(f"not JSON: {exc.msg}", param_hint="--var-coefs") from None
    spec = SyntheticSpec.from_dict(data)
    values = generate(spec)
    matrix = values.reshape(len(values), -1)
    header = ["t"] + (["value"] if matrix.shape[1] == 1 else [f"x{j + 1}" for j in range(matrix.shape[1])])
    if config.format == OutputFormat.CSV:
        state.write(matrix_csv(header, matrix))
    else:
        payload = {"spec": spec.to_dict(), "columns": header[1:], "values": matrix.tolist()}
        state.render(payload, config.format, "synthetic")


@cli.command()
@apply_options(dataset_options + model_options)
@source_option
@click.pass_obj
def report(state: CliState, source: str, **kwargs) -> None:
    """Full pipeline: fit, unit-root battery, Engle-Granger, lag selection, VAR, Johansen."""
    config = resolve_config(state, _split(kwargs, SHARED))
    result = build_report(config, PredictorSource(source))
    state.render(result.to_dict(), config.format, "report")


if __name__ == "__main__":
    cli()
