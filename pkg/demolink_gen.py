#!/usr/bin/env python3
from pathlib import Path

import click
import numpy as np
import pandas as pd

from demography import AgePyramid
from errors import DemolinkError
from ingest import dump_gdp, dump_population, dump_sp500
from linkage import GdpSeries
from market import DailySeries
from series import MonthStamp, QuarterStamp

SP500_FILE = "sp500_daily.csv"
POPULATION_FILE = "population_sya.csv"
GDP_FILE = "gdp_quarterly.csv"

BIRTHS = 4.0e6  # monthly cohort size at age 0
BIRTH_CYCLE = 300  # months per baby-boom/bust cycle


def synthetic_bundle(start: MonthStamp, years: int, max_age: int, seed: int):
    """Daily closes, an age pyramid and quarterly GDP covering ``years`` from ``start``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    n_months = 12 * years

    # cohorts: age a in month i was born in month i - 12a
    span = n_months + 12 * max_age
    j = np.arange(span)
    births = BIRTHS * (1.0 + 0.15 * np.sin(2.0 * np.pi * j / BIRTH_CYCLE)) + rng.normal(0.0, 2.0e3, span)
    survival = 1.0 - 0.0005 * np.arange(max_age + 1)
    index = np.arange(n_months)[:, None] + 12 * max_age - 12 * np.arange(max_age + 1)[None, :]
    pyramid = AgePyramid(start, np.round(births[index] * survival))

    first_day = pd.Timestamp(start.year, start.month, 1)
    end = start.shift(n_months - 1)
    last_day = pd.Timestamp(end.year, end.month, 1) + pd.offsets.MonthEnd(0)
    days = pd.bdate_range(first_day, last_day)
    log_path = np.cumsum(rng.normal(0.0003, 0.01, len(days)))
    closes = np.round(300.0 * np.exp(log_path), 2)
    daily = DailySeries(days.to_numpy().astype("datetime64[D]"), closes)

    n_quarters = 4 * years
    gdp_pc = 30000.0 * np.exp(np.cumsum(rng.normal(0.005, 0.006, n_quarters)))
    population = 250.0e6 * np.exp(0.0025 * np.arange(n_quarters))
    real_gdp = np.round(gdp_pc * population / 1.0e6, 1) * 1.0e6
    quarter = QuarterStamp(start.year, (start.month - 1) // 3 + 1)
    gdp = GdpSeries(quarter, real_gdp / population, real_gdp, population)
    return daily, pyramid, gdp


@click.command()
@click.option("--out-dir", default="sample-data", show_default=True, help="Directory for the CSV files.")
@click.option("--start", default="1980-01", show_default=True, help="First month (YYYY-MM).")
@click.option("--years", default=30, show_default=True, type=click.IntRange(3), help="Years of data.")
@click.option("--max-age", default=20, show_default=True, type=click.IntRange(11, 100), help="Oldest age tabulated.")
@click.option("--seed", default=0, show_default=True, type=click.IntRange(0, 2**64 - 1), help="PCG64 seed.")
def generate(out_dir, start, years, max_age, seed):
    """Generate synthetic S&P 500, population and GDP files."""
    try:
        first = MonthStamp.parse(start)
    except DemolinkError as exc:
        raise click.BadParameter(exc.message, param_hint="--start") from None
    daily, pyramid, gdp = synthetic_bundle(first, years, max_age, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump_sp500(daily, out / SP500_FILE)
    dump_population(pyramid, out / POPULATION_FILE)
    dump_gdp(gdp, out / GDP_FILE)
    click.echo(
        f"Generated {len(daily)} closes, {pyramid.n_months}x{pyramid.max_age + 1} population cells, "
        f"{len(gdp)} quarters → {out}"
    )


if __name__ == "__main__":
    generate()
