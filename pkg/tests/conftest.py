"""
Pytest fixtures for demolink tests
"""

import numpy as np
import pytest

from demolink_gen import GDP_FILE, POPULATION_FILE, SP500_FILE, synthetic_bundle
from ingest import dump_gdp, dump_population, dump_sp500
from series import MonthlySeries, MonthStamp


def make_series(values, start="2000-01"):
    """MonthlySeries from plain values"""
    return MonthlySeries(MonthStamp.parse(start), values)


@pytest.fixture
def rng():
    """Seeded generator for test data"""
    return np.random.Generator(np.random.PCG64(20240601))


@pytest.fixture
def sp500_csv(tmp_path):
    """Three well-formed trading days"""
    path = tmp_path / "sp500.csv"
    path.write_text("date,close\n2000-01-03,1455.22\n2000-01-04,1399.42\n2000-01-05,1402.11\n")
    return path


@pytest.fixture
def population_csv(tmp_path):
    """Two months by three ages, complete"""
    path = tmp_path / "population.csv"
    rows = ["month,age,population"]
    for month, base in (("2000-01", 100.0), ("2000-02", 110.0)):
        for age in range(3):
            rows.append(f"{month},{age},{base + age}")
    path.write_text("\n".join(rows) + "\n")
    return path


@pytest.fixture
def gdp_csv(tmp_path):
    """Four consecutive quarters"""
    path = tmp_path / "gdp.csv"
    path.write_text(
        "quarter,real_gdp,population\n"
        "2000-Q1,12000.5,280.0\n"
        "2000-Q2,12100.0,280.5\n"
        "2000-Q3,12200.25,281.0\n"
        "2000-Q4,12350.0,281.4\n"
    )
    return path


@pytest.fixture(scope="session")
def bundle():
    """Synthetic daily/population/GDP datasets (30 years from 1980-01)"""
    return synthetic_bundle(MonthStamp(1980, 1), 30, 20, 7)


@pytest.fixture(scope="session")
def bundle_dir(tmp_path_factory, bundle):
    """The synthetic bundle written as CSV files"""
    directory = tmp_path_factory.mktemp("bundle")
    daily, pyramid, gdp = bundle
    dump_sp500(daily, directory / SP500_FILE)
    dump_population(pyramid, directory / POPULATION_FILE)
    dump_gdp(gdp, directory / GDP_FILE)
    return directory
