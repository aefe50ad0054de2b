"""
Loaders and writers for the three CSV inputs.

* ``sp500_daily``: ``date,close``
* ``population_sya``: ``month,age,population``
* ``gdp_quarterly``: ``quarter,real_gdp,population``

Every cell is read as text and converted row by row so errors can name the
file and line. Values are written back with ``repr`` so a dump reloads to the
same floats.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Tuple, Union

import numpy as np
import pandas as pd

from demography import AgePyramid
from errors import ConfigError, DomainError, GapError, ParseError, ValidationError
from linkage import GdpSeries
from market import DailySeries
from series import MonthStamp, QuarterStamp

logger = logging.getLogger(__name__)

MAX_AGE = 100


class DatasetKind(str, Enum):
    SP500_DAILY = "sp500_daily"
    POPULATION_SYA = "population_sya"
    GDP_QUARTERLY = "gdp_quarterly"


SCHEMAS: Dict[DatasetKind, Tuple[str, ...]] = {
    DatasetKind.SP500_DAILY: ("date", "close"),
    DatasetKind.POPULATION_SYA: ("month", "age", "population"),
    DatasetKind.GDP_QUARTERLY: ("quarter", "real_gdp", "population"),
}


@dataclass(frozen=True)
class DatasetManifest:
    path: Path
    kind: DatasetKind
    vintage_label: str = ""

    @classmethod
    def from_dict(cls, data: dict, kind: Union[DatasetKind, str, None] = None) -> "DatasetManifest":
        try:
            return cls(
                path=Path(data["path"]),
                kind=DatasetKind(data.get("kind", kind)),
                vintage_label=str(data.get("vintage_label", "")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid dataset manifest {data!r}: {exc}") from None

    def to_dict(self) -> dict:
        return {"path": str(self.path), "kind": self.kind.value, "vintage_label": self.vintage_label}


# -----------------------------
# Reading
# -----------------------------


def _read_table(manifest: DatasetManifest) -> pd.DataFrame:
    path = Path(manifest.path)
    if not path.is_file():
        raise ConfigError(f"{path} is not a readable file")
    schema = SCHEMAS[manifest.kind]
    try:
        frame = pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError:
        raise ParseError(str(path), 1, f"empty file; expected header {','.join(schema)}") from None
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise ParseError(str(path), None, str(exc).strip()) from None
    header = tuple(str(c).strip() for c in frame.columns)
    if header != schema:
        raise ParseError(str(path), 1, f"expected header {','.join(schema)}, got {','.join(header)}")
    frame.columns = list(schema)
    # trailing blank lines are padding; interior ones stay and fail with their line number
    blank = (frame.fillna("").apply(lambda col: col.str.strip()) == "").all(axis=1).to_numpy()
    filled = np.flatnonzero(~blank)
    frame = frame.iloc[: int(filled[-1]) + 1 if filled.size else 0]
    logger.debug("read %d rows from %s", len(frame), path)
    return frame


def _line(index: int) -> int:
    # header is line 1
    return index + 2


def _number(path: Path, index: int, column: str, text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(str(path), _line(index), f"{column} {text!r} is not a number") from None
    if not np.isfinite(value):
        raise ParseError(str(path), _line(index), f"{column} {text!r} is not finite")
    return value


def _stamp(path: Path, index: int, parse: Callable, text: str):
    try:
        return parse(str(text))
    except ValidationError as exc:
        raise ParseError(str(path), _line(index), exc.message) from None


def load_sp500(manifest: DatasetManifest) -> DailySeries:
    path = Path(manifest.path)
    frame = _read_table(manifest)
    if frame.empty:
        raise ParseError(str(path), 2, "no data rows")
    dates = pd.to_datetime(frame["date"].str.strip(), format="%Y-%m-%d", errors="coerce")
    bad = np.flatnonzero(dates.isna().to_numpy())
    if bad.size:
        i = int(bad[0])
        raise ParseError(str(path), _line(i), f"date {frame['date'].iat[i]!r} is not YYYY-MM-DD")
    days = dates.to_numpy().astype("datetime64[D]")
    steps = np.diff(days)
    repeated = np.flatnonzero(steps == np.timedelta64(0, "D"))
    if repeated.size:
        i = int(repeated[0]) + 1
        raise ParseError(str(path), _line(i), f"duplicate date {days[i]}")
    backwards = np.flatnonzero(steps < np.timedelta64(0, "D"))
    if backwards.size:
        i = int(backwards[0]) + 1
        raise ParseError(str(path), _line(i), f"date {days[i]} is earlier than the row above")
    closes = np.empty(len(frame))
    for i, text in enumerate(frame["close"]):
        closes[i] = _number(path, i, "close", text)
        if closes[i] <= 0:
            raise DomainError(f"{path}:{_line(i)}: close must be positive, got {text!r}")
    series = DailySeries(days, closes)
    logger.info("loaded %d closes %s..%s from %s", len(series), days[0], days[-1], path)
    return series


def load_population(manifest: DatasetManifest) -> AgePyramid:
    """
    Single-year-of-age counts. Months missing between covered months (the
    quarterly or annual stretches of older vintages) are linearly interpolated
    per age and flagged.
    """
    path = Path(manifest.path)
    frame = _read_table(manifest)
    if frame.empty:
        raise ParseError(str(path), 2, "no data rows")
    ordinals: List[int] = []
    ages: List[int] = []
    counts: List[float] = []
    for i, (month_text, age_text, count_text) in enumerate(frame.itertuples(index=False)):
        month = _stamp(path, i, MonthStamp.parse, month_text)
        try:
            age = int(age_text)
        except ValueError:
            raise ParseError(str(path), _line(i), f"age {age_text!r} is not an integer") from None
        if not 0 <= age <= MAX_AGE:
            raise ParseError(str(path), _line(i), f"age {age} is outside 0..{MAX_AGE}")
        count = _number(path, i, "population", count_text)
        if count < 0:
            raise ValidationError(f"{path}:{_line(i)}: negative count {count_text!r} at {month}, age {age}")
        ordinals.append(month.ordinal)
        ages.append(age)
        counts.append(count)

    cells = pd.DataFrame({"ordinal": ordinals, "age": ages, "population": counts})
    duplicated = np.flatnonzero(cells.duplicated(["ordinal", "age"]).to_numpy())
    if duplicated.size:
        i = int(duplicated[0])
        raise ParseError(
            str(path), _line(i),
            f"duplicate cell {MonthStamp.from_ordinal(ordinals[i])}, age {ages[i]}",
        )
    max_age = int(cells["age"].max())
    grid = cells.pivot(index="ordinal", columns="age", values="population").sort_index()
    grid = grid.reindex(columns=range(max_age + 1))
    missing = np.argwhere(grid.isna().to_numpy())
    if missing.size:
        row, age = missing[0]
        month = MonthStamp.from_ordinal(int(grid.index[row]))
        raise ValidationError(f"{path}: missing cell {month}, age {int(age)}")

    known = grid.index.to_numpy()
    full = np.arange(known[0], known[-1] + 1)
    table = grid.to_numpy()
    if full.size == known.size:
        filled = table
    else:
        filled = np.column_stack([np.interp(full, known, table[:, a]) for a in range(table.shape[1])])
    interpolated = ~np.isin(full, known)
    pyramid = AgePyramid(MonthStamp.from_ordinal(int(full[0])), filled, interpolated)
    logger.info(
        "loaded population %s..%s, ages 0..%d, %d interpolated months from %s",
        pyramid.start, pyramid.end, pyramid.max_age, int(interpolated.sum()), path,
    )
    return pyramid


def load_gdp(manifest: DatasetManifest) -> GdpSeries:
    path = Path(manifest.path)
    frame = _read_table(manifest)
    if frame.empty:
        raise ParseError(str(path), 2, "no data rows")
    real_gdp = np.empty(len(frame))
    population = np.empty(len(frame))
    start = previous = None
    for i, (quarter_text, gdp_text, pop_text) in enumerate(frame.itertuples(index=False)):
        quarter = _stamp(path, i, QuarterStamp.parse, quarter_text)
        if previous is None:
            start = quarter
        elif quarter <= previous:
            raise ParseError(str(path), _line(i), f"quarter {quarter} does not follow {previous}")
        elif quarter != previous.next():
            raise GapError(f"{path}:{_line(i)}: quarter {previous.next()} is missing before {quarter}")
        previous = quarter
        real_gdp[i] = _number(path, i, "real_gdp", gdp_text)
        population[i] = _number(path, i, "population", pop_text)
        if real_gdp[i] <= 0 or population[i] <= 0:
            raise ValidationError(f"{path}:{_line(i)}: real_gdp and population must be positive")
    series = GdpSeries(start, real_gdp / population, real_gdp, population)
    logger.info("loaded %d GDP quarters from %s starting %s", len(series), path, start)
    return series


# -----------------------------
# Writing
# -----------------------------


def _write_rows(path: Union[str, Path], header: Tuple[str, ...], rows) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(row) + "\n")


def dump_sp500(d: DailySeries, path: Union[str, Path]) -> None:
    rows = ((str(day), repr(float(close))) for day, close in zip(d.dates, d.closes))
    _write_rows(path, SCHEMAS[DatasetKind.SP500_DAILY], rows)


def dump_population(p: AgePyramid, path: Union[str, Path]) -> None:
    """Writes every month, interpolated ones included."""
    rows = (
        (str(p.start.shift(i)), str(age), repr(float(p.counts[i, age])))
        for i in range(p.n_months)
        for age in range(p.max_age + 1)
    )
    _write_rows(path, SCHEMAS[DatasetKind.POPULATION_SYA], rows)


def dump_gdp(g: GdpSeries, path: Union[str, Path]) -> None:
    # series built from per-capita values are written with unit population
    real_gdp = g.real_gdp if g.real_gdp is not None else g.gdp_pc
    population = g.population if g.population is not None else np.ones(len(g))
    rows = (
        (str(q), repr(float(gdp)), repr(float(pop)))
        for q, gdp, pop in zip(g.quarters(), real_gdp, population)
    )
    _write_rows(path, SCHEMAS[DatasetKind.GDP_QUARTERLY], rows)
