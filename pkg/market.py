import logging
from datetime import date
from enum import Enum
from typing import Sequence

import numpy as np
import pandas as pd

from errors import DegenerateMonthError, DomainError, GapError, LengthError, ValidationError
from series import MonthlySeries, MonthStamp, running_sum

logger = logging.getLogger(__name__)

ANNUAL_WINDOW = 12


class ReturnMode(str, Enum):
    SIMPLE = "simple"
    LOG = "log"


class LevelKind(str, Enum):
    CLOSE = "close"
    MEAN = "mean"


class DailySeries:
    """Trading-day closes: strictly increasing dates, positive levels."""

    def __init__(self, dates: Sequence[date], closes: Sequence[float]) -> None:
        days = np.array(dates, dtype="datetime64[D]")
        levels = np.array(closes, dtype=np.float64)
        if days.shape != levels.shape or days.ndim != 1:
            raise ValidationError("dates and closes must be equal-length sequences")
        if days.size == 0:
            raise LengthError("daily series is empty")
        steps = np.flatnonzero(np.diff(days) <= np.timedelta64(0, "D"))
        if steps.size:
            raise ValidationError(f"dates must be strictly increasing at {days[steps[0] + 1]}")
        bad = np.flatnonzero(~(levels > 0))
        if bad.size:
            raise DomainError(f"close on {days[bad[0]]} must be positive, got {levels[bad[0]]!r}")
        days.setflags(write=False)
        levels.setflags(write=False)
        self.dates = days
        self.closes = levels

    def __len__(self) -> int:
        return int(self.closes.size)

    def scaled(self, factor: float) -> "DailySeries":
        return DailySeries(list(self.dates), self.closes * factor)


# -----------------------------
# Monthly grouping
# -----------------------------


def _monthly_frame(d: DailySeries) -> pd.DataFrame:
    """Per-month close, mean, population std and day count; raises on empty months."""
    index = pd.DatetimeIndex(d.dates).to_period("M")
    grouped = pd.Series(d.closes, index=index).groupby(level=0, sort=True)
    frame = pd.DataFrame(
        {
            "close": grouped.last(),
            "mean": grouped.mean(),
            "std": grouped.std(ddof=0),
            "days": grouped.size(),
        }
    )
    ordinals = np.array([p.year * 12 + p.month - 1 for p in frame.index])
    gaps = np.flatnonzero(np.diff(ordinals) != 1)
    if gaps.size:
        missing = MonthStamp.from_ordinal(int(ordinals[gaps[0]]) + 1)
        raise GapError(f"no trading days in {missing}")
    return frame


def _first_month(frame: pd.DataFrame) -> MonthStamp:
    period = frame.index[0]
    return MonthStamp(period.year, period.month)


def monthly_levels(d: DailySeries, kind: LevelKind = LevelKind.CLOSE) -> MonthlySeries:
    """Last close (``close``) or arithmetic mean of closes (``mean``) per month."""
    frame = _monthly_frame(d)
    return MonthlySeries(_first_month(frame), frame[LevelKind(kind).value].to_numpy())


# -----------------------------
# Returns
# -----------------------------


def _ratio_returns(m: MonthlySeries, lag: int, mode: ReturnMode) -> MonthlySeries:
    if len(m) < lag + 1:
        raise LengthError(f"{lag}-month return needs at least {lag + 1} months, got {len(m)}")
    bad = np.flatnonzero(~(m.values > 0))
    if bad.size:
        raise DomainError(f"level at {m.start.shift(int(bad[0]))} must be positive")
    ratio = m.values[lag:] / m.values[:-lag]
    values = ratio - 1.0 if ReturnMode(mode) == ReturnMode.SIMPLE else np.log(ratio)
    return MonthlySeries(m.start.shift(lag), values)


def monthly_returns(m: MonthlySeries, mode: ReturnMode = ReturnMode.SIMPLE) -> MonthlySeries:
    return _ratio_returns(m, 1, mode)


def annual_return(m: MonthlySeries, mode: ReturnMode = ReturnMode.SIMPLE) -> MonthlySeries:
    """Point-to-point 12-month return, stepped monthly."""
    return _ratio_returns(m, ANNUAL_WINDOW, mode)


def rolling_annual_return(m: MonthlySeries, mode: ReturnMode = ReturnMode.SIMPLE) -> MonthlySeries:
    """R_o(t): running sum of the previous twelve monthly returns."""
    if len(m) < ANNUAL_WINDOW + 1:
        raise LengthError(f"annual return needs at least 13 months, got {len(m)}")
    return running_sum(monthly_returns(m, mode), ANNUAL_WINDOW)


def cumulative_return(r: MonthlySeries) -> MonthlySeries:
    """Additive running total of returns from the first month."""
    return r.with_values(np.cumsum(r.values))


# -----------------------------
# Divergence and volatility
# -----------------------------


def mean_close_divergence(d: DailySeries) -> MonthlySeries:
    """(mean - close) / mean per month."""
    frame = _monthly_frame(d)
    mean = frame["mean"].to_numpy()
    return MonthlySeries(_first_month(frame), (mean - frame["close"].to_numpy()) / mean)


def monthly_volatility(d: DailySeries) -> MonthlySeries:
    """Population std of the month's closes divided by the month's mean close."""
    frame = _monthly_frame(d)
    single = frame.index[frame["days"].to_numpy() < 2]
    if len(single):
        raise DegenerateMonthError(f"{single[0]} has a single trading day; volatility needs two")
    return MonthlySeries(
        _first_month(frame), frame["std"].to_numpy() / frame["mean"].to_numpy()
    )
