"""
Calendar-indexed series algebra: month stamps, monthly series and the
primitives every other module composes (moving averages, log differences,
running sums, alignment).
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from errors import AlignmentError, DomainError, LengthError, SpecError, ValidationError

logger = logging.getLogger(__name__)


# -----------------------------
# Time axis
# -----------------------------


@dataclass(frozen=True, order=True)
class MonthStamp:
    """A calendar month. Ordering is (year, month) lexicographic."""

    year: int
    month: int

    def __post_init__(self) -> None:
        if not 1 <= self.month <= 12:
            raise ValidationError(f"month must be in 1..12, got {self.month}")

    @classmethod
    def parse(cls, text: str) -> "MonthStamp":
        """Parse ``YYYY-MM``."""
        parts = text.strip().split("-")
        if len(parts) != 2 or len(parts[0]) != 4 or len(parts[1]) != 2:
            raise ValidationError(f"expected YYYY-MM, got {text!r}")
        try:
            return cls(int(parts[0]), int(parts[1]))
        except ValueError:
            raise ValidationError(f"expected YYYY-MM, got {text!r}") from None

    @classmethod
    def from_ordinal(cls, ordinal: int) -> "MonthStamp":
        year, month0 = divmod(ordinal, 12)
        return cls(year, month0 + 1)

    @property
    def ordinal(self) -> int:
        """Months since year 0, January."""
        return self.year * 12 + self.month - 1

    def shift(self, months: int) -> "MonthStamp":
        return MonthStamp.from_ordinal(self.ordinal + months)

    def __sub__(self, other: "MonthStamp") -> int:
        return self.ordinal - other.ordinal

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


@dataclass(frozen=True, order=True)
class QuarterStamp:
    year: int
    quarter: int

    def __post_init__(self) -> None:
        if not 1 <= self.quarter <= 4:
            raise ValidationError(f"quarter must be in 1..4, got {self.quarter}")

    @classmethod
    def parse(cls, text: str) -> "QuarterStamp":
        """Parse ``YYYY-Qn``."""
        head, sep, tail = text.strip().partition("-Q")
        if not sep or len(head) != 4 or len(tail) != 1:
            raise ValidationError(f"expected YYYY-Qn, got {text!r}")
        try:
            return cls(int(head), int(tail))
        except ValueError:
            raise ValidationError(f"expected YYYY-Qn, got {text!r}") from None

    @property
    def ordinal(self) -> int:
        return self.year * 4 + self.quarter - 1

    def next(self) -> "QuarterStamp":
        year, q0 = divmod(self.ordinal + 1, 4)
        return QuarterStamp(year, q0 + 1)

    def first_month(self) -> MonthStamp:
        return MonthStamp(self.year, 3 * (self.quarter - 1) + 1)

    def __str__(self) -> str:
        return f"{self.year:04d}-Q{self.quarter}"


# -----------------------------
# Monthly series
# -----------------------------


class MonthlySeries:
    """
    Gap-free run of monthly values: value ``i`` belongs to ``start + i`` months.
    Values are stored as a read-only float64 array.
    """

    def __init__(self, start: MonthStamp, values: Union[Sequence[float], np.ndarray]) -> None:
        arr = np.array(values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValidationError("monthly series values must be one-dimensional")
        if arr.size < 1:
            raise LengthError("monthly series must hold at least one value")
        arr.setflags(write=False)
        self.start = start
        self.values = arr

    def __len__(self) -> int:
        return int(self.values.size)

    def __repr__(self) -> str:
        return f"MonthlySeries(start={self.start}, end={self.end}, n={len(self)})"

    @property
    def end(self) -> MonthStamp:
        return self.start.shift(len(self) - 1)

    def months(self) -> List[MonthStamp]:
        return [self.start.shift(i) for i in range(len(self))]

    def items(self) -> Iterator[Tuple[MonthStamp, float]]:
        for i, value in enumerate(self.values):
            yield self.start.shift(i), float(value)

    def restamp(self, months: int) -> "MonthlySeries":
        """Same values, time axis moved by ``months``."""
        return MonthlySeries(self.start.shift(months), self.values)

    def window(self, first: MonthStamp, last: MonthStamp) -> "MonthlySeries":
        """Sub-series covering ``first..last`` inclusive."""
        if last < first:
            raise AlignmentError(f"empty window {first}..{last}")
        if first < self.start or last > self.end:
            raise AlignmentError(
                f"window {first}..{last} is not inside {self.start}..{self.end}"
            )
        lo = first - self.start
        hi = last - self.start + 1
        return MonthlySeries(first, self.values[lo:hi])

    def with_values(self, values: np.ndarray) -> "MonthlySeries":
        return MonthlySeries(self.start, values)


class Alignment(str, Enum):
    TRAILING = "trailing"
    CENTERED = "centered"


@dataclass(frozen=True)
class SmoothSpec:
    """Moving-average window over calendar months."""

    window: int
    alignment: Alignment = Alignment.TRAILING

    def __post_init__(self) -> None:
        if self.window < 1:
            raise SpecError(f"smoothing window must be >= 1, got {self.window}")
        if self.alignment == Alignment.CENTERED and self.window % 2 == 0:
            raise SpecError(f"centered smoothing needs an odd window, got {self.window}")

    @property
    def lead(self) -> int:
        """Months between the series start and the first smoothed month."""
        if self.alignment == Alignment.TRAILING:
            return self.window - 1
        return (self.window - 1) // 2

    def label(self) -> str:
        return f"MA({self.window}) {self.alignment.value}"

    @classmethod
    def from_dict(cls, data: dict) -> "SmoothSpec":
        return cls(int(data["window"]), Alignment(data.get("alignment", Alignment.TRAILING.value)))

    def to_dict(self) -> dict:
        return {"window": self.window, "alignment": self.alignment.value}


def _require_length(s: MonthlySeries, window: int, what: str) -> None:
    if window < 1:
        raise SpecError(f"{what} window must be >= 1, got {window}")
    if len(s) < window:
        raise LengthError(
            f"{what} window {window} is longer than the series ({len(s)} months from {s.start})"
        )


def ma(s: MonthlySeries, spec: SmoothSpec) -> MonthlySeries:
    """Moving average; the result is shortened, never padded."""
    _require_length(s, spec.window, "moving-average")
    means = sliding_window_view(s.values, spec.window).mean(axis=1)
    return MonthlySeries(s.start.shift(spec.lead), means)


def dln(s: MonthlySeries) -> MonthlySeries:
    """Month-over-month log change ``ln(s_t / s_{t-1})``."""
    if len(s) < 2:
        raise LengthError(f"log change needs at least two months, got {len(s)}")
    bad = np.flatnonzero(~(s.values > 0))
    if bad.size:
        month = s.start.shift(int(bad[0]))
        raise DomainError(f"log change needs positive values; {month} holds {s.values[bad[0]]!r}")
    return MonthlySeries(s.start.shift(1), np.log(s.values[1:] / s.values[:-1]))


def running_sum(s: MonthlySeries, window: int) -> MonthlySeries:
    """Trailing sum over ``window`` consecutive months."""
    _require_length(s, window, "running-sum")
    sums = sliding_window_view(s.values, window).sum(axis=1)
    return MonthlySeries(s.start.shift(window - 1), sums)


def align(a: MonthlySeries, b: MonthlySeries) -> Tuple[MonthlySeries, MonthlySeries]:
    """Trim both series to the intersection of their month ranges."""
    first = max(a.start, b.start)
    last = min(a.end, b.end)
    if last < first:
        raise AlignmentError(
            f"series do not overlap: {a.start}..{a.end} vs {b.start}..{b.end}"
        )
    return a.window(first, last), b.window(first, last)


def describe(s: MonthlySeries) -> dict:
    """Span, mean and population std of a series."""
    return {
        "start": str(s.start),
        "end": str(s.end),
        "n": len(s),
        "mean": float(np.mean(s.values)),
        "std": float(np.std(s.values)),
    }
