"""
Predictor series from single-year-of-age population estimates.

A cohort proxy takes the counts of one age (optionally averaged with its four
neighbours), smooths them over calendar months and re-stamps the time axis so
the series stands in for the nine-year-olds at the months it proxies.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Sequence, Union

import numpy as np

from errors import AgeRangeError, ConfigError, LengthError, SpecError, ValidationError
from series import MonthlySeries, MonthStamp, SmoothSpec, dln, ma

logger = logging.getLogger(__name__)

TARGET_AGE = 9


class AgePyramid:
    """
    Monthly population counts by single year of age.

    ``counts[i, a]`` is the count at age ``a`` in month ``start + i``.
    ``interpolated[i]`` flags months filled in by the loader rather than read.
    """

    def __init__(
        self,
        start: MonthStamp,
        counts: Union[Sequence[Sequence[float]], np.ndarray],
        interpolated: Optional[Sequence[bool]] = None,
    ) -> None:
        grid = np.array(counts, dtype=np.float64)
        if grid.ndim != 2 or grid.shape[0] < 1 or grid.shape[1] < 1:
            raise ValidationError("age pyramid needs a months x ages table")
        if not np.all(np.isfinite(grid)):
            raise ValidationError("age pyramid holds non-finite counts")
        negative = np.argwhere(grid < 0)
        if negative.size:
            i, age = negative[0]
            raise ValidationError(
                f"negative count {grid[i, age]!r} at {start.shift(int(i))}, age {int(age)}"
            )
        flags = np.zeros(grid.shape[0], dtype=bool) if interpolated is None else np.array(interpolated, dtype=bool)
        if flags.shape != (grid.shape[0],):
            raise ValidationError("interpolation flags must match the number of months")
        grid.setflags(write=False)
        flags.setflags(write=False)
        self.start = start
        self.counts = grid
        self.interpolated = flags

    @property
    def max_age(self) -> int:
        return int(self.counts.shape[1] - 1)

    @property
    def n_months(self) -> int:
        return int(self.counts.shape[0])

    @property
    def end(self) -> MonthStamp:
        return self.start.shift(self.n_months - 1)

    def age_series(self, age: int) -> MonthlySeries:
        if not 0 <= age <= self.max_age:
            raise AgeRangeError(f"age {age} is outside 0..{self.max_age}")
        return MonthlySeries(self.start, self.counts[:, age])

    def scaled(self, factor: float) -> "AgePyramid":
        return AgePyramid(self.start, self.counts * factor, self.interpolated)


class AgeAveraging(str, Enum):
    FIVE_AGE = "five_age"
    NONE = "none"


@dataclass(frozen=True)
class ProxySpec:
    """How to build the stand-in for N9 from one anchor age."""

    anchor_age: int
    age_averaging: AgeAveraging = AgeAveraging.FIVE_AGE
    month_smoothing: Optional[SmoothSpec] = None

    @property
    def shift_months(self) -> int:
        """Re-stamping offset: (9 - anchor_age) years."""
        return (TARGET_AGE - self.anchor_age) * 12

    def validate(self, p: AgePyramid) -> None:
        if self.age_averaging == AgeAveraging.FIVE_AGE:
            if not 2 <= self.anchor_age <= p.max_age - 2:
                raise AgeRangeError(
                    f"five-age averaging around {self.anchor_age} needs ages "
                    f"{self.anchor_age - 2}..{self.anchor_age + 2} within 0..{p.max_age}"
                )
        elif not 0 <= self.anchor_age <= p.max_age:
            raise AgeRangeError(f"anchor age {self.anchor_age} is outside 0..{p.max_age}")

    def to_dict(self) -> dict:
        return {
            "anchor_age": self.anchor_age,
            "age_averaging": self.age_averaging.value,
            "month_smoothing": self.month_smoothing.to_dict() if self.month_smoothing else None,
        }


@dataclass(frozen=True)
class Preset:
    """A named proxy recipe with the coefficients reported for it."""

    name: str
    proxy: ProxySpec
    v1: float
    v2: float
    predicted_smoothing: Optional[SmoothSpec] = None
    description: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "proxy": self.proxy.to_dict(),
            "v1": self.v1,
            "v2": self.v2,
            "predicted_smoothing": (
                self.predicted_smoothing.to_dict() if self.predicted_smoothing else None
            ),
        }


_MA12 = SmoothSpec(12)

PRESETS: Dict[str, Preset] = {
    preset.name: preset
    for preset in (
        Preset(
            "postcensal-n9",
            ProxySpec(9, AgeAveraging.FIVE_AGE, _MA12),
            170.0,
            -0.04,
            description="postcensal nine-year-olds, ages 7-11 averaged",
        ),
        Preset(
            "intercensal-n9",
            ProxySpec(9, AgeAveraging.FIVE_AGE, _MA12),
            165.0,
            -0.055,
            description="intercensal nine-year-olds, ages 7-11 averaged",
        ),
        Preset(
            "n7-forecast",
            ProxySpec(7, AgeAveraging.FIVE_AGE, _MA12),
            165.0,
            -0.06,
            description="seven-year-olds shifted two years ahead",
        ),
        Preset(
            "n17-backcast",
            ProxySpec(17, AgeAveraging.NONE, SmoothSpec(4)),
            35.0,
            0.089,
            description="raw seventeen-year-olds, MA(4), shifted eight years back",
        ),
        Preset(
            "n3-forecast",
            ProxySpec(3, AgeAveraging.NONE, None),
            160.0,
            -0.23,
            predicted_smoothing=SmoothSpec(6),
            description="raw three-year-olds shifted six years ahead, predicted series MA(6)",
        ),
    )
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; choose one of {', '.join(sorted(PRESETS))}"
        ) from None


# -----------------------------
# Operations
# -----------------------------


def five_age_average(p: AgePyramid, center: int) -> MonthlySeries:
    """Per-month mean of the counts at ages center-2 .. center+2."""
    if not 2 <= center <= p.max_age - 2:
        raise AgeRangeError(f"five-age center {center} must lie in 2..{p.max_age - 2}")
    block = p.counts[:, center - 2 : center + 3]
    return MonthlySeries(p.start, block.sum(axis=1) / 5.0)


def cohort_proxy(p: AgePyramid, spec: ProxySpec) -> MonthlySeries:
    """Anchor-age series, optionally month-smoothed, re-stamped to the N9 months it proxies."""
    spec.validate(p)
    if spec.age_averaging == AgeAveraging.FIVE_AGE:
        base = five_age_average(p, spec.anchor_age)
    else:
        base = p.age_series(spec.anchor_age)
    if spec.month_smoothing is not None:
        if len(base) < spec.month_smoothing.window:
            raise LengthError(
                f"{spec.month_smoothing.label()} needs {spec.month_smoothing.window} months, "
                f"pyramid has {len(base)}"
            )
        base = ma(base, spec.month_smoothing)
    proxy = base.restamp(spec.shift_months)
    logger.debug(
        "proxy age %d (%s) -> %s..%s", spec.anchor_age, spec.age_averaging.value, proxy.start, proxy.end
    )
    return proxy


def predictor_dln(proxy: MonthlySeries) -> MonthlySeries:
    """Month-over-month log change of a proxy; the slope v1 absorbs scale."""
    return dln(proxy)


def preset_predictor(p: AgePyramid, name: str) -> MonthlySeries:
    return predictor_dln(cohort_proxy(p, get_preset(name).proxy))


def spec_from_dict(data: dict) -> ProxySpec:
    """Build a ProxySpec from its ``to_dict`` form."""
    try:
        smoothing = data.get("month_smoothing")
        return ProxySpec(
            anchor_age=int(data["anchor_age"]),
            age_averaging=AgeAveraging(data.get("age_averaging", AgeAveraging.FIVE_AGE.value)),
            month_smoothing=SmoothSpec.from_dict(smoothing) if smoothing else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"invalid proxy spec {data!r}: {exc}") from None
