"""
The returns/population linkage R_p(t) = v1 * x(t) + v2.

Fitting (closed-form OLS or the lattice search over (v1, v2)), prediction
from a demographic predictor or from GDP per capita, the long-term trend
rate G0 / GDPpc and the residual R_o - R_p.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from demography import Preset
from econometrics import ols
from errors import AlignmentError, DomainError, LengthError, SingularityError, SpecError
from series import MonthlySeries, MonthStamp, QuarterStamp, SmoothSpec, align, ma

logger = logging.getLogger(__name__)

# GDP variant coefficients
GDP_V1 = 0.62
GDP_V2 = -0.0094
GDP_SMOOTHING = SmoothSpec(6)
# quarterly log growth to annual rate
ANNUALIZATION = 4.0

MIN_FIT_OBS = 3


class FitMethod(str, Enum):
    OLS = "ols"
    GRID = "grid"


@dataclass(frozen=True)
class ModelFit:
    v1: float
    v2: float
    residual_mean: float
    residual_std: float
    n_obs: int
    fit_window: Tuple[MonthStamp, MonthStamp]
    method: FitMethod

    def to_dict(self) -> dict:
        return {
            "v1": self.v1,
            "v2": self.v2,
            "residual_mean": self.residual_mean,
            "residual_std": self.residual_std,
            "n_obs": self.n_obs,
            "fit_window": [str(self.fit_window[0]), str(self.fit_window[1])],
            "method": self.method.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelFit":
        try:
            first, last = data["fit_window"]
            return cls(
                v1=float(data["v1"]),
                v2=float(data["v2"]),
                residual_mean=float(data["residual_mean"]),
                residual_std=float(data["residual_std"]),
                n_obs=int(data["n_obs"]),
                fit_window=(MonthStamp.parse(first), MonthStamp.parse(last)),
                method=FitMethod(data["method"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"invalid model fit {data!r}: {exc}") from None


@dataclass(frozen=True)
class GridSpec:
    """Rectangular (v1, v2) lattice, both ends inclusive."""

    v1_min: float = 0.0
    v1_max: float = 400.0
    v1_step: float = 5.0
    v2_min: float = -0.5
    v2_max: float = 0.5
    v2_step: float = 0.005

    def __post_init__(self) -> None:
        for name in ("v1", "v2"):
            lo, hi, step = (getattr(self, f"{name}_{part}") for part in ("min", "max", "step"))
            if step <= 0 or hi < lo:
                raise SpecError(f"{name} lattice needs step > 0 and max >= min")

    @staticmethod
    def _axis(lo: float, hi: float, step: float) -> np.ndarray:
        count = int(round((hi - lo) / step)) + 1
        return lo + step * np.arange(count)

    def axes(self) -> Tuple[np.ndarray, np.ndarray]:
        return (
            self._axis(self.v1_min, self.v1_max, self.v1_step),
            self._axis(self.v2_min, self.v2_max, self.v2_step),
        )

    def to_dict(self) -> dict:
        return {
            "v1_min": self.v1_min,
            "v1_max": self.v1_max,
            "v1_step": self.v1_step,
            "v2_min": self.v2_min,
            "v2_max": self.v2_max,
            "v2_step": self.v2_step,
        }


class GdpSeries:
    """
    Quarterly real GDP per capita, gap-free from ``start``. The loader keeps
    the raw ``real_gdp`` and ``population`` columns so the file can be written
    back; series built directly from per-capita values leave them unset.
    """

    def __init__(
        self,
        start: QuarterStamp,
        gdp_pc: Union[Sequence[float], np.ndarray],
        real_gdp: Optional[Sequence[float]] = None,
        population: Optional[Sequence[float]] = None,
    ) -> None:
        values = np.array(gdp_pc, dtype=np.float64)
        if values.ndim != 1 or values.size < 1:
            raise LengthError("GDP series needs at least one quarter")
        bad = np.flatnonzero(~(values > 0))
        if bad.size:
            raise DomainError(f"GDP per capita in {self.quarter(start, int(bad[0]))} must be positive")
        values.setflags(write=False)
        self.start = start
        self.gdp_pc = values
        self.real_gdp = None if real_gdp is None else np.array(real_gdp, dtype=np.float64)
        self.population = None if population is None else np.array(population, dtype=np.float64)

    @staticmethod
    def quarter(start: QuarterStamp, offset: int) -> QuarterStamp:
        q = start
        for _ in range(offset):
            q = q.next()
        return q

    def __len__(self) -> int:
        return int(self.gdp_pc.size)

    def quarters(self):
        q = self.start
        for _ in range(len(self)):
            yield q
            q = q.next()


@dataclass(frozen=True)
class TrendParams:
    g0: float

    def __post_init__(self) -> None:
        if not self.g0 > 0:
            raise SpecError(f"G0 must be positive, got {self.g0}")


# -----------------------------
# Fitting
# -----------------------------


def _fit_pair(
    observed: MonthlySeries,
    predictor: MonthlySeries,
    window: Optional[Tuple[MonthStamp, MonthStamp]],
) -> Tuple[MonthlySeries, MonthlySeries]:
    y, x = align(observed, predictor)
    if window is not None:
        y = y.window(*window)
        x = x.window(*window)
    if len(y) < MIN_FIT_OBS:
        raise AlignmentError(
            f"fit needs at least {MIN_FIT_OBS} overlapping months, got {len(y)} ({y.start}..{y.end})"
        )
    if np.ptp(x.values) == 0.0:
        raise SingularityError(f"predictor is constant over {x.start}..{x.end}")
    return y, x


def _grid_search(y: np.ndarray, x: np.ndarray, grid: GridSpec) -> Tuple[float, float]:
    """Lattice point with the smallest mean squared residual; ties go to the first."""
    v1, v2 = grid.axes()
    a = v1[:, None]
    b = v2[None, :]
    # mean of (y - a x - b)^2 expanded in sample moments
    msr = (
        np.mean(y * y)
        + a * a * np.mean(x * x)
        + b * b
        - 2.0 * a * np.mean(x * y)
        - 2.0 * b * np.mean(y)
        + 2.0 * a * b * np.mean(x)
    )
    i, j = np.unravel_index(int(np.argmin(msr)), msr.shape)
    return float(v1[i]), float(v2[j])


def fit_linear(
    observed: MonthlySeries,
    predictor: MonthlySeries,
    method: FitMethod = FitMethod.OLS,
    window: Optional[Tuple[MonthStamp, MonthStamp]] = None,
    grid: Optional[GridSpec] = None,
) -> ModelFit:
    """Fit observed = v1 * predictor + v2 over the common (or given) window."""
    method = FitMethod(method)
    y, x = _fit_pair(observed, predictor, window)
    if method == FitMethod.OLS:
        coefficients = ols(y.values, [x.values], intercept=True).coefficients
        v1, v2 = float(coefficients[0]), float(coefficients[1])
    else:
        v1, v2 = _grid_search(y.values, x.values, grid or GridSpec())
    residuals = y.values - (v1 * x.values + v2)
    fit = ModelFit(
        v1=v1,
        v2=v2,
        residual_mean=float(np.mean(residuals)),
        residual_std=float(np.std(residuals)),
        n_obs=len(y),
        fit_window=(y.start, y.end),
        method=method,
    )
    logger.info(
        "fit %s over %s..%s: v1=%.6g v2=%.6g residual std %.4g",
        method.value, y.start, y.end, v1, v2, fit.residual_std,
    )
    return fit


def fit_summary(observed: MonthlySeries, predicted: MonthlySeries, fit: ModelFit) -> dict:
    """Window statistics printed next to a fit: means, stds and R^2 of observed on predicted."""
    y, p = align(observed, predicted)
    first, last = max(fit.fit_window[0], y.start), min(fit.fit_window[1], y.end)
    y, p = y.window(first, last), p.window(first, last)
    r_squared = None
    if len(y) >= MIN_FIT_OBS and np.ptp(p.values) > 0:
        r_squared = ols(y.values, [p.values]).r_squared
    return {
        "observed_mean": float(np.mean(y.values)),
        "observed_std": float(np.std(y.values)),
        "predicted_mean": float(np.mean(p.values)),
        "predicted_std": float(np.std(p.values)),
        "r_squared": r_squared,
    }


# -----------------------------
# Prediction
# -----------------------------


def predict_returns(predictor: MonthlySeries, v1: float, v2: float) -> MonthlySeries:
    return predictor.with_values(v1 * predictor.values + v2)


def smooth_predicted(predicted: MonthlySeries, preset: Preset) -> MonthlySeries:
    """Apply the preset's smoothing of the predicted series, if it has one."""
    if preset.predicted_smoothing is None:
        return predicted
    return ma(predicted, preset.predicted_smoothing)


def gdp_predictor(g: GdpSeries, smoothing: SmoothSpec = GDP_SMOOTHING) -> MonthlySeries:
    """
    Annualized quarter-over-quarter log growth of GDP per capita, held
    constant over the quarter's three months, then smoothed.
    """
    if len(g) < 3:
        raise LengthError(f"GDP prediction needs at least 3 quarters, got {len(g)}")
    growth = ANNUALIZATION * np.log(g.gdp_pc[1:] / g.gdp_pc[:-1])
    monthly = MonthlySeries(g.start.next().first_month(), np.repeat(growth, 3))
    return ma(monthly, smoothing)


def predict_from_gdp(g: GdpSeries, v1: float = GDP_V1, v2: float = GDP_V2) -> MonthlySeries:
    return predict_returns(gdp_predictor(g), v1, v2)


def trend_growth_rate(gdp_pc: float, p: TrendParams) -> float:
    """Annual growth rate of GDP per capita on the long-term trend: G0 / GDPpc."""
    if not gdp_pc > 0:
        raise DomainError(f"GDP per capita must be positive, got {gdp_pc!r}")
    return p.g0 / gdp_pc


def residual_series(observed: MonthlySeries, predicted: MonthlySeries) -> MonthlySeries:
    o, p = align(observed, predicted)
    return o.with_values(o.values - p.values)


def naive_residual_std(observed: MonthlySeries, horizon: int) -> float:
    """Population std of the random-walk forecast error R_o(t) - R_o(t - horizon)."""
    if horizon < 1:
        raise SpecError(f"forecast horizon must be >= 1 month, got {horizon}")
    if len(observed) <= horizon:
        raise LengthError(
            f"naive forecast at horizon {horizon} needs more than {horizon} months, got {len(observed)}"
        )
    errors = observed.values[horizon:] - observed.values[:-horizon]
    return float(np.std(errors))
