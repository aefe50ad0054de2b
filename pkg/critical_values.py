"""
Embedded critical-value tables for the unit-root and cointegration tests.

Provenance:

* Dickey-Fuller t-statistics: Fuller (1976), Table 8.5.2, sample sizes
  25/50/100/250/500/inf, the table Stata's ``dfuller`` interpolates.
* DF-GLS with a linear trend: Elliott, Rothenberg and Stock (1996), Table 1.
  The demeaned DF-GLS statistic shares the no-constant Dickey-Fuller
  distribution, so the constant case reuses that table.
* Engle-Granger residual test (two variables, constant in the first step):
  MacKinnon (2010) response surface ``b0 + b1/n + b2/n**2``.
* Johansen trace test, 5% level: Osterwald-Lenum (1992), indexed by the number
  of common trends k - r.

Between tabulated sample sizes the value is interpolated linearly in 1/n;
beyond the largest finite size the asymptotic row is approached the same way.
"""

from typing import Dict, Tuple

import numpy as np

from errors import SpecError

LEVELS: Tuple[str, ...] = ("1%", "5%", "10%")

_DF_SIZES = np.array([25, 50, 100, 250, 500, np.inf])

# rows follow _DF_SIZES, columns follow LEVELS
_DF_TABLES: Dict[str, np.ndarray] = {
    "none": np.array(
        [
            [-2.66, -1.95, -1.60],
            [-2.62, -1.95, -1.61],
            [-2.60, -1.95, -1.61],
            [-2.58, -1.95, -1.62],
            [-2.58, -1.95, -1.62],
            [-2.58, -1.95, -1.62],
        ]
    ),
    "constant": np.array(
        [
            [-3.75, -3.00, -2.63],
            [-3.58, -2.93, -2.60],
            [-3.51, -2.89, -2.58],
            [-3.46, -2.88, -2.57],
            [-3.44, -2.87, -2.57],
            [-3.43, -2.86, -2.57],
        ]
    ),
    "constant_trend": np.array(
        [
            [-4.38, -3.60, -3.24],
            [-4.15, -3.50, -3.18],
            [-4.04, -3.45, -3.15],
            [-3.99, -3.43, -3.13],
            [-3.98, -3.42, -3.13],
            [-3.96, -3.41, -3.12],
        ]
    ),
}

_ERS_SIZES = np.array([50, 100, 200, np.inf])
_ERS_TREND = np.array(
    [
        [-3.77, -3.19, -2.89],
        [-3.58, -3.03, -2.74],
        [-3.46, -2.93, -2.64],
        [-3.48, -2.89, -2.57],
    ]
)

_EG_SURFACE = {
    "1%": (-3.89644, -10.9519, -22.527),
    "5%": (-3.33613, -6.1101, -6.823),
    "10%": (-3.04445, -4.2412, -2.720),
}

_JOHANSEN_TRACE_5PCT: Dict[str, Tuple[float, ...]] = {
    "none": (3.84, 12.53, 24.31, 39.89, 59.46),
    "rconstant": (9.24, 19.96, 34.91, 53.12, 76.07),
    "constant": (3.76, 15.41, 29.68, 47.21, 68.52),
}


def _interpolate(sizes: np.ndarray, table: np.ndarray, n: int) -> Dict[str, float]:
    if n < 1:
        raise SpecError(f"sample size must be positive, got {n}")
    inverse = np.where(np.isinf(sizes), 0.0, 1.0 / sizes)
    # np.interp wants increasing abscissae
    x = inverse[::-1]
    target = min(1.0 / n, x[-1])
    return {
        level: float(np.interp(target, x, table[::-1, j])) for j, level in enumerate(LEVELS)
    }


def dickey_fuller(trend: str, n: int) -> Dict[str, float]:
    """Dickey-Fuller t critical values for ``trend`` at sample size ``n``."""
    try:
        table = _DF_TABLES[trend]
    except KeyError:
        raise SpecError(f"no Dickey-Fuller table for trend {trend!r}") from None
    return _interpolate(_DF_SIZES, table, n)


def dfgls(trend: str, n: int) -> Dict[str, float]:
    if trend == "constant":
        return dickey_fuller("none", n)
    if trend == "constant_trend":
        return _interpolate(_ERS_SIZES, _ERS_TREND, n)
    raise SpecError(f"DF-GLS needs trend constant or constant_trend, got {trend!r}")


def engle_granger(n: int) -> Dict[str, float]:
    if n < 1:
        raise SpecError(f"sample size must be positive, got {n}")
    return {
        level: b0 + b1 / n + b2 / n**2 for level, (b0, b1, b2) in _EG_SURFACE.items()
    }


def johansen_trace_5pct(trend: str, k: int) -> Tuple[float, ...]:
    """5% trace critical values for ranks 0..k-1 of a k-variable system."""
    try:
        table = _JOHANSEN_TRACE_5PCT[trend]
    except KeyError:
        raise SpecError(f"no Johansen table for trend {trend!r}") from None
    if not 1 <= k <= len(table):
        raise SpecError(f"Johansen tables cover 1..{len(table)} variables, got {k}")
    return tuple(table[k - r - 1] for r in range(k))
