"""
Tests for daily closes, monthly levels, returns and volatility
"""

import numpy as np
import pandas as pd
import pytest

from errors import DegenerateMonthError, DomainError, GapError, LengthError, ValidationError
from market import (
    DailySeries,
    LevelKind,
    ReturnMode,
    annual_return,
    cumulative_return,
    mean_close_divergence,
    monthly_levels,
    monthly_returns,
    monthly_volatility,
    rolling_annual_return,
)
from series import MonthStamp
from tests.conftest import make_series


@pytest.fixture
def two_months():
    """Three January and two February closes"""
    return DailySeries(
        ["2020-01-02", "2020-01-15", "2020-01-31", "2020-02-03", "2020-02-28"],
        [100.0, 102.0, 104.0, 103.0, 106.0],
    )


def random_daily(rng, months=30):
    days = pd.bdate_range("2000-01-01", periods=months * 21)
    closes = 1000.0 * np.exp(np.cumsum(rng.normal(0.0003, 0.01, len(days))))
    return DailySeries(days.to_numpy().astype("datetime64[D]"), closes)


class TestDailySeries:
    """Tests for DailySeries validation"""

    def test_dates_must_increase(self):
        """Test that out-of-order dates are rejected"""
        with pytest.raises(ValidationError):
            DailySeries(["2020-01-03", "2020-01-02"], [1.0, 2.0])

    def test_positive_closes(self):
        """Test that a zero close is a domain error"""
        with pytest.raises(DomainError):
            DailySeries(["2020-01-02", "2020-01-03"], [1.0, 0.0])


class TestMonthlyLevels:
    """Tests for monthly_levels"""

    def test_last_close(self, two_months):
        """Test month-end closes"""
        levels = monthly_levels(two_months, LevelKind.CLOSE)

        assert levels.start == MonthStamp(2020, 1)
        assert list(levels.values) == [104.0, 106.0]

    def test_mean_close(self, two_months):
        """Test monthly mean closes"""
        levels = monthly_levels(two_months, LevelKind.MEAN)

        assert np.allclose(levels.values, [102.0, 104.5])

    def test_empty_month_is_gap(self):
        """Test that a month without trading days is a gap"""
        d = DailySeries(["2020-01-02", "2020-03-02"], [1.0, 2.0])

        with pytest.raises(GapError, match="2020-02"):
            monthly_levels(d)

    def test_scale_equivariant(self, two_months):
        """Test that scaling closes scales levels"""
        scaled = monthly_levels(two_months.scaled(10.0))

        assert np.allclose(scaled.values, [1040.0, 1060.0])


class TestReturns:
    """Tests for monthly, annual and rolling returns"""

    def test_simple_monthly(self):
        """Test simple monthly returns"""
        r = monthly_returns(make_series([100.0, 110.0, 121.0]))

        assert r.start == MonthStamp(2000, 2)
        assert np.allclose(r.values, [0.1, 0.1])

    def test_log_monthly(self):
        """Test log monthly returns"""
        r = monthly_returns(make_series([100.0, 110.0]), ReturnMode.LOG)

        assert r.values[0] == pytest.approx(np.log(1.1), abs=1e-15)

    def test_annual_needs_thirteen_months(self):
        """Test that twelve months are not enough for an annual return"""
        with pytest.raises(LengthError):
            annual_return(make_series(np.ones(12)))
        with pytest.raises(LengthError):
            rolling_annual_return(make_series(np.ones(12)))

    def test_rolling_is_running_sum(self, rng):
        """Test the rolling annual return against a loop over monthly returns"""
        levels = make_series(rng.uniform(50.0, 150.0, size=40))
        r = monthly_returns(levels).values
        rolling = rolling_annual_return(levels)
        expected = [sum(r[i - 11 : i + 1]) for i in range(11, len(r))]

        assert rolling.start == MonthStamp(2001, 1)
        assert np.allclose(rolling.values, expected, atol=1e-13)

    def test_log_rolling_telescopes(self, rng):
        """Test that log-mode rolling and annual returns agree for 100 seeded series"""
        for _ in range(100):
            levels = make_series(np.exp(np.cumsum(rng.normal(0.0, 0.05, size=60))) * 100.0)
            rolling = rolling_annual_return(levels, ReturnMode.LOG)
            annual = annual_return(levels, ReturnMode.LOG)

            assert rolling.start == annual.start
            assert np.max(np.abs(rolling.values - annual.values)) <= 1e-12

    def test_cumulative(self):
        """Test the additive running total"""
        out = cumulative_return(make_series([0.1, -0.05, 0.02]))

        assert np.allclose(out.values, [0.1, 0.05, 0.07])

    def test_constant_levels_give_zero_returns(self):
        """Test constant prices"""
        assert np.all(rolling_annual_return(make_series(np.full(20, 5.0))).values == 0.0)

    def test_cumulative_monotone_exactly_when_returns_non_negative(self, rng):
        """Test that the running total never falls exactly when no later return is negative"""
        for i in range(40):
            r = rng.normal(0.0, 0.02, size=24)
            if i % 2:
                r = np.abs(r)
            out = cumulative_return(make_series(r))

            assert bool(np.all(np.diff(out.values) >= 0.0)) == bool(np.all(r[1:] >= 0.0))

    @pytest.mark.parametrize("mode", [ReturnMode.SIMPLE, ReturnMode.LOG])
    def test_monthly_returns_scale_invariant(self, rng, mode):
        """Test that rescaling levels leaves monthly returns unchanged"""
        levels = rng.uniform(50.0, 150.0, size=30)
        base = monthly_returns(make_series(levels), mode)
        scaled = monthly_returns(make_series(levels * 1000.0), mode)

        assert scaled.start == base.start
        assert np.allclose(base.values, scaled.values, rtol=0.0, atol=1e-12)


class TestVolatilityAndDivergence:
    """Tests for monthly_volatility and mean_close_divergence"""

    def test_divergence(self, two_months):
        """Test (mean - close) / mean"""
        out = mean_close_divergence(two_months)

        assert np.allclose(out.values, [(102.0 - 104.0) / 102.0, (104.5 - 106.0) / 104.5])

    def test_volatility(self, two_months):
        """Test population std over mean close"""
        out = monthly_volatility(two_months)

        assert np.allclose(out.values, [np.sqrt(8.0 / 3.0) / 102.0, 1.5 / 104.5])

    def test_single_day_month(self):
        """Test that a one-day month is degenerate"""
        d = DailySeries(["2020-01-02", "2020-01-03", "2020-02-03"], [1.0, 2.0, 3.0])

        with pytest.raises(DegenerateMonthError):
            monthly_volatility(d)

    def test_volatility_scale_invariant(self, rng):
        """Test that volatility ignores the price scale"""
        d = random_daily(rng)

        assert np.allclose(monthly_volatility(d).values, monthly_volatility(d.scaled(1000.0)).values, atol=1e-12)

    def test_divergence_scale_invariant(self, rng):
        """Test that the mean-close divergence ignores the price scale"""
        d = random_daily(rng)

        assert np.allclose(mean_close_divergence(d).values, mean_close_divergence(d.scaled(1000.0)).values, rtol=0.0, atol=1e-12)
