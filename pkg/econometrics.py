"""
Self-contained test battery for the returns/population linkage.

OLS, ADF and DF-GLS unit-root tests, the Engle-Granger residual test, VAR
estimation, VAR lag-order selection and the Johansen trace test. Reports
serialize to JSON in the layout of the published tables (test, lag,
statistic, critical values, decision).
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy import stats

import critical_values
from errors import EigenSolveError, LengthError, SingularityError, SpecError

logger = logging.getLogger(__name__)

ArrayLike = Sequence[float]


class TrendSpec(str, Enum):
    NONE = "none"
    CONSTANT = "constant"
    CONSTANT_TREND = "constant_trend"


class JohansenTrend(str, Enum):
    NONE = "none"
    RCONSTANT = "rconstant"  # constant restricted to the cointegration space
    CONSTANT = "constant"  # unrestricted constant


class UnitRootTest(str, Enum):
    ADF = "adf"
    DFGLS = "dfgls"


# local-to-unity constants for GLS detrending
DFGLS_CBAR = {TrendSpec.CONSTANT: -7.0, TrendSpec.CONSTANT_TREND: -13.5}


def _as_vector(values: ArrayLike, name: str = "series") -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if not np.all(np.isfinite(arr)):
        raise SpecError(f"{name} holds non-finite values")
    return arr


def _as_matrix(data: Sequence[Sequence[float]]) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise SpecError("multivariate data must be a (time x variables) table")
    if not np.all(np.isfinite(arr)):
        raise SpecError("data holds non-finite values")
    return arr


# -----------------------------
# OLS
# -----------------------------


@dataclass(frozen=True)
class OlsResult:
    """Least-squares fit. With an intercept, it is the last coefficient."""

    coefficients: np.ndarray
    stderrs: np.ndarray
    r_squared: float
    rmse: float
    residuals: np.ndarray
    n_obs: int
    intercept: bool = True

    @property
    def tvalues(self) -> np.ndarray:
        return self.coefficients / self.stderrs

    def to_dict(self) -> dict:
        return {
            "coefficients": [float(c) for c in self.coefficients],
            "stderrs": [float(s) for s in self.stderrs],
            "tvalues": [float(t) for t in self.tvalues],
            "r_squared": self.r_squared,
            "rmse": self.rmse,
            "n_obs": self.n_obs,
            "intercept": self.intercept,
        }


def ols(y: ArrayLike, regressors: Sequence[ArrayLike], intercept: bool = True) -> OlsResult:
    """
    Least squares of ``y`` on ``regressors`` (plus a trailing constant column
    when ``intercept``), solved through a QR decomposition of the design.
    """
    yv = _as_vector(y, "dependent series")
    n = yv.size
    columns = [_as_vector(r, "regressor") for r in regressors]
    for col in columns:
        if col.size != n:
            raise SpecError(f"regressor has {col.size} observations, dependent series {n}")
    if intercept:
        columns.append(np.ones(n))
    if not columns:
        raise SpecError("regression needs at least one regressor or an intercept")
    X = np.column_stack(columns)
    k = X.shape[1]
    if n <= k:
        raise LengthError(f"regression needs more than {k} observations, got {n}")

    q, r = scipy.linalg.qr(X, mode="economic")
    diag = np.abs(np.diag(r))
    tol = diag.max() * max(n, k) * np.finfo(np.float64).eps
    if diag.max() == 0.0 or diag.min() <= tol:
        raise SingularityError(
            f"design matrix is rank deficient (column {int(np.argmin(diag))} of {k} is collinear)"
        )
    beta = scipy.linalg.solve_triangular(r, q.T @ yv)
    residuals = yv - X @ beta
    ssr = float(residuals @ residuals)
    dof = n - k
    sigma2 = ssr / dof
    r_inv = scipy.linalg.solve_triangular(r, np.eye(k))
    stderrs = np.sqrt(sigma2 * np.sum(r_inv**2, axis=1))

    centered = yv - yv.mean() if intercept else yv
    sst = float(centered @ centered)
    r_squared = 1.0 - ssr / sst if sst > 0 else 1.0
    return OlsResult(
        coefficients=beta,
        stderrs=stderrs,
        r_squared=min(1.0, max(0.0, r_squared)) if intercept else r_squared,
        rmse=math.sqrt(sigma2),
        residuals=residuals,
        n_obs=n,
        intercept=intercept,
    )


# -----------------------------
# Unit-root tests
# -----------------------------


@dataclass(frozen=True)
class LagRow:
    lag: int
    statistic: float
    n_obs: int
    critical_values: Dict[str, float]
    reject: Dict[str, bool]

    def to_dict(self) -> dict:
        return {
            "lag": self.lag,
            "statistic": self.statistic,
            "n_obs": self.n_obs,
            "critical_values": dict(self.critical_values),
            "reject": dict(self.reject),
        }


@dataclass(frozen=True)
class UnitRootReport:
    """One unit-root test over lags 0..max_lag; the decision is taken at ``lag``."""

    test: UnitRootTest
    trend: TrendSpec
    per_lag: Tuple[LagRow, ...]
    lag: int
    critical_values: Dict[str, float]
    reject_at: Dict[str, bool]
    critical_source: str
    label: str = ""

    @property
    def statistic(self) -> float:
        return self.row(self.lag).statistic

    def row(self, lag: int) -> LagRow:
        for row in self.per_lag:
            if row.lag == lag:
                return row
        raise SpecError(f"lag {lag} was not tested")

    def with_label(self, label: str) -> "UnitRootReport":
        return UnitRootReport(
            self.test, self.trend, self.per_lag, self.lag, self.critical_values,
            self.reject_at, self.critical_source, label,
        )

    def to_dict(self) -> dict:
        return {
            "test": self.test.value,
            "series": self.label,
            "trend": self.trend.value,
            "lag": self.lag,
            "statistic": self.statistic,
            "critical_values": dict(self.critical_values),
            "reject_at": dict(self.reject_at),
            "critical_source": self.critical_source,
            "per_lag": [row.to_dict() for row in self.per_lag],
        }


def _df_statistic(x: np.ndarray, lag: int, trend: TrendSpec) -> Tuple[float, int]:
    """t-ratio on x_{t-1} in the augmented Dickey-Fuller regression."""
    dx = np.diff(x)
    y = dx[lag:]
    n_obs = y.size
    regressors: List[np.ndarray] = [x[lag:-1]]
    for i in range(1, lag + 1):
        regressors.append(dx[lag - i : dx.size - i])
    if trend == TrendSpec.CONSTANT_TREND:
        regressors.append(np.arange(1, n_obs + 1, dtype=np.float64))
    fit = ols(y, regressors, intercept=trend != TrendSpec.NONE)
    return float(fit.coefficients[0] / fit.stderrs[0]), n_obs


def _deterministic_terms(trend: TrendSpec) -> int:
    return {TrendSpec.NONE: 0, TrendSpec.CONSTANT: 1, TrendSpec.CONSTANT_TREND: 2}[trend]


def _check_length(n: int, max_lag: int, trend: TrendSpec) -> None:
    if max_lag < 0:
        raise SpecError(f"max lag must be non-negative, got {max_lag}")
    # rows n - 1 - max_lag must exceed regressors 1 + max_lag + deterministic terms
    needed = 2 * max_lag + 2 + _deterministic_terms(trend)
    if n <= needed:
        raise LengthError(
            f"unit-root test with max lag {max_lag} and trend {trend.value} needs more than "
            f"{needed} observations, got {n}"
        )


def _unit_root_report(
    test: UnitRootTest,
    trend: TrendSpec,
    x: np.ndarray,
    max_lag: int,
    report_lag: Optional[int],
    critical: Callable[[int], Dict[str, float]],
    source: str,
) -> UnitRootReport:
    lag = max_lag if report_lag is None else report_lag
    if not 0 <= lag <= max_lag:
        raise SpecError(f"reported lag {lag} must lie in 0..{max_lag}")
    rows = []
    for ell in range(max_lag + 1):
        statistic, n_obs = _df_statistic(x, ell, trend if test == UnitRootTest.ADF else TrendSpec.NONE)
        cv = critical(n_obs)
        rows.append(
            LagRow(
                lag=ell,
                statistic=statistic,
                n_obs=n_obs,
                critical_values=cv,
                reject={level: statistic < value for level, value in cv.items()},
            )
        )
    chosen = rows[lag]
    logger.debug("%s(%s) lag %d: %.4f", test.value, trend.value, lag, chosen.statistic)
    return UnitRootReport(
        test=test,
        trend=trend,
        per_lag=tuple(rows),
        lag=lag,
        critical_values=chosen.critical_values,
        reject_at=chosen.reject,
        critical_source=source,
    )


def adf_test(
    s: ArrayLike,
    max_lag: int,
    trend: TrendSpec = TrendSpec.CONSTANT,
    report_lag: Optional[int] = None,
) -> UnitRootReport:
    """Augmented Dickey-Fuller test at every lag 0..max_lag."""
    trend = TrendSpec(trend)
    x = _as_vector(s)
    _check_length(x.size, max_lag, trend)
    return _unit_root_report(
        UnitRootTest.ADF,
        trend,
        x,
        max_lag,
        report_lag,
        lambda n: critical_values.dickey_fuller(trend.value, n),
        "fuller-1976",
    )


def gls_detrend(x: ArrayLike, trend: TrendSpec) -> np.ndarray:
    """Quasi-difference GLS demeaning/detrending with the local-to-unity constant."""
    trend = TrendSpec(trend)
    if trend not in DFGLS_CBAR:
        raise SpecError(f"DF-GLS needs trend constant or constant_trend, got {trend.value}")
    xv = _as_vector(x)
    n = xv.size
    alpha = 1.0 + DFGLS_CBAR[trend] / n
    z = np.ones((n, 1))
    if trend == TrendSpec.CONSTANT_TREND:
        z = np.column_stack((z, np.arange(1, n + 1, dtype=np.float64)))
    xq = np.concatenate(([xv[0]], xv[1:] - alpha * xv[:-1]))
    zq = np.vstack((z[:1], z[1:] - alpha * z[:-1]))
    beta = ols(xq, list(zq.T), intercept=False).coefficients
    return xv - z @ beta


def dfgls_test(
    s: ArrayLike,
    max_lag: int,
    trend: TrendSpec = TrendSpec.CONSTANT,
    report_lag: Optional[int] = None,
) -> UnitRootReport:
    """DF-GLS: GLS-detrend, then the no-deterministic ADF regression."""
    trend = TrendSpec(trend)
    if trend == TrendSpec.NONE:
        raise SpecError("DF-GLS needs trend constant or constant_trend")
    x = _as_vector(s)
    _check_length(x.size, max_lag, trend)
    detrended = gls_detrend(x, trend)
    source = "fuller-1976-no-constant" if trend == TrendSpec.CONSTANT else "ers-1996"
    return _unit_root_report(
        UnitRootTest.DFGLS,
        trend,
        detrended,
        max_lag,
        report_lag,
        lambda n: critical_values.dfgls(trend.value, n),
        source,
    )


def eg_residual_test(
    residual: ArrayLike, max_lag: int, report_lag: Optional[int] = None
) -> UnitRootReport:
    """Unit-root test of a pre-fit difference R_o - R_p, no deterministic terms."""
    return adf_test(residual, max_lag, TrendSpec.NONE, report_lag)


def eg_two_step(
    y: ArrayLike, x: ArrayLike, max_lag: int, report_lag: Optional[int] = None
) -> Tuple[OlsResult, UnitRootReport]:
    """Engle-Granger: regress ``y`` on ``x`` with a constant, then test the residuals."""
    first = ols(y, [x], intercept=True)
    resid = first.residuals
    _check_length(resid.size, max_lag, TrendSpec.NONE)
    report = _unit_root_report(
        UnitRootTest.ADF,
        TrendSpec.NONE,
        resid,
        max_lag,
        report_lag,
        critical_values.engle_granger,
        "mackinnon-2010-eg",
    )
    return first, report


# -----------------------------
# VAR
# -----------------------------


@dataclass(frozen=True)
class VarModel:
    """
    VAR(p) estimated equation by equation.

    ``coefs[i][j, m]`` is the effect of variable ``m`` at lag ``i + 1`` on
    equation ``j``.
    """

    k: int
    lag: int
    coefs: np.ndarray
    intercept: Optional[np.ndarray]
    sigma_u: np.ndarray
    r_squared: np.ndarray
    rmse: np.ndarray
    residuals: np.ndarray
    n_obs: int

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "lag": self.lag,
            "n_obs": self.n_obs,
            "coefs": self.coefs.tolist(),
            "intercept": self.intercept.tolist() if self.intercept is not None else None,
            "sigma_u": self.sigma_u.tolist(),
            "r_squared": self.r_squared.tolist(),
            "rmse": self.rmse.tolist(),
        }


def _lagged_regressors(data: np.ndarray, lag: int, first: int) -> List[np.ndarray]:
    """Columns Y_{t-1}..Y_{t-lag} (variable-major within each lag) for t = first..T-1."""
    T, k = data.shape
    columns = []
    for i in range(1, lag + 1):
        block = data[first - i : T - i]
        columns.extend(block[:, m] for m in range(k))
    return columns


def var_fit(
    data: Sequence[Sequence[float]],
    lag: int,
    intercept: bool = True,
    first: Optional[int] = None,
) -> VarModel:
    """
    Fit a VAR(lag) by OLS per equation. ``first`` is the first usable time
    index (defaults to ``lag``); lag selection passes a common value.
    """
    Y = _as_matrix(data)
    T, k = Y.shape
    if lag < 0:
        raise SpecError(f"VAR lag must be non-negative, got {lag}")
    if lag == 0 and not intercept:
        raise SpecError("VAR(0) without an intercept has nothing to estimate")
    start = lag if first is None else first
    if start < lag:
        raise SpecError(f"first usable index {start} is below the lag {lag}")
    n_obs = T - start
    if n_obs <= k * lag + int(intercept):
        raise LengthError(
            f"VAR({lag}) in {k} variables needs more than {k * lag + int(intercept)} "
            f"usable observations, got {n_obs}"
        )

    regressors = _lagged_regressors(Y, lag, start)
    coefs = np.zeros((lag, k, k))
    const = np.zeros(k) if intercept else None
    residuals = np.empty((n_obs, k))
    r2 = np.empty(k)
    rmse = np.empty(k)
    for j in range(k):
        fit = ols(Y[start:, j], regressors, intercept=intercept)
        slopes = fit.coefficients[: k * lag].reshape(lag, k)
        coefs[:, j, :] = slopes
        if intercept:
            const[j] = fit.coefficients[-1]
        residuals[:, j] = fit.residuals
        r2[j] = fit.r_squared
        rmse[j] = fit.rmse
    sigma = residuals.T @ residuals / n_obs
    sigma = (sigma + sigma.T) / 2.0
    return VarModel(
        k=k,
        lag=lag,
        coefs=coefs,
        intercept=const,
        sigma_u=sigma,
        r_squared=r2,
        rmse=rmse,
        residuals=residuals,
        n_obs=n_obs,
    )


def _logdet(matrix: np.ndarray, what: str) -> float:
    sign, value = np.linalg.slogdet(matrix)
    if sign <= 0:
        raise SingularityError(f"{what} is not positive definite")
    return float(value)


# -----------------------------
# Lag selection
# -----------------------------


CRITERIA = ("lr", "fpe", "aic", "hqic", "sbic")


@dataclass(frozen=True)
class LagSelectionRow:
    lag: int
    loglik: float
    lr: Optional[float]
    df: Optional[int]
    p_value: Optional[float]
    fpe: float
    aic: float
    hqic: float
    sbic: float

    def to_dict(self) -> dict:
        return {
            "lag": self.lag,
            "loglik": self.loglik,
            "lr": self.lr,
            "df": self.df,
            "p_value": self.p_value,
            "fpe": self.fpe,
            "aic": self.aic,
            "hqic": self.hqic,
            "sbic": self.sbic,
        }


@dataclass(frozen=True)
class LagSelectionTable:
    rows: Tuple[LagSelectionRow, ...]
    selected: Dict[str, int]
    n_obs: int
    k: int

    def to_dict(self) -> dict:
        return {
            "n_obs": self.n_obs,
            "k": self.k,
            "selected": dict(self.selected),
            "rows": [row.to_dict() for row in self.rows],
        }


def lag_select(
    data: Sequence[Sequence[float]], max_lag: int, alpha: float = 0.05
) -> LagSelectionTable:
    """
    Fit VAR(0..max_lag) on the common sample t = max_lag..T-1 and tabulate the
    sequential LR statistic with FPE, AIC, HQIC and SBIC.
    """
    Y = _as_matrix(data)
    T, k = Y.shape
    if max_lag < 0:
        raise SpecError(f"max lag must be non-negative, got {max_lag}")
    n = T - max_lag
    if n <= k * max_lag + 1:
        raise LengthError(
            f"lag selection up to {max_lag} in {k} variables needs more than "
            f"{k * max_lag + 1 + max_lag} observations, got {T}"
        )

    rows: List[LagSelectionRow] = []
    previous: Optional[float] = None
    for p in range(max_lag + 1):
        model = var_fit(Y, p, intercept=True, first=max_lag)
        logdet = _logdet(model.sigma_u, f"VAR({p}) residual covariance")
        loglik = -0.5 * n * (k * (1.0 + math.log(2.0 * math.pi)) + logdet)
        n_params = k * (k * p + 1)
        base = -2.0 * loglik / n
        fpe = math.exp(logdet) * ((n + k * p + 1) / (n - k * p - 1)) ** k
        lr = df = p_value = None
        if previous is not None:
            lr = 2.0 * (loglik - previous)
            df = k * k
            p_value = float(stats.chi2.sf(lr, df))
        rows.append(
            LagSelectionRow(
                lag=p,
                loglik=loglik,
                lr=lr,
                df=df,
                p_value=p_value,
                fpe=fpe,
                aic=base + 2.0 * n_params / n,
                hqic=base + 2.0 * math.log(math.log(n)) * n_params / n,
                sbic=base + math.log(n) * n_params / n,
            )
        )
        previous = loglik

    # LR: test downward from the largest lag, keep the first significant one
    lr_lag = 0
    critical = stats.chi2.ppf(1.0 - alpha, k * k)
    for row in reversed(rows[1:]):
        if row.lr > critical:
            lr_lag = row.lag
            break
    selected = {"lr": lr_lag}
    for name in ("fpe", "aic", "hqic", "sbic"):
        # argmin returns the first minimum, i.e. ties go to the smaller lag
        selected[name] = int(np.argmin([getattr(row, name) for row in rows]))
    logger.info("lag selection (max %d): %s", max_lag, selected)
    return LagSelectionTable(rows=tuple(rows), selected=selected, n_obs=n, k=k)


# -----------------------------
# Johansen
# -----------------------------


@dataclass(frozen=True)
class JohansenReport:
    trend: JohansenTrend
    lag: int
    n_obs: int
    eigenvalues: Tuple[float, ...]
    trace_stats: Tuple[float, ...]
    max_stats: Tuple[float, ...]
    critical_5pct: Tuple[float, ...]
    selected_rank: int
    loglik: Tuple[float, ...]
    sbic: Tuple[float, ...]
    hqic: Tuple[float, ...]
    critical_source: str = "osterwald-lenum-1992"
    meta: Dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        k = len(self.eigenvalues)
        ranks = []
        for r in range(k + 1):
            entry = {
                "rank": r,
                "eigenvalue": self.eigenvalues[r - 1] if r > 0 else None,
                "loglik": self.loglik[r],
                "sbic": self.sbic[r],
                "hqic": self.hqic[r],
                "trace_statistic": self.trace_stats[r] if r < k else None,
                "max_statistic": self.max_stats[r] if r < k else None,
                "critical_5pct": self.critical_5pct[r] if r < k else None,
            }
            ranks.append(entry)
        return {
            "trend": self.trend.value,
            "lag": self.lag,
            "n_obs": self.n_obs,
            "eigenvalues": list(self.eigenvalues),
            "selected_rank": self.selected_rank,
            "critical_source": self.critical_source,
            "ranks": ranks,
        }


def _column_scale(r: np.ndarray) -> np.ndarray:
    scale = np.sqrt(np.mean(r**2, axis=0))
    # all-zero columns stay singular and fail in the solve
    return np.where(scale > 0, scale, 1.0)


def _partial_out(target: np.ndarray, conditioning: Optional[np.ndarray]) -> np.ndarray:
    if conditioning is None:
        return target
    beta, *_ = scipy.linalg.lstsq(conditioning, target)
    return target - conditioning @ beta


def johansen(
    data: Sequence[Sequence[float]],
    lag: int = 3,
    trend: JohansenTrend = JohansenTrend.NONE,
) -> JohansenReport:
    """
    Johansen trace test on the VECM implied by a VAR(lag) in levels:
    ``lag - 1`` lagged differences, deterministic terms per ``trend``.
    """
    trend = JohansenTrend(trend)
    Y = _as_matrix(data)
    T, k = Y.shape
    if lag < 1:
        raise SpecError(f"Johansen lag must be at least 1, got {lag}")
    if T <= 2 * lag + 4:
        raise LengthError(f"Johansen test with lag {lag} needs more than {2 * lag + 4} observations, got {T}")
    crit = critical_values.johansen_trace_5pct(trend.value, k)

    dY = np.diff(Y, axis=0)
    n = T - lag
    z0 = dY[lag - 1 :]
    z1 = Y[lag - 1 : T - 1]
    blocks = [dY[lag - 1 - i : T - 1 - i] for i in range(1, lag)]
    if trend == JohansenTrend.CONSTANT:
        blocks.append(np.ones((n, 1)))
    if trend == JohansenTrend.RCONSTANT:
        z1 = np.column_stack((z1, np.ones(n)))
    z2 = np.column_stack(blocks) if blocks else None

    r0 = _partial_out(z0, z2)
    r1 = _partial_out(z1, z2)
    s00 = r0.T @ r0 / n
    # eigenvalues do not depend on column scale; equilibrate before solving
    q0 = r0 / _column_scale(r0)
    q1 = r1 / _column_scale(r1)
    e00 = q0.T @ q0 / n
    e01 = q0.T @ q1 / n
    e11 = q1.T @ q1 / n
    try:
        a = e01.T @ scipy.linalg.solve(e00, e01, assume_a="pos")
        a = (a + a.T) / 2.0
        lam = scipy.linalg.eigh(a, e11, eigvals_only=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenSolveError(
            f"Johansen eigenproblem failed ({exc}); cond(S00)={np.linalg.cond(e00):.3e}, "
            f"cond(S11)={np.linalg.cond(e11):.3e}"
        ) from None

    lam = np.sort(lam)[::-1][:k]
    lam = np.clip(lam, 0.0, np.nextafter(1.0, 0.0))
    log_terms = np.log1p(-lam)
    trace = tuple(float(-n * log_terms[r:].sum()) for r in range(k))
    max_stats = tuple(float(-n * log_terms[r]) for r in range(k))
    selected = next((r for r in range(k) if trace[r] < crit[r]), k)

    logdet00 = _logdet(s00, "S00 moment matrix")
    k1 = z1.shape[1]
    det_params = k if trend == JohansenTrend.CONSTANT else 0
    loglik, sbic, hqic = [], [], []
    for r in range(k + 1):
        ll = -0.5 * n * (k * (1.0 + math.log(2.0 * math.pi)) + logdet00 + log_terms[:r].sum())
        n_params = k * k * (lag - 1) + det_params + r * (k + k1 - r)
        loglik.append(float(ll))
        sbic.append(float(-2.0 * ll / n + math.log(n) * n_params / n))
        hqic.append(float(-2.0 * ll / n + 2.0 * math.log(math.log(n)) * n_params / n))

    logger.info("johansen(%s, lag %d): eigenvalues %s, rank %d", trend.value, lag, lam, selected)
    return JohansenReport(
        trend=trend,
        lag=lag,
        n_obs=n,
        eigenvalues=tuple(float(v) for v in lam),
        trace_stats=trace,
        max_stats=max_stats,
        critical_5pct=crit,
        selected_rank=selected,
        loglik=tuple(loglik),
        sbic=tuple(sbic),
        hqic=tuple(hqic),
    )
