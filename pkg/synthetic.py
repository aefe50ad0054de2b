"""
Seeded synthetic series for the Monte Carlo test surface.

All draws come from numpy's PCG64 bit generator seeded with the 64-bit
seed of a SyntheticSpec, so equal specs give identical arrays on every platform numpy
supports.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
from scipy.signal import lfilter

from errors import SpecError

logger = logging.getLogger(__name__)

T = TypeVar("T")

MIN_LENGTH = 10
BURN_IN = 100
# AR coefficient of the stationary gap in a cointegrated pair
PAIR_AR = 0.5
SEED_LIMIT = 2**64


class SyntheticKind(str, Enum):
    RANDOM_WALK = "random_walk"
    AR1 = "ar1"
    WHITE_NOISE = "white_noise"
    COINTEGRATED_PAIR = "cointegrated_pair"
    VAR_P = "var_p"


@dataclass(frozen=True)
class SyntheticSpec:
    """
    ``var_coefs[i][j][m]``: effect of variable ``m`` at lag ``i + 1`` on
    variable ``j`` (only used by ``var_p``).
    """

    kind: SyntheticKind
    length: int
    seed: int = 0
    sigma: float = 1.0
    phi: float = 0.0
    coint_sigma: float = 1.0
    var_coefs: Optional[Tuple[Tuple[Tuple[float, ...], ...], ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", SyntheticKind(self.kind))
        if self.length < MIN_LENGTH:
            raise SpecError(f"synthetic length must be >= {MIN_LENGTH}, got {self.length}")
        if not 0 <= self.seed < SEED_LIMIT:
            raise SpecError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if not self.sigma > 0:
            raise SpecError(f"sigma must be positive, got {self.sigma}")
        if not self.coint_sigma > 0:
            raise SpecError(f"cointegration noise scale must be positive, got {self.coint_sigma}")
        if self.kind == SyntheticKind.AR1 and not abs(self.phi) < 1:
            raise SpecError(f"ar1 needs |phi| < 1, got {self.phi}")
        if self.kind == SyntheticKind.VAR_P:
            if self.var_coefs is None:
                raise SpecError("var_p needs coefficient matrices")
            coefs = np.asarray(self.var_coefs, dtype=np.float64)
            if coefs.ndim != 3 or coefs.shape[1] != coefs.shape[2] or coefs.shape[0] < 1:
                raise SpecError("var_p coefficients must be lag x k x k")

    @property
    def k(self) -> int:
        if self.kind == SyntheticKind.COINTEGRATED_PAIR:
            return 2
        if self.kind == SyntheticKind.VAR_P:
            return len(self.var_coefs[0])
        return 1

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "length": self.length,
            "seed": self.seed,
            "sigma": self.sigma,
            "phi": self.phi,
            "coint_sigma": self.coint_sigma,
            "var_coefs": None if self.var_coefs is None else np.asarray(self.var_coefs).tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticSpec":
        try:
            coefs = data.get("var_coefs")
            return cls(
                kind=SyntheticKind(data["kind"]),
                length=int(data["length"]),
                seed=int(data.get("seed", 0)),
                sigma=float(data.get("sigma", 1.0)),
                phi=float(data.get("phi", 0.0)),
                coint_sigma=float(data.get("coint_sigma", 1.0)),
                var_coefs=None if coefs is None else tuple(tuple(tuple(map(float, row)) for row in m) for m in coefs),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"invalid synthetic spec {data!r}: {exc}") from None


def _ar(eps: np.ndarray, phi: float) -> np.ndarray:
    """x_t = phi * x_{t-1} + eps_t with x_{-1} = 0."""
    return lfilter([1.0], [1.0, -phi], eps)


def _companion_radius(coefs: np.ndarray) -> float:
    p, k, _ = coefs.shape
    companion = np.zeros((k * p, k * p))
    companion[:k] = np.hstack(list(coefs))
    companion[k:, :-k] = np.eye(k * (p - 1))
    return float(np.max(np.abs(np.linalg.eigvals(companion))))


def generate(spec: SyntheticSpec) -> np.ndarray:
    """
    Draw one realization: shape ``(length,)`` for univariate kinds and
    ``(length, k)`` for ``cointegrated_pair`` (columns x, y) and ``var_p``.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    n = spec.length
    if spec.kind == SyntheticKind.WHITE_NOISE:
        return spec.sigma * rng.standard_normal(n)
    if spec.kind == SyntheticKind.RANDOM_WALK:
        return np.cumsum(spec.sigma * rng.standard_normal(n))
    if spec.kind == SyntheticKind.AR1:
        return _ar(spec.sigma * rng.standard_normal(n), spec.phi)
    if spec.kind == SyntheticKind.COINTEGRATED_PAIR:
        x = np.cumsum(spec.sigma * rng.standard_normal(n))
        gap = _ar(spec.coint_sigma * rng.standard_normal(n), PAIR_AR)
        return np.column_stack((x, x + gap))

    coefs = np.asarray(spec.var_coefs, dtype=np.float64)
    if _companion_radius(coefs) >= 1.0:
        raise SpecError("var_p coefficients are not stable (companion spectral radius >= 1)")
    p, k, _ = coefs.shape
    total = n + BURN_IN
    eps = spec.sigma * rng.standard_normal((total, k))
    y = np.zeros((total, k))
    for t in range(total):
        y[t] = eps[t]
        for i in range(min(p, t)):
            y[t] += coefs[i] @ y[t - i - 1]
    return y[BURN_IN:]


# -----------------------------
# Monte Carlo
# -----------------------------


def monte_carlo(
    spec: SyntheticSpec,
    statistic: Callable[[np.ndarray], T],
    draws: int,
    base_seed: Optional[int] = None,
    workers: int = 1,
) -> List[T]:
    """
    Evaluate ``statistic`` on draws seeded ``base_seed + i``. Results come back
    in seed order whatever the number of worker threads.
    """
    if draws < 1:
        raise SpecError(f"draws must be >= 1, got {draws}")
    first = spec.seed if base_seed is None else base_seed
    specs = [replace(spec, seed=(first + i) % SEED_LIMIT) for i in range(draws)]

    def run(s: SyntheticSpec) -> T:
        return statistic(generate(s))

    logger.debug("monte carlo: %d draws of %s from seed %d", draws, spec.kind.value, first)
    if workers <= 1:
        return [run(s) for s in specs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, specs))


def rejection_rate(decisions: Sequence[bool]) -> float:
    if not len(decisions):
        raise SpecError("no Monte Carlo decisions to reduce")
    return float(np.mean(np.asarray(decisions, dtype=bool)))
