"""Closed-form bounds on the probability of infeasibility.

Every bound is returned as a :class:`BoundValue` holding the raw value (which
may exceed 1, or overflow to ``inf``) together with its base-10 logarithm,
which stays finite.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .distributions import VariationBudget, budget_eval
from .errors import DomainError
from .kernels import binomial_cdf, log_binomial_cdf, poisson_binomial_cdf, snap_ceil

__all__ = [
    "BoundValue",
    "BoundRow",
    "covering_factor",
    "bound_thm1",
    "bound_thm2",
    "bound_luedtke",
    "best_luedtke_beta",
    "penalties",
    "bound_thm3",
    "bound_thm5",
    "default_beta",
    "write_bound_csv",
    "BOUND_CSV_COLUMNS",
]

_LOG10_E = math.log10(math.e)


@dataclass(frozen=True)
class BoundValue:
    raw: float
    log10: float

    @property
    def clamped(self) -> float:
        return min(1.0, self.raw)

    def __float__(self) -> float:
        return self.raw


def _log10(x: float) -> float:
    return math.log10(x) if x > 0 else -math.inf


def _product(factor: float, log10_factor: float, cdf: float, log10_cdf: float) -> BoundValue:
    # an overflowed factor times a zero tail is still a zero probability
    raw = 0.0 if cdf == 0.0 else factor * cdf
    return BoundValue(raw, log10_factor + log10_cdf)


def _pow(base: float, n: int) -> float:
    try:
        return math.pow(base, n)
    except OverflowError:
        return math.inf


def _check_lipschitz_data(lipschitz: float, diameter: float, gamma: float, n: int) -> None:
    if gamma == 0:
        raise DomainError("covering bound requires positive margin gamma > 0")
    if not (lipschitz > 0 and diameter > 0 and gamma > 0):
        raise DomainError(f"L, D and gamma must be positive, got L={lipschitz!r}, D={diameter!r}, gamma={gamma!r}")
    if int(n) != n or n < 1:
        raise DomainError(f"dimension n must be a positive integer, got {n!r}")


def covering_factor(lipschitz: float, diameter: float, gamma: float, n: int) -> BoundValue:
    """(L D / gamma + 1)^n: cardinality bound of an internal gamma/L covering."""
    _check_lipschitz_data(lipschitz, diameter, gamma, n)
    base = lipschitz * diameter / gamma + 1.0
    return BoundValue(_pow(base, int(n)), n * math.log10(base))


def _phi(alpha: float, epsilon: float, n_samples: int) -> tuple[float, float]:
    z = alpha * n_samples
    return binomial_cdf(z, n_samples, epsilon), log_binomial_cdf(z, n_samples, epsilon) * _LOG10_E


def _psi(alpha: float, probs: Sequence[float]) -> tuple[float, float]:
    value = poisson_binomial_cdf(alpha * len(probs), probs)
    first = probs[0]
    if all(p == first for p in probs):
        return value, log_binomial_cdf(alpha * len(probs), len(probs), first) * _LOG10_E
    return value, _log10(value)


def _check_card(card_x: int) -> None:
    if int(card_x) != card_x or card_x < 1:
        raise DomainError(f"card_X must be a positive integer, got {card_x!r}")


def bound_thm1(card_x: int, alpha: float, epsilon: float, n_samples: int) -> BoundValue:
    """|X| Phi(alpha N; epsilon, N) for a finite decision set."""
    _check_card(card_x)
    cdf, lcdf = _phi(alpha, epsilon, n_samples)
    return _product(float(card_x), math.log10(card_x), cdf, lcdf)


def bound_thm2(
    lipschitz: float, diameter: float, gamma: float, n: int, alpha: float, epsilon: float, n_samples: int
) -> BoundValue:
    """(L D / gamma + 1)^n Phi(alpha N; epsilon, N)."""
    cov = covering_factor(lipschitz, diameter, gamma, n)
    cdf, lcdf = _phi(alpha, epsilon, n_samples)
    return _product(cov.raw, cov.log10, cdf, lcdf)


def default_beta(epsilon: float, alpha: float) -> float:
    return (epsilon - alpha) / 2.0


def bound_luedtke(
    lipschitz: float,
    diameter: float,
    gamma: float,
    n: int,
    alpha: float,
    epsilon: float,
    beta: float,
    n_samples: int,
) -> BoundValue:
    """ceil(1/beta) ceil(2 L D / gamma)^n Phi(alpha N; epsilon - beta, N)."""
    _check_lipschitz_data(lipschitz, diameter, gamma, n)
    if not 0.0 < beta < epsilon:
        raise DomainError(f"beta must lie in (0, epsilon) = (0, {epsilon!r}), got {beta!r}")
    inv_beta = snap_ceil(1.0 / beta)
    grid = snap_ceil(2.0 * lipschitz * diameter / gamma)
    factor = inv_beta * _pow(float(grid), int(n))
    log_factor = math.log10(inv_beta) + n * math.log10(grid)
    cdf, lcdf = _phi(alpha, epsilon - beta, n_samples)
    return _product(factor, log_factor, cdf, lcdf)


def best_luedtke_beta(
    lipschitz: float,
    diameter: float,
    gamma: float,
    n: int,
    alpha: float,
    epsilon: float,
    n_samples: int,
    grid: int = 199,
) -> tuple[float, BoundValue]:
    """Grid minimizer of :func:`bound_luedtke` over beta in (0, epsilon).

    Not part of the original comparison, which fixes beta; offered to make the
    comparison as favourable to the older bound as possible.
    """
    best: tuple[float, BoundValue] | None = None
    for beta in np.linspace(0, epsilon, grid + 2)[1:-1]:
        val = bound_luedtke(lipschitz, diameter, gamma, n, alpha, epsilon, float(beta), n_samples)
        if best is None or val.log10 < best[1].log10:
            best = (float(beta), val)
    return best


def penalties(
    budget: VariationBudget, n_samples: int, radii: Sequence[float], epsilon: float
) -> np.ndarray:
    """p_i = (epsilon - rho(N + 1 - i) / r_i)_+.

    Zero radius: the drift term is taken as 0 when rho(N + 1 - i) = 0 (so
    p_i = epsilon) and as +inf otherwise (so p_i = 0).
    """
    r = np.asarray(radii, dtype=float).ravel()
    if r.size != n_samples:
        raise DomainError(f"need {n_samples} radii, got {r.size}")
    if np.any(r < 0):
        raise DomainError("radii must be nonnegative")
    out = np.empty(n_samples)
    for i in range(1, n_samples + 1):
        rho = budget_eval(budget, n_samples + 1 - i)
        ri = r[i - 1]
        if ri == 0.0:
            out[i - 1] = epsilon if rho == 0.0 else 0.0
        else:
            with np.errstate(over="ignore"):  # tiny radius: penalty clamps to 0
                out[i - 1] = max(epsilon - rho / ri, 0.0)
    return out


def bound_thm3(card_x: int, alpha: float, n_samples: int, probs: Sequence[float]) -> BoundValue:
    """|X| Psi(alpha N; p_1, ..., p_N)."""
    _check_card(card_x)
    probs = [float(p) for p in probs]
    if len(probs) != n_samples:
        raise DomainError(f"need {n_samples} penalty probabilities, got {len(probs)}")
    cdf, lcdf = _psi(alpha, probs)
    return _product(float(card_x), math.log10(card_x), cdf, lcdf)


def bound_thm5(
    lipschitz: float, diameter: float, gamma: float, n: int, alpha: float, n_samples: int, probs: Sequence[float]
) -> BoundValue:
    """(L D / gamma + 1)^n Psi(alpha N; p_1, ..., p_N)."""
    cov = covering_factor(lipschitz, diameter, gamma, n)
    probs = [float(p) for p in probs]
    if len(probs) != n_samples:
        raise DomainError(f"need {n_samples} penalty probabilities, got {len(probs)}")
    cdf, lcdf = _psi(alpha, probs)
    return _product(cov.raw, cov.log10, cdf, lcdf)


# --------------------------------------------------------------------------
# reports

BOUND_CSV_COLUMNS = ("bound", "N", "parameters", "raw", "log10", "clamped")


@dataclass(frozen=True)
class BoundRow:
    bound: str
    n_samples: int
    parameters: dict[str, Any] = field(default_factory=dict)
    value: BoundValue = BoundValue(math.nan, math.nan)

    def as_csv(self) -> list[str]:
        params = ";".join(f"{k}={_fmt(v)}" for k, v in self.parameters.items())
        return [self.bound, str(self.n_samples), params, _fmt(self.value.raw), _fmt(self.value.log10), _fmt(self.value.clamped)]


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_bound_csv(path, rows: Iterable[BoundRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BOUND_CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.as_csv())
