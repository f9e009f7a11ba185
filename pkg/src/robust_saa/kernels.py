"""Tail-probability kernels: binomial and Poisson binomial CDFs, Hoeffding
envelope and the minimum sample size for the theta-rule robust SAA.

Binomial terms follow Loader's saddle-point formulation (``stirlerr`` and
``bd0``), which keeps each log-term accurate to a few ulps even when ``N`` is
large. Summation is compensated (``math.fsum``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BoundInapplicableError, DomainError

__all__ = [
    "BinomialParams",
    "PoissonBinomialParams",
    "tail_index",
    "snap_ceil",
    "binomial_pmf",
    "binomial_cdf",
    "log_binomial_cdf",
    "poisson_binomial_pmf",
    "poisson_binomial_cdf",
    "hoeffding_tail",
    "min_sample_size",
]

SNAP_TOL = 1e-9
_LN_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class BinomialParams:
    trials: int
    success_prob: float

    def __post_init__(self) -> None:
        if int(self.trials) != self.trials or self.trials < 1:
            raise DomainError(f"trials must be a positive integer, got {self.trials!r}")
        if not 0.0 <= self.success_prob <= 1.0:
            raise DomainError(f"success_prob must lie in [0, 1], got {self.success_prob!r}")


@dataclass(frozen=True)
class PoissonBinomialParams:
    success_probs: tuple[float, ...]

    def __init__(self, success_probs: Sequence[float]) -> None:
        probs = tuple(float(q) for q in success_probs)
        if not probs:
            raise DomainError("success_probs must be nonempty")
        for i, q in enumerate(probs):
            if not 0.0 <= q <= 1.0:
                raise DomainError(f"success_probs[{i}] = {q!r} lies outside [0, 1]")
        object.__setattr__(self, "success_probs", probs)

    @property
    def trials(self) -> int:
        return len(self.success_probs)


def tail_index(z: float) -> int:
    """Floor of ``z``, snapping values within ``SNAP_TOL`` of an integer first.

    ``0.29 * 100`` evaluates to ``28.999999999999996``; flooring it naively
    would silently drop one admissible violation.
    """
    nearest = round(z)
    if abs(z - nearest) <= SNAP_TOL:
        return int(nearest)
    return math.floor(z)


def snap_ceil(value: float) -> int:
    """Ceiling of ``value`` that keeps an (almost) integral value unchanged."""
    nearest = round(value)
    if abs(value - nearest) <= SNAP_TOL * max(1.0, abs(value)):
        return int(nearest)
    return math.ceil(value)


# Loader (2000): log(n!) - log(sqrt(2 pi n) (n/e)^n)
_STIRLERR_SMALL = [0.0] + [
    math.lgamma(k + 1.0) - (k + 0.5) * math.log(k) + k - 0.5 * _LN_2PI for k in range(1, 16)
]
_S0, _S1, _S2, _S3, _S4 = 1 / 12, 1 / 360, 1 / 1260, 1 / 1680, 1 / 1188


def _stirlerr(n: int) -> float:
    if n <= 15:
        return _STIRLERR_SMALL[n]
    nn = float(n) * n
    if n > 500:
        return (_S0 - _S1 / nn) / n
    if n > 80:
        return (_S0 - (_S1 - _S2 / nn) / nn) / n
    if n > 35:
        return (_S0 - (_S1 - (_S2 - _S3 / nn) / nn) / nn) / n
    return (_S0 - (_S1 - (_S2 - (_S3 - _S4 / nn) / nn) / nn) / nn) / n


def _bd0(x: float, np_: float) -> float:
    """Deviance term ``x log(x/np) + np - x`` without cancellation."""
    if abs(x - np_) < 0.1 * (x + np_):
        v = (x - np_) / (x + np_)
        s = (x - np_) * v
        ej = 2.0 * x * v
        v2 = v * v
        j = 1
        while True:
            ej *= v2
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
            j += 1
    return x * math.log(x / np_) + np_ - x


def _log_binomial_pmf(k: int, n: int, p: float) -> float:
    q = 1.0 - p
    if p == 0.0:
        return 0.0 if k == 0 else -math.inf
    if q == 0.0:
        return 0.0 if k == n else -math.inf
    if k == 0:
        return -_bd0(n, n * q) - n * p if p < 0.1 else n * math.log1p(-p)
    if k == n:
        return -_bd0(n, n * p) - n * q if q < 0.1 else n * math.log(p)
    lc = _stirlerr(n) - _stirlerr(k) - _stirlerr(n - k) - _bd0(k, n * p) - _bd0(n - k, n * q)
    lf = _LN_2PI + math.log(k) + math.log1p(-k / n)
    return lc - 0.5 * lf


def _check_binomial(z: float, n: int, p: float) -> int:
    BinomialParams(n, p)
    if not (-SNAP_TOL <= z <= n + SNAP_TOL):
        raise DomainError(f"z must lie in [0, {n}], got {z!r}")
    return min(max(tail_index(z), 0), n)


def binomial_pmf(k: int, n: int, p: float) -> float:
    BinomialParams(n, p)
    if k < 0 or k > n:
        return 0.0
    return math.exp(_log_binomial_pmf(k, n, p))


def binomial_cdf(z: float, n: int, p: float) -> float:
    """P{Bin(n, p) <= z} for real ``z`` in [0, n]."""
    k = _check_binomial(z, n, p)
    if k == n:
        return 1.0
    total = math.fsum(math.exp(_log_binomial_pmf(i, n, p)) for i in range(k + 1))
    return min(total, 1.0)


def log_binomial_cdf(z: float, n: int, p: float) -> float:
    """Natural log of :func:`binomial_cdf`, finite even when the CDF underflows."""
    k = _check_binomial(z, n, p)
    if k == n:
        return 0.0
    logs = [_log_binomial_pmf(i, n, p) for i in range(k + 1)]
    top = max(logs)
    if top == -math.inf:
        return -math.inf
    return min(top + math.log(math.fsum(math.exp(v - top) for v in logs)), 0.0)


def poisson_binomial_pmf(probs: Sequence[float], upto: int | None = None) -> np.ndarray:
    """Mass vector of a sum of independent Bernoullis, truncated to ``0..upto``.

    Truncation is exact: mass only ever moves to higher counts.
    """
    q = np.asarray(PoissonBinomialParams(probs).success_probs, dtype=float)
    size = len(q) + 1 if upto is None else min(upto, len(q)) + 1
    mass = np.zeros(size)
    mass[0] = 1.0
    for i, qi in enumerate(q):
        top = min(i + 1, size - 1)
        mass[1 : top + 1] = mass[1 : top + 1] * (1.0 - qi) + mass[0:top] * qi
        mass[0] *= 1.0 - qi
    return mass


def poisson_binomial_cdf(z: float, probs: Sequence[float]) -> float:
    """P{z_1 + ... + z_N <= z} for independent Bernoulli(q_i).

    When every ``q_i`` is identical this defers to :func:`binomial_cdf`, so the
    two agree bit for bit.
    """
    params = PoissonBinomialParams(probs)
    n = params.trials
    first = params.success_probs[0]
    if all(q == first for q in params.success_probs):
        return binomial_cdf(z, n, first)
    k = _check_binomial(z, n, 0.5)
    if k == n:
        return 1.0
    mass = poisson_binomial_pmf(params.success_probs, upto=k)
    return min(math.fsum(mass.tolist()), 1.0)


def hoeffding_tail(alpha: float, probs: Sequence[float]) -> float:
    """Hoeffding envelope ``exp(-2N (mean(p) - alpha)^2)`` on P{sum <= alpha N}.

    Raises :class:`BoundInapplicableError` unless ``mean(p) > alpha``.
    """
    params = PoissonBinomialParams(probs)
    n = params.trials
    mean = math.fsum(params.success_probs) / n
    if not mean > alpha:
        raise BoundInapplicableError(
            f"Hoeffding tail needs mean(p) > alpha, got mean(p) = {mean!r}, alpha = {alpha!r}"
        )
    return math.exp(-2.0 * n * (mean - alpha) ** 2)


def min_sample_size(card_x: int, delta: float, epsilon: float, alpha: float, theta: float) -> int:
    """Smallest N with ``N >= ln(card_x / delta) / (2 (epsilon - alpha - theta)^2)``."""
    if int(card_x) != card_x or card_x < 1:
        raise DomainError(f"card_x must be a positive integer, got {card_x!r}")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta!r}")
    gap = epsilon - alpha - theta
    if not (0.0 < alpha and alpha < alpha + theta and theta > 0.0 and gap > 0.0):
        raise DomainError(
            "parameters must satisfy 0 < alpha < alpha + theta < epsilon, got "
            f"alpha = {alpha!r}, theta = {theta!r}, epsilon = {epsilon!r}"
        )
    bound = math.log(card_x / delta) / (2.0 * gap * gap)
    return max(1, snap_ceil(bound))
