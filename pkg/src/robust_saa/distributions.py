"""Sampling distributions, exact 1-Wasserstein distances and variation budgets.

Only families whose W1 distance can be computed exactly are supported, so a
declared budget ``W1(P_i, P_{i+k}) <= rho(k)`` is always checked rather than
assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np
from scipy import integrate, optimize, special

from .errors import BudgetViolationError, DomainError, NoClosedFormError, SchemaError

__all__ = [
    "NORMS",
    "norm_of",
    "dual_norm_of",
    "SupportSet",
    "DistributionSpec",
    "VariationBudget",
    "DistributionSequence",
    "wasserstein_distance",
    "empirical_w1",
    "budget_eval",
    "draw_points",
    "make_drifting_sequence",
    "stationary_sequence",
]

NORMS = ("L1", "L2", "Linf")
FAMILIES = ("dirac", "uniform-box", "gaussian-isotropic", "discrete-weighted")
BUDGET_TOL = 1e-9
MAX_DISCRETE_ATOMS = 32


def _check_norm(norm: str) -> str:
    if norm not in NORMS:
        raise DomainError(f"norm must be one of {NORMS}, got {norm!r}")
    return norm


def norm_of(v: np.ndarray, norm: str, axis: int = -1) -> np.ndarray:
    """Vector norm along ``axis`` for ``norm`` in {L1, L2, Linf}."""
    v = np.asarray(v, dtype=float)
    if norm == "L1":
        return np.abs(v).sum(axis=axis)
    if norm == "L2":
        return np.hypot.reduce(v, axis=axis)  # no underflow for tiny entries
    if norm == "Linf":
        return np.abs(v).max(axis=axis)
    raise DomainError(f"norm must be one of {NORMS}, got {norm!r}")


def dual_norm_of(v: np.ndarray, norm: str, axis: int = -1) -> np.ndarray:
    """Norm dual to ``norm``: L1 <-> Linf, L2 <-> L2."""
    return norm_of(v, {"L1": "Linf", "L2": "L2", "Linf": "L1"}[_check_norm(norm)], axis=axis)


def _vec(values: Any, name: str) -> tuple[float, ...]:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError(f"{name} must be a nonempty vector")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return tuple(float(a) for a in arr)


@dataclass(frozen=True)
class SupportSet:
    kind: str = "full-space"
    dim: int = 1
    lower: tuple[float, ...] | None = None
    upper: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind == "box":
            lo, hi = _vec(self.lower, "lower"), _vec(self.upper, "upper")
            if len(lo) != len(hi):
                raise DomainError("box bounds must have equal length")
            if any(a > b for a, b in zip(lo, hi)):
                raise DomainError("box requires lower <= upper componentwise")
            object.__setattr__(self, "lower", lo)
            object.__setattr__(self, "upper", hi)
            object.__setattr__(self, "dim", len(lo))
        elif self.kind == "full-space":
            if int(self.dim) != self.dim or self.dim < 1:
                raise DomainError(f"dimension must be >= 1, got {self.dim!r}")
        else:
            raise DomainError(f"unknown support kind {self.kind!r}")

    @classmethod
    def box(cls, lower: Sequence[float], upper: Sequence[float]) -> "SupportSet":
        return cls("box", len(_vec(lower, "lower")), tuple(lower), tuple(upper))

    @classmethod
    def full(cls, dim: int) -> "SupportSet":
        return cls("full-space", dim)

    @property
    def bounded(self) -> bool:
        return self.kind == "box"

    def contains(self, points: np.ndarray, tol: float = 0.0) -> bool:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[-1] != self.dim:
            return False
        if self.kind == "full-space":
            return True
        return bool(np.all(pts >= np.asarray(self.lower) - tol) and np.all(pts <= np.asarray(self.upper) + tol))

    def to_dict(self) -> dict:
        if self.kind == "box":
            return {"kind": "box", "lower": list(self.lower), "upper": list(self.upper)}
        return {"kind": "full-space", "dim": self.dim}

    @classmethod
    def from_dict(cls, data: dict) -> "SupportSet":
        if data["kind"] == "box":
            return cls.box(data["lower"], data["upper"])
        return cls.full(int(data["dim"]))


@dataclass(frozen=True)
class DistributionSpec:
    """One sampling distribution.

    ``location`` is the point mass for ``dirac`` and the mean for
    ``gaussian-isotropic``; ``lower``/``upper`` bound ``uniform-box``;
    ``atoms``/``weights`` describe ``discrete-weighted``.
    """

    family: str
    support: SupportSet
    location: tuple[float, ...] | None = None
    lower: tuple[float, ...] | None = None
    upper: tuple[float, ...] | None = None
    std: float | None = None
    atoms: tuple[tuple[float, ...], ...] | None = None
    weights: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        fam = self.family
        if fam not in FAMILIES:
            raise DomainError(f"unknown family {fam!r}; expected one of {FAMILIES}")
        if fam == "dirac":
            self._check_points(np.array([self.location]))
        elif fam == "uniform-box":
            lo, hi = np.array(self.lower), np.array(self.upper)
            if lo.shape != hi.shape or np.any(lo > hi):
                raise DomainError("uniform-box requires lower <= upper componentwise")
            self._check_points(np.array([lo, hi]))
        elif fam == "gaussian-isotropic":
            if not (self.std is not None and self.std > 0 and math.isfinite(self.std)):
                raise DomainError(f"gaussian std must be positive, got {self.std!r}")
            if self.support.bounded:
                raise DomainError("gaussian distributions require full-space support")
            self._check_points(np.array([self.location]))
        else:
            pts = np.array(self.atoms, dtype=float)
            w = np.array(self.weights, dtype=float)
            if pts.ndim != 2 or len(pts) != len(w) or len(w) == 0:
                raise DomainError("discrete-weighted needs one weight per atom")
            if np.any(w < 0) or abs(math.fsum(w.tolist()) - 1.0) > 1e-12:
                raise DomainError("weights must be nonnegative and sum to 1")
            self._check_points(pts)

    def _check_points(self, pts: np.ndarray) -> None:
        if pts.shape[-1] != self.support.dim:
            raise DomainError(
                f"{self.family} parameters have dimension {pts.shape[-1]}, support has {self.support.dim}"
            )
        if not self.support.contains(pts):
            raise DomainError(f"{self.family} parameters lie outside the support set")

    # constructors -------------------------------------------------------
    @classmethod
    def dirac(cls, location: Sequence[float] | float, support: SupportSet | None = None) -> "DistributionSpec":
        loc = _vec(location, "location")
        return cls("dirac", support or SupportSet.full(len(loc)), location=loc)

    @classmethod
    def uniform(cls, lower, upper, support: SupportSet | None = None) -> "DistributionSpec":
        lo, hi = _vec(lower, "lower"), _vec(upper, "upper")
        return cls("uniform-box", support or SupportSet.full(len(lo)), lower=lo, upper=hi)

    @classmethod
    def gaussian(cls, mean, std: float, support: SupportSet | None = None) -> "DistributionSpec":
        mu = _vec(mean, "mean")
        return cls("gaussian-isotropic", support or SupportSet.full(len(mu)), location=mu, std=float(std))

    @classmethod
    def discrete(cls, atoms, weights, support: SupportSet | None = None) -> "DistributionSpec":
        pts = np.asarray(atoms, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(weights, dtype=float)
        return cls(
            "discrete-weighted",
            support or SupportSet.full(pts.shape[1]),
            atoms=tuple(tuple(float(v) for v in row) for row in pts),
            weights=tuple(float(v) for v in w),
        )

    @property
    def dim(self) -> int:
        return self.support.dim

    @property
    def anchor(self) -> np.ndarray:
        """Reference point that moves rigidly under translation."""
        if self.family in ("dirac", "gaussian-isotropic"):
            return np.array(self.location)
        if self.family == "uniform-box":
            return np.array(self.lower)
        return np.array(self.atoms[0])

    def shape(self) -> np.ndarray:
        """Everything except the position, flattened."""
        if self.family == "dirac":
            return np.zeros(0)
        if self.family == "gaussian-isotropic":
            return np.array([self.std])
        if self.family == "uniform-box":
            return np.subtract(self.upper, self.lower)
        pts = np.array(self.atoms)
        return np.concatenate([(pts - pts[0]).ravel(), self.weights])

    def is_translate_of(self, other: "DistributionSpec") -> bool:
        """True when ``self`` equals ``other`` up to a rigid shift.

        Shapes are compared to 1e-12 relative so that a spec shifted many
        times still counts; the induced W1 error is of the same order.
        """
        if self.family != other.family or self.dim != other.dim:
            return False
        a, b = self.shape(), other.shape()
        if a.shape != b.shape:
            return False
        scale = 1.0 + max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0))
        return bool(np.all(np.abs(a - b) <= 1e-12 * scale))

    def translate(self, shift: Sequence[float], support: SupportSet | None = None) -> "DistributionSpec":
        s = np.asarray(shift, dtype=float)
        sup = support or self.support
        if self.family == "dirac":
            return DistributionSpec.dirac(np.array(self.location) + s, sup)
        if self.family == "gaussian-isotropic":
            return DistributionSpec.gaussian(np.array(self.location) + s, self.std, sup)
        if self.family == "uniform-box":
            return DistributionSpec.uniform(np.array(self.lower) + s, np.array(self.upper) + s, sup)
        return DistributionSpec.discrete(np.array(self.atoms) + s, self.weights, sup)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """``size`` iid draws as an array of shape (size, dim)."""
        d = self.dim
        if self.family == "dirac":
            return np.broadcast_to(np.array(self.location), (size, d)).copy()
        if self.family == "uniform-box":
            lo, hi = np.array(self.lower), np.array(self.upper)
            return lo + (hi - lo) * rng.random((size, d))
        if self.family == "gaussian-isotropic":
            return np.array(self.location) + self.std * rng.standard_normal((size, d))
        idx = rng.choice(len(self.weights), size=size, p=np.array(self.weights))
        return np.array(self.atoms)[idx]

    # 1-d helpers ----------------------------------------------------------
    def cdf(self, x: np.ndarray | float) -> np.ndarray:
        if self.dim != 1:
            raise DomainError("cdf is only defined for one-dimensional distributions")
        x = np.asarray(x, dtype=float)
        if self.family == "dirac":
            return (x >= self.location[0]).astype(float)
        if self.family == "uniform-box":
            a, b = self.lower[0], self.upper[0]
            if a == b:
                return (x >= a).astype(float)
            return np.clip((x - a) / (b - a), 0.0, 1.0)
        if self.family == "gaussian-isotropic":
            return special.ndtr((x - self.location[0]) / self.std)
        pts = np.array(self.atoms)[:, 0]
        w = np.array(self.weights)
        return (w[None, :] * (pts[None, :] <= np.atleast_1d(x)[:, None])).sum(axis=1).reshape(x.shape)

    def quantile(self, t: np.ndarray | float) -> np.ndarray:
        if self.dim != 1:
            raise DomainError("quantile is only defined for one-dimensional distributions")
        t = np.asarray(t, dtype=float)
        if self.family == "dirac":
            return np.full_like(t, self.location[0])
        if self.family == "uniform-box":
            return self.lower[0] + t * (self.upper[0] - self.lower[0])
        if self.family == "gaussian-isotropic":
            return self.location[0] + self.std * special.ndtri(t)
        order = np.argsort(np.array(self.atoms)[:, 0], kind="stable")
        pts = np.array(self.atoms)[order, 0]
        cw = np.cumsum(np.array(self.weights)[order])
        idx = np.clip(np.searchsorted(cw, t, side="left"), 0, len(pts) - 1)
        return pts[idx]

    def breakpoints(self) -> list[float]:
        if self.family == "dirac":
            return [self.location[0]]
        if self.family == "uniform-box":
            return [self.lower[0], self.upper[0]]
        if self.family == "gaussian-isotropic":
            return [self.location[0]]
        return [a[0] for a in self.atoms]

    # serialization --------------------------------------------------------
    def to_dict(self) -> dict:
        out: dict[str, Any] = {"family": self.family, "support": self.support.to_dict()}
        if self.family == "dirac":
            out["location"] = list(self.location)
        elif self.family == "uniform-box":
            out["lower"], out["upper"] = list(self.lower), list(self.upper)
        elif self.family == "gaussian-isotropic":
            out["mean"], out["std"] = list(self.location), self.std
        else:
            out["atoms"] = [list(a) for a in self.atoms]
            out["weights"] = list(self.weights)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "DistributionSpec":
        try:
            fam = data["family"]
            sup = SupportSet.from_dict(data["support"]) if "support" in data else None
            if fam == "dirac":
                return cls.dirac(data["location"], sup)
            if fam == "uniform-box":
                return cls.uniform(data["lower"], data["upper"], sup)
            if fam == "gaussian-isotropic":
                return cls.gaussian(data["mean"], data["std"], sup)
            if fam == "discrete-weighted":
                return cls.discrete(data["atoms"], data["weights"], sup)
        except KeyError as exc:
            raise SchemaError(f"missing field {exc.args[0]!r}", path="distribution") from None
        raise SchemaError(f"unknown family {fam!r}", path="distribution.family")


# --------------------------------------------------------------------------
# Wasserstein distances


def _translation_shift(p: DistributionSpec, q: DistributionSpec) -> np.ndarray | None:
    if not p.is_translate_of(q):
        return None
    return q.anchor - p.anchor


def _w1_1d(p: DistributionSpec, q: DistributionSpec) -> float:
    fams = {p.family, q.family}
    if p.family == "dirac" or q.family == "dirac":
        point, other = (p, q) if p.family == "dirac" else (q, p)
        return _mean_abs_dev(other, point.location[0])
    if fams == {"uniform-box"}:
        # quantile difference is affine in t
        a = p.lower[0] - q.lower[0]
        b = (p.upper[0] - p.lower[0]) - (q.upper[0] - q.lower[0])
        return _integral_abs_affine(a, b)
    if fams == {"gaussian-isotropic"}:
        a = p.location[0] - q.location[0]
        b = p.std - q.std
        if b == 0:
            return abs(a)
        # E|a + b Z| for standard normal Z
        s = abs(b)
        return s * math.sqrt(2.0 / math.pi) * math.exp(-a * a / (2 * s * s)) + a * (1 - 2 * special.ndtr(-a / s))
    if fams == {"discrete-weighted"}:
        return _w1_discrete_1d(p, q)
    return _w1_quadrature(p, q)


def _integral_abs_affine(a: float, b: float) -> float:
    """Integral over [0, 1] of |a + b t|."""
    if b == 0:
        return abs(a)
    root = -a / b
    if root <= 0 or root >= 1:
        return abs(a + b / 2)
    return (abs(a) * root + abs(a + b) * (1 - root)) / 2


def _mean_abs_dev(spec: DistributionSpec, c: float) -> float:
    if spec.family == "dirac":
        return abs(spec.location[0] - c)
    if spec.family == "uniform-box":
        a, b = spec.lower[0], spec.upper[0]
        if a == b:
            return abs(a - c)
        if c <= a:
            return (a + b) / 2 - c
        if c >= b:
            return c - (a + b) / 2
        return ((c - a) ** 2 + (b - c) ** 2) / (2 * (b - a))
    if spec.family == "gaussian-isotropic":
        m, s = spec.location[0], spec.std
        z = (c - m) / s
        return s * math.sqrt(2 / math.pi) * math.exp(-z * z / 2) + (m - c) * (1 - 2 * special.ndtr(z))
    pts = np.array(spec.atoms)[:, 0]
    return float(np.dot(spec.weights, np.abs(pts - c)))


def _w1_discrete_1d(p: DistributionSpec, q: DistributionSpec) -> float:
    xs = sorted(set(p.breakpoints()) | set(q.breakpoints()))
    fp = p.cdf(np.array(xs))
    fq = q.cdf(np.array(xs))
    return float(math.fsum(abs(fp[i] - fq[i]) * (xs[i + 1] - xs[i]) for i in range(len(xs) - 1)))


def _w1_quadrature(p: DistributionSpec, q: DistributionSpec) -> float:
    """Integral of |F_p - F_q| over the real line, split at every kink."""
    pts = sorted(set(p.breakpoints()) | set(q.breakpoints()))
    integrand = lambda x: abs(float(p.cdf(x)) - float(q.cdf(x)))
    opts = dict(epsabs=1e-12, epsrel=1e-12, limit=400)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b > a:
            total += integrate.quad(integrand, a, b, **opts)[0]
    # tails beyond the breakpoints are nonzero only when a gaussian is involved
    total += integrate.quad(integrand, -np.inf, pts[0], **opts)[0]
    total += integrate.quad(integrand, pts[-1], np.inf, **opts)[0]
    return total


def _w1_discrete_lp(p: DistributionSpec, q: DistributionSpec, norm: str) -> float:
    a, b = np.array(p.atoms), np.array(q.atoms)
    if len(a) > MAX_DISCRETE_ATOMS or len(b) > MAX_DISCRETE_ATOMS:
        raise NoClosedFormError(f"exact transport supports at most {MAX_DISCRETE_ATOMS} atoms per side")
    m, n = len(a), len(b)
    cost = norm_of(a[:, None, :] - b[None, :, :], norm).ravel()
    rows = np.zeros((m + n, m * n))
    for i in range(m):
        rows[i, i * n : (i + 1) * n] = 1.0
    for j in range(n):
        rows[m + j, j::n] = 1.0
    rhs = np.concatenate([p.weights, q.weights])
    res = optimize.linprog(cost, A_eq=rows[:-1], b_eq=rhs[:-1], bounds=(0, None), method="highs")
    if res.status != 0:
        raise NoClosedFormError(f"transport LP failed: {res.message}")
    return max(float(res.fun), 0.0)


def wasserstein_distance(p: DistributionSpec, q: DistributionSpec, norm: str = "L2") -> float:
    """Exact 1-Wasserstein distance between two supported distributions.

    Supported pairs: point masses, pure translations of a common shape (any
    dimension), any two one-dimensional distributions, and discrete pairs with
    at most 32 atoms each. Anything else raises :class:`NoClosedFormError`.
    """
    _check_norm(norm)
    if p.dim != q.dim:
        raise DomainError(f"dimension mismatch: {p.dim} vs {q.dim}")
    shift = _translation_shift(p, q)
    if shift is not None:
        return float(norm_of(shift, norm))
    if p.dim == 1:
        return float(_w1_1d(p, q))
    fams = {p.family, q.family}
    if fams <= {"dirac", "discrete-weighted"}:
        as_discrete = [s if s.family == "discrete-weighted" else DistributionSpec.discrete([s.location], [1.0], s.support) for s in (p, q)]
        return _w1_discrete_lp(*as_discrete, norm)
    raise NoClosedFormError(
        f"no exact W1 for {p.family} vs {q.family} in dimension {p.dim}"
    )


def empirical_w1(samples: np.ndarray, spec: DistributionSpec) -> float:
    """W1 between the empirical law of 1-d ``samples`` and ``spec``.

    Uses midpoint quantiles of ``spec`` against the sorted sample.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = len(x)
    t = (np.arange(n) + 0.5) / n
    return float(np.mean(np.abs(x - spec.quantile(t))))


# --------------------------------------------------------------------------
# variation budgets


@dataclass(frozen=True)
class VariationBudget:
    """Known upper bound ``rho(k)`` on W1 between distributions k steps apart.

    ``linear``: rho(k) = rate * k.  ``step``: rho(k) is the sum of the
    magnitudes whose jump lag is <= k.  ``tabulated``: explicit values for
    k = 0..len(table)-1, no extrapolation.
    """

    form: str = "linear"
    rate: float = 0.0
    steps: tuple[tuple[int, float], ...] = ()
    table: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.form == "linear":
            if not (self.rate >= 0 and math.isfinite(self.rate)):
                raise DomainError(f"linear budget rate must be >= 0, got {self.rate!r}")
        elif self.form == "step":
            for lag, mag in self.steps:
                if int(lag) != lag or lag < 1:
                    raise DomainError(f"step lags must be integers >= 1 so that rho(0) = 0, got {lag!r}")
                if mag < 0:
                    raise DomainError(f"step magnitudes must be >= 0, got {mag!r}")
        elif self.form == "tabulated":
            if not self.table or self.table[0] != 0.0:
                raise DomainError("tabulated budget must start with rho(0) = 0")
            if any(v < 0 for v in self.table):
                raise DomainError("tabulated budget values must be >= 0")
            if any(b < a for a, b in zip(self.table, self.table[1:])):
                raise DomainError("variation budget must be nondecreasing in k")
        else:
            raise DomainError(f"unknown budget form {self.form!r}")

    @classmethod
    def linear(cls, rate: float) -> "VariationBudget":
        return cls("linear", rate=float(rate))

    @classmethod
    def step(cls, jumps: Iterable[tuple[int, float]]) -> "VariationBudget":
        return cls("step", steps=tuple((int(k), float(m)) for k, m in sorted(jumps)))

    @classmethod
    def tabulated(cls, values: Sequence[float]) -> "VariationBudget":
        return cls("tabulated", table=tuple(float(v) for v in values))

    @classmethod
    def zero(cls) -> "VariationBudget":
        return cls.linear(0.0)

    def __call__(self, k: int) -> float:
        return budget_eval(self, k)

    def is_zero(self, horizon: int) -> bool:
        return all(budget_eval(self, k) == 0.0 for k in range(horizon + 1))

    def to_dict(self) -> dict:
        if self.form == "linear":
            return {"form": "linear", "rate": self.rate}
        if self.form == "step":
            return {"form": "step", "steps": [list(s) for s in self.steps]}
        return {"form": "tabulated", "table": list(self.table)}

    @classmethod
    def from_dict(cls, data: dict) -> "VariationBudget":
        form = data.get("form")
        if form == "linear":
            return cls.linear(data["rate"])
        if form == "step":
            return cls.step(data["steps"])
        if form == "tabulated":
            return cls.tabulated(data["table"])
        raise SchemaError(f"unknown budget form {form!r}", path="budget.form")


def budget_eval(budget: VariationBudget, k: int) -> float:
    if int(k) != k or k < 0:
        raise DomainError(f"k must be a nonnegative integer, got {k!r}")
    k = int(k)
    if k == 0:
        return 0.0
    if budget.form == "linear":
        return budget.rate * k
    if budget.form == "step":
        return math.fsum(m for lag, m in budget.steps if k >= lag)
    if k >= len(budget.table):
        raise DomainError(f"tabulated budget has no value for k = {k} (table ends at {len(budget.table) - 1})")
    return budget.table[k]


# --------------------------------------------------------------------------
# sequences


@dataclass(frozen=True)
class DistributionSequence:
    """Sampling distributions P_1..P_N followed by the target P_{N+1}."""

    specs: tuple[DistributionSpec, ...]
    budget: VariationBudget
    norm: str = "L2"
    _offsets: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        _check_norm(self.norm)
        specs = tuple(self.specs)
        object.__setattr__(self, "specs", specs)
        if len(specs) < 2:
            raise DomainError("a sequence needs at least one sample distribution and a target")
        dims = {s.dim for s in specs}
        if len(dims) != 1:
            raise DomainError(f"all distributions must share one dimension, got {sorted(dims)}")
        base = specs[0]
        if all(s.is_translate_of(base) for s in specs):
            offsets = np.array([s.anchor - base.anchor for s in specs])
            object.__setattr__(self, "_offsets", offsets)
        self.check_budget()

    @property
    def n_samples(self) -> int:
        return len(self.specs) - 1

    @property
    def target(self) -> DistributionSpec:
        return self.specs[-1]

    @property
    def dim(self) -> int:
        return self.specs[0].dim

    @property
    def is_translation_family(self) -> bool:
        return self._offsets is not None

    def check_budget(self) -> None:
        """Verify W1(P_i, P_{i+k}) <= rho(k) for every admissible (i, k)."""
        n = len(self.specs)
        if self._offsets is not None:
            for k in range(1, n):
                worst = float(norm_of(self._offsets[k:] - self._offsets[:-k], self.norm).max())
                self._compare(worst, k)
            return
        for k in range(1, n):
            worst = max(wasserstein_distance(self.specs[i], self.specs[i + k], self.norm) for i in range(n - k))
            self._compare(worst, k)

    def _compare(self, worst: float, k: int) -> None:
        allowed = budget_eval(self.budget, k)
        if worst > allowed + BUDGET_TOL:
            raise BudgetViolationError(
                f"W1 between distributions {k} steps apart reaches {worst!r} > rho({k}) = {allowed!r}"
            )

    def to_dict(self) -> dict:
        return {
            "specs": [s.to_dict() for s in self.specs],
            "budget": self.budget.to_dict(),
            "norm": self.norm,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DistributionSequence":
        try:
            specs = [DistributionSpec.from_dict(s) for s in data["specs"]]
            budget = VariationBudget.from_dict(data["budget"])
        except KeyError as exc:
            raise SchemaError(f"missing field {exc.args[0]!r}", path="sequence") from None
        return cls(tuple(specs), budget, data.get("norm", "L2"))


def draw_points(seq: DistributionSequence, rng: np.random.Generator) -> np.ndarray:
    """One independent draw from each of P_1..P_N, shape (N, d).

    Translation sequences draw all N base variates in one call and shift them.
    """
    n = seq.n_samples
    if seq._offsets is not None:
        return seq.specs[0].sample(rng, n) + seq._offsets[:n]
    return np.vstack([spec.sample(rng, 1) for spec in seq.specs[:n]])


def make_drifting_sequence(
    start: DistributionSpec,
    drift_per_step: Sequence[float] | float,
    n_samples: int,
    norm: str = "L2",
) -> DistributionSequence:
    """P_{i+1} is P_i shifted by ``drift_per_step``; the budget is the tight
    linear one, rho(k) = ||drift|| k."""
    if start.family not in ("dirac", "uniform-box", "gaussian-isotropic"):
        raise DomainError(f"family {start.family!r} does not support drifting sequences")
    if int(n_samples) != n_samples or n_samples < 1:
        raise DomainError(f"n_samples must be a positive integer, got {n_samples!r}")
    drift = np.broadcast_to(np.asarray(drift_per_step, dtype=float), (start.dim,))
    specs = tuple(start.translate(i * drift) for i in range(n_samples + 1))
    rate = float(norm_of(drift, _check_norm(norm)))
    return DistributionSequence(specs, VariationBudget.linear(rate), norm)


def stationary_sequence(spec: DistributionSpec, n_samples: int, norm: str = "L2") -> DistributionSequence:
    """N iid samples and a target, all equal to ``spec``, with rho identically 0."""
    return DistributionSequence((spec,) * (n_samples + 1), VariationBudget.zero(), norm)
