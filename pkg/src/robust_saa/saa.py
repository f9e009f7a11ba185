"""Classic and robust sample average approximations over finite decision sets.

A sampled constraint ``i`` is violated at ``x`` when ``g(x, xi_i) + gamma > 0``
(classic) or when ``sup_{u in U_i} g(x, u) + gamma > 0`` (robust), where
``U_i`` is the norm ball of radius ``r_i`` around ``xi_i``, optionally
intersected with a box support set. Equality counts as satisfied.
"""

from __future__ import annotations

import csv
import functools
import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np
from scipy import optimize, special
from scipy.stats import qmc

from .distributions import (
    NORMS,
    DistributionSequence,
    DistributionSpec,
    SupportSet,
    VariationBudget,
    budget_eval,
    dual_norm_of,
    norm_of,
)
from .errors import DomainError, EmptyUncertaintySetError, SchemaError
from .kernels import tail_index

__all__ = [
    "BiAffineConstraint",
    "BlackBoxConstraint",
    "DecisionSet",
    "RiskConfig",
    "ProblemInstance",
    "SampleBatch",
    "draw_sequence",
    "ViolationProbability",
    "Solution",
    "SUPPORT_MODES",
    "true_violation_probability",
    "constraint_values",
    "robust_values",
    "robust_sup",
    "violation_counts",
    "empirical_violation",
    "robust_empirical_violation",
    "max_violations",
    "feasible_mask",
    "feasible_set",
    "solve_by_enumeration",
    "radii_from_theta",
    "check_lipschitz",
    "decision_rows",
    "write_decision_csv",
]

SUPPORT_MODES = ("ball-only", "ball-intersect-support")
DEFAULT_INNER_POINTS = 256
MC_DRAWS = 10**6


# --------------------------------------------------------------------------
# constraint functions


@dataclass(frozen=True, eq=False)
class BiAffineConstraint:
    """``g(x, u) = (A x + a) . u + c . x + b0``.

    :meth:`inner` builds the common case ``g(x, u) = x . u - b``.
    """

    coupling: np.ndarray  # A, shape (d, n)
    u_coef: np.ndarray  # a, shape (d,)
    x_coef: np.ndarray  # c, shape (n,)
    offset: float = 0.0
    lipschitz: float | None = None
    kind: str = field(default="bi-affine", init=False)

    def __post_init__(self) -> None:
        A = np.atleast_2d(np.asarray(self.coupling, dtype=float))
        a = np.atleast_1d(np.asarray(self.u_coef, dtype=float))
        c = np.atleast_1d(np.asarray(self.x_coef, dtype=float))
        if A.shape != (a.size, c.size):
            raise DomainError(f"coupling must have shape ({a.size}, {c.size}), got {A.shape}")
        for name, arr in (("coupling", A), ("u_coef", a), ("x_coef", c)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def inner(cls, offset: float, dim: int, lipschitz: float | None = None) -> "BiAffineConstraint":
        return cls(np.eye(dim), np.zeros(dim), np.zeros(dim), -float(offset), lipschitz)

    @property
    def exact(self) -> bool:
        return True

    @property
    def x_dim(self) -> int:
        return self.x_coef.size

    @property
    def u_dim(self) -> int:
        return self.u_coef.size

    def coefficients(self, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per decision point, the slope ``w`` and intercept ``s`` of ``u -> g(x, u)``."""
        X = np.atleast_2d(np.asarray(xs, dtype=float))
        W = (X[:, None, :] * self.coupling[None, :, :]).sum(-1) + self.u_coef
        S = (X * self.x_coef).sum(-1) + self.offset
        return W, S

    def __call__(self, x: Sequence[float], u: Sequence[float]) -> float:
        W, S = self.coefficients(np.asarray(x, dtype=float)[None, :])
        return float((W[0] * np.asarray(u, dtype=float)).sum() + S[0])

    def to_dict(self) -> dict:
        out = {
            "kind": "bi-affine",
            "coupling": self.coupling.tolist(),
            "u_coef": self.u_coef.tolist(),
            "x_coef": self.x_coef.tolist(),
            "offset": self.offset,
        }
        if self.lipschitz is not None:
            out["lipschitz"] = self.lipschitz
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "BiAffineConstraint":
        if "inner_offset" in data:
            return cls.inner(data["inner_offset"], int(data["dim"]), data.get("lipschitz"))
        return cls(data["coupling"], data["u_coef"], data["x_coef"], data.get("offset", 0.0), data.get("lipschitz"))


@dataclass(frozen=True, eq=False)
class BlackBoxConstraint:
    """Deterministic callback ``g(x, xi) -> float``.

    ``monotone`` ("increasing"/"decreasing" in a scalar xi) enables exact
    violation probabilities for 1-d uniform and gaussian targets. Robust sups
    are approximate: a maximum over ``inner_points`` quasi-random ball points.
    """

    func: Callable[[np.ndarray, np.ndarray], float]
    lipschitz: float | None = None
    monotone: str | None = None
    inner_points: int = DEFAULT_INNER_POINTS
    kind: str = field(default="black-box", init=False)

    def __post_init__(self) -> None:
        if self.monotone not in (None, "increasing", "decreasing"):
            raise DomainError(f"monotone must be 'increasing', 'decreasing' or None, got {self.monotone!r}")
        if self.inner_points < 1:
            raise DomainError("inner_points must be positive")

    @property
    def exact(self) -> bool:
        return False

    def __call__(self, x: Sequence[float], u: Sequence[float]) -> float:
        return float(self.func(np.asarray(x, dtype=float), np.asarray(u, dtype=float)))


Constraint = BiAffineConstraint | BlackBoxConstraint


# --------------------------------------------------------------------------
# problem data


@dataclass(frozen=True, eq=False)
class DecisionSet:
    kind: str
    points: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind == "finite":
            pts = np.atleast_2d(np.asarray(self.points, dtype=float))
            if pts.size == 0:
                raise DomainError("finite decision set must be nonempty")
            if len(np.unique(pts, axis=0)) != len(pts):
                raise DomainError("finite decision set contains duplicate points")
            pts.setflags(write=False)
            object.__setattr__(self, "points", pts)
        elif self.kind == "box":
            lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
            hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
            if lo.shape != hi.shape or np.any(lo > hi):
                raise DomainError("box decision set requires lower <= upper")
            object.__setattr__(self, "lower", lo)
            object.__setattr__(self, "upper", hi)
        else:
            raise DomainError(f"unknown decision set kind {self.kind!r}")

    @classmethod
    def finite(cls, points: Sequence[Sequence[float]]) -> "DecisionSet":
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        return cls("finite", points=pts)

    @classmethod
    def box(cls, lower: Sequence[float], upper: Sequence[float]) -> "DecisionSet":
        return cls("box", lower=lower, upper=upper)

    @property
    def dim(self) -> int:
        return self.points.shape[1] if self.kind == "finite" else self.lower.size

    @property
    def cardinality(self) -> int | None:
        return len(self.points) if self.kind == "finite" else None

    @property
    def diameter(self) -> float:
        """L-infinity diameter."""
        if self.kind == "box":
            return float(np.max(self.upper - self.lower))
        return float(np.max(self.points.max(axis=0) - self.points.min(axis=0)))

    def grid(self, per_axis: int) -> "DecisionSet":
        """Finite grid discretization of a box decision set."""
        if self.kind != "box":
            raise DomainError("only box decision sets can be discretized")
        axes = [np.linspace(a, b, per_axis) if b > a else np.array([a]) for a, b in zip(self.lower, self.upper)]
        return DecisionSet.finite(np.array(list(itertools.product(*axes))))

    def to_dict(self) -> dict:
        if self.kind == "finite":
            return {"kind": "finite", "points": self.points.tolist()}
        return {"kind": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "DecisionSet":
        if data["kind"] == "finite":
            return cls.finite(data["points"])
        return cls.box(data["lower"], data["upper"])


@dataclass(frozen=True)
class RiskConfig:
    epsilon: float
    alpha: float
    gamma: float = 0.0
    delta: float | None = None
    theta: float | None = None
    lipschitz: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon <= 1.0:
            raise DomainError(f"epsilon must lie in [0, 1], got {self.epsilon!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if not self.gamma >= 0.0:
            raise DomainError(f"gamma must be >= 0, got {self.gamma!r}")
        if self.delta is not None and not 0.0 < self.delta <= 1.0:
            raise DomainError(f"delta must lie in (0, 1], got {self.delta!r}")
        if self.theta is not None and not self.theta > 0.0:
            raise DomainError(f"theta must be positive, got {self.theta!r}")

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    decision_set: DecisionSet
    constraint: Constraint
    risk: RiskConfig
    objective: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.objective is not None:
            f = np.atleast_1d(np.asarray(self.objective, dtype=float))
            if f.size != self.decision_set.dim:
                raise DomainError(f"objective has {f.size} coefficients, decision set dimension is {self.decision_set.dim}")
            object.__setattr__(self, "objective", f)
        if isinstance(self.constraint, BiAffineConstraint) and self.constraint.x_dim != self.decision_set.dim:
            raise DomainError("constraint and decision set dimensions differ")

    @property
    def lipschitz(self) -> float | None:
        return self.risk.lipschitz if self.risk.lipschitz is not None else self.constraint.lipschitz

    def to_dict(self) -> dict:
        if not isinstance(self.constraint, BiAffineConstraint):
            raise SchemaError("only bi-affine constraints can be serialized", path="constraint")
        out = {
            "decision_set": self.decision_set.to_dict(),
            "constraint": self.constraint.to_dict(),
            "risk": self.risk.to_dict(),
        }
        if self.objective is not None:
            out["objective"] = self.objective.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ProblemInstance":
        try:
            con = data["constraint"]
            if con.get("kind", "bi-affine") != "bi-affine":
                raise SchemaError("only bi-affine constraints can be loaded from JSON", path="constraint.kind")
            return cls(
                DecisionSet.from_dict(data["decision_set"]),
                BiAffineConstraint.from_dict(con),
                RiskConfig(**data["risk"]),
                data.get("objective"),
            )
        except KeyError as exc:
            raise SchemaError(f"missing field {exc.args[0]!r}", path="problem") from None


@dataclass(frozen=True, eq=False)
class SampleBatch:
    points: np.ndarray
    radii: np.ndarray | None = None
    norm: str = "L2"
    support_mode: str = "ball-only"
    support: SupportSet | None = None

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        r = np.zeros(len(pts)) if self.radii is None else np.asarray(self.radii, dtype=float).ravel()
        if r.shape != (len(pts),):
            raise DomainError(f"need one radius per sample: {len(pts)} points, {r.size} radii")
        if np.any(r < 0) or np.any(np.isnan(r)):
            raise DomainError("radii must be nonnegative")
        if self.norm not in NORMS:
            raise DomainError(f"norm must be one of {NORMS}, got {self.norm!r}")
        if self.support_mode not in SUPPORT_MODES:
            raise DomainError(f"support_mode must be one of {SUPPORT_MODES}, got {self.support_mode!r}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "radii", r)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def clips_to_box(self) -> bool:
        return self.support_mode == "ball-intersect-support" and self.support is not None and self.support.bounded

    def with_radii(self, radii: Sequence[float]) -> "SampleBatch":
        return replace(self, radii=np.asarray(radii, dtype=float))

    def to_dict(self) -> dict:
        out = {
            "points": self.points.tolist(),
            "radii": self.radii.tolist(),
            "norm": self.norm,
            "support_mode": self.support_mode,
        }
        if self.support is not None:
            out["support"] = self.support.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SampleBatch":
        sup = SupportSet.from_dict(data["support"]) if "support" in data else None
        return cls(data["points"], data.get("radii"), data.get("norm", "L2"), data.get("support_mode", "ball-only"), sup)


def draw_sequence(
    seq: DistributionSequence,
    master_seed: int,
    radii: Sequence[float] | None = None,
    support_mode: str = "ball-only",
) -> SampleBatch:
    """Sample i from P_i with its own generator seeded by (master_seed, i).

    Each point depends only on the seed and its index, so any subset of
    indices can be drawn independently. The support defaults to the target's.
    """
    points = np.vstack(
        [
            spec.sample(np.random.default_rng(np.random.SeedSequence(entropy=int(master_seed), spawn_key=(i,))), 1)
            for i, spec in enumerate(seq.specs[: seq.n_samples])
        ]
    )
    return SampleBatch(points, radii, seq.norm, support_mode, seq.target.support)


# --------------------------------------------------------------------------
# true violation probabilities


@dataclass(frozen=True)
class ViolationProbability:
    value: float
    stderr: float = 0.0
    method: str = "exact"


def _uniform_linear_sf(w: np.ndarray, s: float, lower: np.ndarray, upper: np.ndarray) -> float:
    """P{w . U + s > 0} for U uniform on a box, exact in rational arithmetic."""
    widths = upper - lower
    const = Fraction(s) + sum((Fraction(float(wj)) * Fraction(float(lj)) for wj, lj in zip(w, lower)), Fraction(0))
    scales = []
    for wj, hj in zip(w, widths):
        a = Fraction(float(wj)) * Fraction(float(hj))
        if a < 0:
            const += a
            a = -a
        if a > 0:
            scales.append(a)
    # w . U + s = const + sum_j a_j V_j, V_j iid uniform[0, 1]
    t = -const
    k = len(scales)
    if k == 0:
        return 1.0 if const > 0 else 0.0
    if t <= 0:
        return 1.0
    if t >= sum(scales):
        return 0.0
    acc = Fraction(0)
    for subset in itertools.product((0, 1), repeat=k):
        shift = t - sum((a for a, bit in zip(scales, subset) if bit), Fraction(0))
        if shift > 0:
            acc += (-1) ** sum(subset) * shift**k
    cdf = acc / (math.factorial(k) * math.prod(scales))
    return float(1 - cdf)


def _monte_carlo(x, target, constraint, draws: int, seed: int) -> ViolationProbability:
    rng = np.random.default_rng(seed)
    xi = target.sample(rng, draws)
    if isinstance(constraint, BiAffineConstraint):
        W, S = constraint.coefficients(np.asarray(x, dtype=float)[None, :])
        g = xi @ W[0] + S[0]
    else:
        g = np.array([constraint(x, u) for u in xi])
    p = float(np.mean(g > 0))
    return ViolationProbability(p, math.sqrt(max(p * (1 - p), 0.25 / draws) / draws), "monte-carlo")


def true_violation_probability(
    x: Sequence[float],
    target: DistributionSpec,
    constraint: Constraint,
    draws: int = MC_DRAWS,
    seed: int = 0,
) -> ViolationProbability:
    """P{g(x, xi) > 0} for xi drawn from ``target``.

    Exact for point masses, discrete targets, gaussians and uniform boxes
    (bi-affine g, up to 10 active coordinates), and for monotone 1-d
    black-box constraints; otherwise a seeded Monte Carlo estimate.
    """
    x = np.asarray(x, dtype=float)
    if target.family == "dirac":
        return ViolationProbability(float(constraint(x, np.array(target.location)) > 0))
    if target.family == "discrete-weighted":
        hits = [w for w, a in zip(target.weights, target.atoms) if constraint(x, np.array(a)) > 0]
        return ViolationProbability(min(math.fsum(hits), 1.0))
    if isinstance(constraint, BiAffineConstraint):
        W, S = constraint.coefficients(x[None, :])
        w, s = W[0], float(S[0])
        if target.family == "gaussian-isotropic":
            scale = target.std * float(np.sqrt((w * w).sum()))
            mean = float((w * np.array(target.location)).sum()) + s
            if scale == 0:
                return ViolationProbability(float(mean > 0))
            return ViolationProbability(float(special.ndtr(mean / scale)))
        lower, upper = np.array(target.lower), np.array(target.upper)
        if np.count_nonzero(w * (upper - lower)) <= 10:
            return ViolationProbability(_uniform_linear_sf(w, s, lower, upper))
        return _monte_carlo(x, target, constraint, draws, seed)
    if constraint.monotone and target.dim == 1:
        return _monotone_1d(x, target, constraint)
    return _monte_carlo(x, target, constraint, draws, seed)


def _monotone_1d(x, target, constraint) -> ViolationProbability:
    sign = 1.0 if constraint.monotone == "increasing" else -1.0
    h = lambda t: constraint(x, np.array([t]))
    if target.family == "uniform-box":
        lo, hi = target.lower[0], target.upper[0]
    else:
        m, sd = target.location[0], target.std
        lo, hi = m - 40 * sd, m + 40 * sd
    if sign * h(hi) <= 0:
        return ViolationProbability(0.0)
    if sign * h(lo) > 0:
        return ViolationProbability(1.0)
    root = optimize.brentq(h, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    below = float(target.cdf(root))
    return ViolationProbability(1.0 - below if sign > 0 else below)


# --------------------------------------------------------------------------
# constraint values and robust sups


def _affine_eval(W: np.ndarray, S: np.ndarray, U: np.ndarray) -> np.ndarray:
    """``W[j] . U[j, i] + S[j]``; U has shape (m, N, d) or (N, d)."""
    if U.ndim == 2:
        U = U[None, :, :]
    return (W[:, None, :] * U).sum(-1) + S[:, None]


def constraint_values(constraint: Constraint, xs: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Matrix of g(x_j, xi_i), shape (len(xs), len(points))."""
    X = np.atleast_2d(np.asarray(xs, dtype=float))
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if isinstance(constraint, BiAffineConstraint):
        W, S = constraint.coefficients(X)
        return _affine_eval(W, S, P)
    return np.array([[constraint(x, p) for p in P] for x in X])


def _box_distance(points: np.ndarray, lower: np.ndarray, upper: np.ndarray, norm: str) -> np.ndarray:
    gap = np.maximum(lower - points, 0.0) + np.maximum(points - upper, 0.0)
    return norm_of(gap, norm)


def _check_nonempty(batch: SampleBatch) -> None:
    lo, hi = np.array(batch.support.lower), np.array(batch.support.upper)
    dist = _box_distance(batch.points, lo, hi, batch.norm)
    bad = np.flatnonzero(dist > batch.radii)
    if bad.size:
        i = int(bad[0])
        raise EmptyUncertaintySetError(
            f"uncertainty set of sample {i} is empty: ball of radius {batch.radii[i]!r} misses the support",
            index=i,
        )


def _argmax_l1_box(w, center, r, lo, hi) -> np.ndarray:
    """Maximizer of w . u over {|u - center|_1 <= r} intersected with [lo, hi].

    Start from the cheapest feasible point (the projection of the center) and
    spend the leftover radius greedily on the steepest coordinates.
    """
    u = np.clip(center, lo, hi)
    budget = r - float(np.abs(u - center).sum())
    room = np.where(w > 0, hi - u, u - lo)
    for j in np.argsort(-np.abs(w), kind="stable"):
        if budget <= 0 or w[j] == 0:
            break
        step = min(room[j], budget)
        u[j] += step if w[j] > 0 else -step
        budget -= step
    return u


def _argmax_l2_box(w, center, r, lo, hi) -> np.ndarray:
    """Maximizer of w . u over {|u - center|_2 <= r} intersected with [lo, hi].

    The KKT path is u(t) = center + clip(t w, lo - center, hi - center) for
    t >= 0. Its squared distance to the center is nondecreasing and piecewise
    quadratic in t, so the segment where it crosses r^2 is found from the
    breakpoints and solved in closed form.
    """
    lo_gap, hi_gap = lo - center, hi - center
    dev = lambda t: np.clip(t * w, lo_gap, hi_gap)
    with np.errstate(divide="ignore", invalid="ignore"):
        cand = np.concatenate([lo_gap / w, hi_gap / w])
    ts = np.unique(np.concatenate([[0.0], cand[np.isfinite(cand) & (cand > 0)]]))
    d2 = np.array([float((dev(t) ** 2).sum()) for t in ts])
    r2 = r * r
    if d2[-1] <= r2:
        return center + dev(ts[-1] + 1.0)
    k = int(np.searchsorted(d2, r2, side="right"))
    t0, t1 = ts[k - 1], ts[k]
    probe = 0.5 * (t0 + t1) * w
    free = (probe > lo_gap) & (probe < hi_gap) & (w != 0)
    a = float((w[free] ** 2).sum())
    c = float((np.clip(probe, lo_gap, hi_gap)[~free] ** 2).sum())
    t = math.sqrt(max(r2 - c, 0.0) / a) if a > 0 else t0
    return center + dev(min(max(t, t0), t1))


@functools.lru_cache(maxsize=64)
def _unit_ball_cloud(dim: int, norm: str, count: int) -> np.ndarray:
    """Center, extreme points and ``count`` scrambled-Sobol points of the unit ball."""
    sob = qmc.Sobol(2 * dim + 1, scramble=True, seed=20240611).random(count)
    sob = np.clip(sob, 1e-12, 1 - 1e-12)
    if norm == "Linf":
        pts = 2 * sob[:, :dim] - 1
        extremes = np.array(list(itertools.product((-1.0, 1.0), repeat=dim))) if dim <= 10 else np.vstack([np.eye(dim), -np.eye(dim)])
    elif norm == "L2":
        g = special.ndtri(sob[:, :dim])
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        pts = g * sob[:, dim : dim + 1] ** (1.0 / dim)
        extremes = np.vstack([np.eye(dim), -np.eye(dim)])
    else:
        e = -np.log(sob[:, : dim + 1])
        signs = np.where(sob[:, dim + 1 : 2 * dim + 1] < 0.5, -1.0, 1.0)
        pts = signs * e[:, :dim] / e.sum(axis=1, keepdims=True)
        extremes = np.vstack([np.eye(dim), -np.eye(dim)])
    cloud = np.vstack([np.zeros((1, dim)), extremes, pts])
    cloud.setflags(write=False)
    return cloud


def _black_box_sup(constraint: BlackBoxConstraint, x, center, r, norm, box) -> float:
    cloud = center + r * _unit_ball_cloud(center.size, norm, constraint.inner_points)
    if box is not None:
        lo, hi = box
        inside = np.all((cloud >= lo) & (cloud <= hi), axis=1)
        cloud = np.vstack([np.clip(center, lo, hi)[None, :], cloud[inside]])
    return max(constraint(x, u) for u in cloud)


def robust_values(constraint: Constraint, xs: np.ndarray, batch: SampleBatch) -> np.ndarray:
    """Matrix of sup_{u in U_i} g(x_j, u), shape (len(xs), len(batch)).

    Bi-affine constraints are exact: ball-only sets use the dual norm, box
    intersections are solved coordinatewise (Linf), greedily (L1) or along the
    KKT path (L2). Black-box constraints are approximate.
    """
    X = np.atleast_2d(np.asarray(xs, dtype=float))
    P, R = batch.points, batch.radii
    box = None
    if batch.clips_to_box:
        _check_nonempty(batch)
        box = (np.array(batch.support.lower), np.array(batch.support.upper))
    if not isinstance(constraint, BiAffineConstraint):
        return np.array(
            [[_black_box_sup(constraint, x, P[i], R[i], batch.norm, box) for i in range(len(P))] for x in X]
        )
    W, S = constraint.coefficients(X)
    if box is None:
        return _affine_eval(W, S, P) + dual_norm_of(W, batch.norm)[:, None] * R[None, :]
    lo, hi = box
    if batch.norm == "Linf":
        lo_i = np.maximum(lo, P - R[:, None])
        hi_i = np.minimum(hi, P + R[:, None])
        U = np.where(W[:, None, :] > 0, hi_i[None], np.where(W[:, None, :] < 0, lo_i[None], np.clip(P, lo_i, hi_i)[None]))
        return _affine_eval(W, S, U)
    solver = _argmax_l1_box if batch.norm == "L1" else _argmax_l2_box
    U = np.empty((len(X), len(P), P.shape[1]))
    for j in range(len(X)):
        for i in range(len(P)):
            U[j, i] = solver(W[j], P[i], R[i], lo, hi) if R[i] > 0 else np.clip(P[i], lo, hi)
    return _affine_eval(W, S, U)


def robust_sup(
    x: Sequence[float],
    center: Sequence[float],
    radius: float,
    constraint: Constraint,
    norm: str = "L2",
    support_mode: str = "ball-only",
    support: SupportSet | None = None,
) -> float:
    """sup of g(x, u) over the uncertainty set of one sample."""
    batch = SampleBatch(np.atleast_2d(np.asarray(center, dtype=float)), [radius], norm, support_mode, support)
    return float(robust_values(constraint, np.asarray(x, dtype=float)[None, :], batch)[0, 0])


# --------------------------------------------------------------------------
# empirical violation and feasibility


def violation_counts(
    constraint: Constraint, xs: np.ndarray, batch: SampleBatch, gamma: float = 0.0, robust: bool = True
) -> np.ndarray:
    """Number of violated (robust) sampled constraints at each decision point."""
    vals = robust_values(constraint, xs, batch) if robust else constraint_values(constraint, xs, batch.points)
    return np.count_nonzero(vals + gamma > 0, axis=1)


def empirical_violation(x, batch: SampleBatch, constraint: Constraint, gamma: float = 0.0) -> Fraction:
    """Fraction of samples with g(x, xi_i) + gamma > 0; radii are ignored."""
    count = violation_counts(constraint, np.asarray(x, dtype=float)[None, :], batch, gamma, robust=False)[0]
    return Fraction(int(count), len(batch))


def robust_empirical_violation(x, batch: SampleBatch, constraint: Constraint, gamma: float = 0.0) -> Fraction:
    """Fraction of samples whose uncertainty set contains a u with g(x, u) + gamma > 0."""
    count = violation_counts(constraint, np.asarray(x, dtype=float)[None, :], batch, gamma, robust=True)[0]
    return Fraction(int(count), len(batch))


def max_violations(alpha: float, n: int) -> int:
    """Largest violation count k with k / n <= alpha."""
    return tail_index(alpha * n)


def feasible_mask(instance: ProblemInstance, batch: SampleBatch, gamma: float | None = None) -> np.ndarray:
    if instance.decision_set.kind != "finite":
        raise DomainError("feasible sets are only enumerated for finite decision sets")
    g = instance.risk.gamma if gamma is None else gamma
    counts = violation_counts(instance.constraint, instance.decision_set.points, batch, g)
    return counts <= max_violations(instance.risk.alpha, len(batch))


def feasible_set(instance: ProblemInstance, batch: SampleBatch, gamma: float | None = None) -> np.ndarray:
    """Decision points whose robust empirical violation is at most alpha."""
    return instance.decision_set.points[feasible_mask(instance, batch, gamma)]


@dataclass(frozen=True)
class Solution:
    feasible: bool
    point: np.ndarray | None = None
    objective: float | None = None


def solve_by_enumeration(instance: ProblemInstance, batch: SampleBatch, gamma: float | None = None) -> Solution:
    """Minimize the linear objective over the feasible set; ties go to the
    lexicographically smallest point."""
    if instance.objective is None:
        raise DomainError("solve_by_enumeration needs an objective")
    pts = feasible_set(instance, batch, gamma)
    if len(pts) == 0:
        return Solution(False)
    vals = pts @ instance.objective
    best = vals.min()
    tied = pts[vals == best]
    order = np.lexsort(tied.T[::-1])
    return Solution(True, tied[order[0]].copy(), float(best))


def radii_from_theta(budget: VariationBudget, n: int, theta: float) -> np.ndarray:
    """r_i = rho(N + 1 - i) / theta for i = 1..N."""
    if not theta > 0:
        raise DomainError(f"theta must be positive, got {theta!r}")
    return np.array([budget_eval(budget, n + 1 - i) / theta for i in range(1, n + 1)])


def check_lipschitz(
    constraint: Constraint,
    lipschitz: float,
    xs: np.ndarray,
    xis: np.ndarray,
    pairs: int = 1000,
    seed: int = 0,
) -> float:
    """Largest observed |g(x, xi) - g(y, xi)| / |x - y|_inf over random pairs.

    Raises DomainError if a pair breaks the declared constant by more than 1e-9.
    """
    rng = np.random.default_rng(seed)
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    xis = np.atleast_2d(np.asarray(xis, dtype=float))
    worst = 0.0
    for _ in range(pairs):
        a, b = xs[rng.integers(len(xs))], xs[rng.integers(len(xs))]
        xi = xis[rng.integers(len(xis))]
        gap = float(np.abs(a - b).max())
        diff = abs(constraint(a, xi) - constraint(b, xi))
        if diff > lipschitz * gap + 1e-9:
            raise DomainError(f"declared Lipschitz constant {lipschitz!r} violated: |dg| = {diff!r} at |dx| = {gap!r}")
        if gap > 0:
            worst = max(worst, diff / gap)
    return worst


# --------------------------------------------------------------------------
# CSV export


def decision_rows(instance: ProblemInstance, batch: SampleBatch, gamma: float | None = None) -> list[dict[str, Any]]:
    """One row per decision point: coordinates, classic and robust empirical
    violation, objective and feasibility."""
    g = instance.risk.gamma if gamma is None else gamma
    pts = instance.decision_set.points
    nominal = violation_counts(instance.constraint, pts, batch, g, robust=False)
    robust = violation_counts(instance.constraint, pts, batch, g, robust=True)
    limit = max_violations(instance.risk.alpha, len(batch))
    rows = []
    for j, x in enumerate(pts):
        row: dict[str, Any] = {f"x{k}": float(v) for k, v in enumerate(x)}
        row["v_hat"] = int(nominal[j]) / len(batch)
        row["v_hat_robust"] = int(robust[j]) / len(batch)
        row["objective"] = float(x @ instance.objective) if instance.objective is not None else ""
        row["feasible"] = int(robust[j] <= limit)
        row["approximate"] = int(not instance.constraint.exact)
        rows.append(row)
    return rows


def write_decision_csv(path, rows: list[dict[str, Any]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
