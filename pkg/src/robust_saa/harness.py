"""Monte Carlo validation of the infeasibility bounds.

A trial draws one batch from the sampling sequence, forms the (robust) SAA
feasible set and is *bad* when that set contains a point whose violation
probability under the target exceeds epsilon. Trial ``t`` is seeded from
``(master_seed, t)`` only, so results do not depend on how trials are split
across workers.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .bounds import (
    BoundValue,
    bound_luedtke,
    bound_thm1,
    bound_thm2,
    bound_thm3,
    bound_thm5,
    default_beta,
    penalties,
)
from .distributions import DistributionSequence, SupportSet, draw_points
from .errors import DomainError, EmptyUncertaintySetError
from .kernels import hoeffding_tail, min_sample_size
from .saa import (
    ProblemInstance,
    SampleBatch,
    max_violations,
    radii_from_theta,
    true_violation_probability,
    violation_counts,
)

__all__ = [
    "RadiiRule",
    "TrialConfig",
    "EstimateResult",
    "wilson_interval",
    "trial_rng",
    "target_violations",
    "estimate_infeasibility",
    "SweepRow",
    "sweep_bound_comparison",
    "first_below_one",
    "Corollary4Report",
    "verify_corollary4",
    "write_estimate_csv",
    "write_sweep_csv",
    "write_corollary4_csv",
    "SLACK_HALF_WIDTHS",
]

SLACK_HALF_WIDTHS = 4.0
MAX_TARGET_STDERR = 1e-3
_Z95 = 1.959963984540054
_CHUNK = 512


@dataclass(frozen=True)
class RadiiRule:
    kind: str = "zero"
    theta: float | None = None
    values: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("zero", "theta", "explicit"):
            raise DomainError(f"unknown radii rule {self.kind!r}")
        if self.kind == "theta" and not (self.theta is not None and self.theta > 0):
            raise DomainError(f"theta rule needs theta > 0, got {self.theta!r}")
        if self.kind == "explicit" and self.values is None:
            raise DomainError("explicit radii rule needs values")

    @classmethod
    def zero(cls) -> "RadiiRule":
        return cls("zero")

    @classmethod
    def from_theta(cls, theta: float) -> "RadiiRule":
        return cls("theta", theta=float(theta))

    @classmethod
    def explicit(cls, values: Sequence[float]) -> "RadiiRule":
        return cls("explicit", values=tuple(float(v) for v in values))

    def radii(self, seq: DistributionSequence) -> np.ndarray:
        n = seq.n_samples
        if self.kind == "zero":
            return np.zeros(n)
        if self.kind == "theta":
            return radii_from_theta(seq.budget, n, self.theta)
        if len(self.values) != n:
            raise DomainError(f"explicit radii rule has {len(self.values)} values for {n} samples")
        return np.array(self.values)

    def to_dict(self) -> dict:
        if self.kind == "theta":
            return {"rule": "theta", "theta": self.theta}
        if self.kind == "explicit":
            return {"rule": "explicit", "values": list(self.values)}
        return {"rule": "zero"}


@dataclass(frozen=True, eq=False)
class TrialConfig:
    instance: ProblemInstance
    sequence: DistributionSequence
    radii: RadiiRule = RadiiRule()
    trials: int = 10_000
    master_seed: int = 0
    support_mode: str = "ball-only"
    support: SupportSet | None = None
    name: str = "run"

    def __post_init__(self) -> None:
        if int(self.trials) != self.trials or self.trials < 1:
            raise DomainError(f"trials must be a positive integer, got {self.trials!r}")
        if self.instance.decision_set.kind != "finite":
            raise DomainError("Monte Carlo estimation needs a finite decision set")
        self.radii.radii(self.sequence)

    @property
    def resolved_support(self) -> SupportSet:
        return self.support or self.sequence.target.support


@dataclass(frozen=True)
class EstimateResult:
    name: str
    n_samples: int
    card_x: int
    trials: int
    master_seed: int
    bad_trials: int
    n_bad_points: int
    wilson: tuple[float, float]
    bounds: dict[str, BoundValue] = field(default_factory=dict)
    approximate: bool = False

    @property
    def frequency(self) -> float:
        return self.bad_trials / self.trials

    @property
    def half_width(self) -> float:
        return (self.wilson[1] - self.wilson[0]) / 2

    def check(self, bound: BoundValue) -> bool:
        """Empirical frequency within ``SLACK_HALF_WIDTHS`` of min(1, bound)."""
        return self.frequency <= bound.clamped + SLACK_HALF_WIDTHS * self.half_width

    @property
    def checks(self) -> dict[str, bool]:
        return {name: self.check(b) for name, b in self.bounds.items()}

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def row(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "name": self.name,
            "N": self.n_samples,
            "card_X": self.card_x,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "bad_points": self.n_bad_points,
            "bad_trials": self.bad_trials,
            "frequency": self.frequency,
            "wilson_low": self.wilson[0],
            "wilson_high": self.wilson[1],
            "half_width": self.half_width,
        }
        for key in ("thm1", "thm2", "thm3", "thm5"):
            out[f"bound_{key}"] = self.bounds[key].raw if key in self.bounds else ""
        out["pass"] = int(self.passed)
        out["approximate"] = int(self.approximate)
        return out


def wilson_interval(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise DomainError("trials must be positive")
    p = successes / trials
    denom = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, min(center - half, p)), min(1.0, max(center + half, p))


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(trial),)))


def target_violations(config: TrialConfig) -> np.ndarray:
    """Violation probability of every decision point under the target."""
    target = config.sequence.target
    out = []
    for x in config.instance.decision_set.points:
        v = true_violation_probability(x, target, config.instance.constraint)
        if v.stderr > MAX_TARGET_STDERR:
            raise DomainError(f"target violation at {x.tolist()} has standard error {v.stderr!r} > {MAX_TARGET_STDERR}")
        out.append(v.value)
    return np.array(out)


def _count_bad(config: TrialConfig, bad_points: np.ndarray, radii: np.ndarray, start: int, stop: int) -> int:
    inst = config.instance
    n = config.sequence.n_samples
    limit = max_violations(inst.risk.alpha, n)
    support = config.resolved_support
    bad = 0
    for t in range(start, stop):
        rng = trial_rng(config.master_seed, t)
        batch = SampleBatch(draw_points(config.sequence, rng), radii, config.sequence.norm, config.support_mode, support)
        try:
            counts = violation_counts(inst.constraint, bad_points, batch, inst.risk.gamma)
        except EmptyUncertaintySetError as exc:
            raise EmptyUncertaintySetError(f"trial {t}: {exc}", index=exc.index) from None
        bad += bool(np.any(counts <= limit))
    return bad


def _count_chunk(args) -> int:
    return _count_bad(*args)


def applicable_bounds(config: TrialConfig, radii: np.ndarray) -> dict[str, BoundValue]:
    inst = config.instance
    risk = inst.risk
    seq = config.sequence
    n = seq.n_samples
    card = inst.decision_set.cardinality
    probs = penalties(seq.budget, n, radii, risk.epsilon)
    out = {"thm3": bound_thm3(card, risk.alpha, n, probs)}
    stationary = seq.budget.is_zero(n)
    if stationary:
        out["thm1"] = bound_thm1(card, risk.alpha, risk.epsilon, n)
    lip = inst.lipschitz
    diameter = inst.decision_set.diameter
    if lip is not None and risk.gamma > 0 and diameter > 0:
        dim = inst.decision_set.dim
        out["thm5"] = bound_thm5(lip, diameter, risk.gamma, dim, risk.alpha, n, probs)
        if stationary:
            out["thm2"] = bound_thm2(lip, diameter, risk.gamma, dim, risk.alpha, risk.epsilon, n)
    return out


def estimate_infeasibility(config: TrialConfig, jobs: int = 1) -> EstimateResult:
    """Frequency of bad trials with its Wilson interval and every applicable bound."""
    radii = config.radii.radii(config.sequence)
    v_target = target_violations(config)
    bad_points = config.instance.decision_set.points[v_target > config.instance.risk.epsilon]
    bad = 0
    if len(bad_points):
        chunks = [
            (config, bad_points, radii, s, min(s + _CHUNK, config.trials)) for s in range(0, config.trials, _CHUNK)
        ]
        if jobs > 1 and len(chunks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                bad = sum(pool.map(_count_chunk, chunks))
        else:
            bad = sum(_count_chunk(c) for c in chunks)
    return EstimateResult(
        name=config.name,
        n_samples=config.sequence.n_samples,
        card_x=config.instance.decision_set.cardinality,
        trials=config.trials,
        master_seed=config.master_seed,
        bad_trials=bad,
        n_bad_points=len(bad_points),
        wilson=wilson_interval(bad, config.trials),
        bounds=applicable_bounds(config, radii),
        approximate=not config.instance.constraint.exact,
    )


# --------------------------------------------------------------------------
# bound comparison sweep


@dataclass(frozen=True)
class SweepRow:
    n_samples: int
    thm2: BoundValue
    luedtke: BoundValue

    @property
    def ratio(self) -> float:
        """luedtke / thm2, via logarithms when either raw value under- or overflows."""
        t, l = self.thm2, self.luedtke
        if 0 < t.raw < math.inf and 0 < l.raw < math.inf:
            return l.raw / t.raw
        return math.inf if self.log10_ratio > 308.25 else 10**self.log10_ratio

    @property
    def log10_ratio(self) -> float:
        return self.luedtke.log10 - self.thm2.log10


def sweep_bound_comparison(
    n: int,
    epsilon: float,
    alpha: float,
    ratio: float,
    beta: float | None = None,
    n_values: Iterable[int] = range(1, 2001),
) -> list[SweepRow]:
    """Covering bound against the older bound for each N, with L D / gamma = ``ratio``."""
    beta = default_beta(epsilon, alpha) if beta is None else beta
    return [
        SweepRow(
            int(N),
            bound_thm2(ratio, 1.0, 1.0, n, alpha, epsilon, int(N)),
            bound_luedtke(ratio, 1.0, 1.0, n, alpha, epsilon, beta, int(N)),
        )
        for N in n_values
    ]


def first_below_one(rows: Sequence[SweepRow], which: str = "thm2") -> int | None:
    for row in rows:
        if getattr(row, which).raw < 1.0:
            return row.n_samples
    return None


# --------------------------------------------------------------------------
# sample-size confidence check


@dataclass(frozen=True)
class Corollary4Report:
    card_x: int
    delta: float
    epsilon: float
    alpha: float
    theta: float
    n_samples: int
    hoeffding_bound: float
    estimate: EstimateResult

    @property
    def passed(self) -> bool:
        return self.estimate.frequency <= self.delta + SLACK_HALF_WIDTHS * self.estimate.half_width

    def row(self) -> dict[str, Any]:
        return {
            "name": self.estimate.name,
            "card_X": self.card_x,
            "delta": self.delta,
            "epsilon": self.epsilon,
            "alpha": self.alpha,
            "theta": self.theta,
            "N": self.n_samples,
            "hoeffding_bound": self.hoeffding_bound,
            "bound_thm3": self.estimate.bounds["thm3"].raw,
            "trials": self.estimate.trials,
            "bad_trials": self.estimate.bad_trials,
            "frequency": self.estimate.frequency,
            "wilson_low": self.estimate.wilson[0],
            "wilson_high": self.estimate.wilson[1],
            "pass": int(self.passed),
        }


def verify_corollary4(
    instance: ProblemInstance,
    environment: Callable[[int], DistributionSequence],
    trials: int = 10_000,
    master_seed: int = 0,
    support_mode: str = "ball-only",
    jobs: int = 1,
    name: str = "corollary4",
) -> Corollary4Report:
    """Run the theta-rule robust SAA at the minimum sample size.

    ``environment(N)`` must return a sequence of N sampling distributions plus
    the target. ``instance.risk`` supplies epsilon, alpha, delta and theta.
    """
    risk = instance.risk
    if risk.delta is None or risk.theta is None:
        raise DomainError("verify_corollary4 needs delta and theta in the risk config")
    card = instance.decision_set.cardinality
    n = min_sample_size(card, risk.delta, risk.epsilon, risk.alpha, risk.theta) if risk.delta < 1 else 1
    seq = environment(n)
    if seq.n_samples != n:
        raise DomainError(f"environment returned {seq.n_samples} samples, expected {n}")
    config = TrialConfig(instance, seq, RadiiRule.from_theta(risk.theta), trials, master_seed, support_mode, name=name)
    est = estimate_infeasibility(config, jobs=jobs)
    hoeff = card * hoeffding_tail(risk.alpha, [risk.epsilon - risk.theta] * n)
    return Corollary4Report(card, risk.delta, risk.epsilon, risk.alpha, risk.theta, n, hoeff, est)


# --------------------------------------------------------------------------
# CSV writers


def _fmt(v: Any) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def _write_rows(path, rows: list[dict[str, Any]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(rows[0]))
        for row in rows:
            writer.writerow([_fmt(v) for v in row.values()])


def write_estimate_csv(path, results: Sequence[EstimateResult]) -> None:
    _write_rows(path, [r.row() for r in results])


def write_sweep_csv(path, rows: Sequence[SweepRow]) -> None:
    _write_rows(
        path,
        [
            {
                "N": r.n_samples,
                "bound_thm2": r.thm2.raw,
                "bound_luedtke": r.luedtke.raw,
                "ratio": r.ratio,
                "log10_thm2": r.thm2.log10,
                "log10_luedtke": r.luedtke.log10,
            }
            for r in rows
        ],
    )


def write_corollary4_csv(path, reports: Sequence[Corollary4Report]) -> None:
    _write_rows(path, [r.row() for r in reports])


def echo_config(path, config: dict) -> None:
    with open(path, "w") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")
