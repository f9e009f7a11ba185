"""Monte Carlo check of the drifting-sample bound on random instances.

    python3 scripts/drift_soundness_check.py --configs 20 --trials 10000 --seed 4 --out results/

Each instance draws a finite decision set, a linearly drifting sampling
sequence and theta-rule radii, then compares the observed frequency of bad
feasible sets with the bound. Writes drift_soundness.csv.
"""

import argparse
import os
import time

import numpy as np

from robust_saa.distributions import DistributionSpec, make_drifting_sequence
from robust_saa.harness import RadiiRule, TrialConfig, estimate_infeasibility, write_estimate_csv
from robust_saa.saa import BiAffineConstraint, DecisionSet, ProblemInstance, RiskConfig


def random_config(rng, k, trials, seed):
    d = int(rng.integers(1, 3))
    eps = float(rng.uniform(0.1, 0.4))
    alpha = float(rng.uniform(0.0, eps / 3))
    theta = float(rng.uniform(0.1, 0.6)) * (eps - alpha)
    n_samples = int(rng.integers(20, 101))
    card = int(rng.integers(2, 51))
    if rng.random() < 0.5:
        start = DistributionSpec.uniform(np.zeros(d), np.ones(d))
    else:
        start = DistributionSpec.gaussian(np.zeros(d), float(rng.uniform(0.2, 0.6)))
    direction = rng.normal(size=d)
    drift = float(10 ** rng.uniform(-5, -3)) * direction / np.linalg.norm(direction)
    seq = make_drifting_sequence(start, drift, n_samples)
    dirs = rng.normal(size=(card, d))
    dirs = np.abs(dirs) if start.family == "uniform-box" else dirs
    points = dirs / np.linalg.norm(dirs, axis=1, keepdims=True) * rng.uniform(0.3, 2.5, (card, 1))
    inst = ProblemInstance(DecisionSet.finite(points.tolist()), BiAffineConstraint.inner(0.5, d), RiskConfig(eps, alpha))
    return TrialConfig(inst, seq, RadiiRule.from_theta(theta), trials=trials, master_seed=seed + k, name=f"drift-{k}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--configs", type=int, default=20)
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=4)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default=".")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    results = []
    t0 = time.perf_counter()
    for k in range(args.configs):
        res = estimate_infeasibility(random_config(rng, k, args.trials, 1000 * args.seed), jobs=args.jobs)
        results.append(res)
        b = res.bounds["thm3"]
        print(f"{res.name}: |X|={res.card_x} N={res.n_samples} freq={res.frequency:.5f} bound={b.clamped:.4g} "
              f"{'ok' if res.check(b) else 'FAIL'}")
    os.makedirs(args.out, exist_ok=True)
    write_estimate_csv(os.path.join(args.out, "drift_soundness.csv"), results)
    print(f"{sum(r.check(r.bounds['thm3']) for r in results)}/{len(results)} within bound, {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
