"""Run the theta-rule robust SAA at the Hoeffding sample size and report how
often the feasible set keeps a point that violates the chance constraint.

    python3 scripts/sample_size_check.py --card 20 --delta 0.1 --trials 10000
"""

import argparse

from robust_saa.distributions import DistributionSpec, make_drifting_sequence
from robust_saa.harness import verify_corollary4
from robust_saa.saa import BiAffineConstraint, DecisionSet, ProblemInstance, RiskConfig


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--card", type=int, default=20)
    ap.add_argument("--delta", type=float, default=0.1)
    ap.add_argument("--epsilon", type=float, default=0.15)
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--theta", type=float, default=0.02)
    ap.add_argument("--drift", type=float, default=1e-4, help="per-step shift of the sampling distribution")
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    # g(x, u) = x u - 0.8 with u ~ U[0, 1]: points above 0.8 / (1 - epsilon) violate
    points = [[1.0 + 0.4 * k / max(args.card - 1, 1)] for k in range(args.card)]
    inst = ProblemInstance(
        DecisionSet.finite(points),
        BiAffineConstraint.inner(0.8, 1),
        RiskConfig(args.epsilon, args.alpha, delta=args.delta, theta=args.theta),
    )
    target = DistributionSpec.uniform([0.0], [1.0])
    rep = verify_corollary4(
        inst,
        lambda n: make_drifting_sequence(target.translate([-args.drift * n]), args.drift, n),
        trials=args.trials,
        master_seed=args.seed,
        jobs=args.jobs,
    )
    est = rep.estimate
    print(f"N = {rep.n_samples}, Hoeffding bound {rep.hoeffding_bound:.4g}, exact bound {est.bounds['thm3'].clamped:.4g}")
    print(f"bad points {est.n_bad_points}, frequency {est.frequency:.5f} "
          f"[{est.wilson[0]:.5f}, {est.wilson[1]:.5f}], delta {rep.delta}: {'ok' if rep.passed else 'FAIL'}")


if __name__ == "__main__":
    main()
