import csv
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.stats import norm as normal

from robust_saa.distributions import (
    DistributionSpec,
    SupportSet,
    VariationBudget,
    make_drifting_sequence,
    stationary_sequence,
)
from robust_saa.errors import DomainError, EmptyUncertaintySetError, SchemaError
from robust_saa.saa import (
    BiAffineConstraint,
    BlackBoxConstraint,
    DecisionSet,
    ProblemInstance,
    RiskConfig,
    SampleBatch,
    check_lipschitz,
    decision_rows,
    draw_sequence,
    empirical_violation,
    feasible_mask,
    feasible_set,
    radii_from_theta,
    robust_empirical_violation,
    robust_sup,
    robust_values,
    solve_by_enumeration,
    true_violation_probability,
    write_decision_csv,
)
from robust_saa.schemas import load_batch, load_instance

from . import oracles

# g(x, xi) = x - xi in one dimension
X_MINUS_XI = BiAffineConstraint([[0.0]], [-1.0], [1.0], 0.0)


def batch_1d(values, radii=None, **kw):
    return SampleBatch(np.array(values, dtype=float)[:, None], radii, **kw)


# ------------------------------------------------------ violation probability


def test_true_violation_uniform_cdf():
    v = true_violation_probability([0.5], DistributionSpec.uniform([0.0], [1.0]), X_MINUS_XI)
    assert v.value == pytest.approx(0.5, abs=1e-15)
    assert v.method == "exact"


def test_true_violation_dirac_indicator():
    g = BiAffineConstraint.inner(1.0, 2)
    assert true_violation_probability([1.0, 1.0], DistributionSpec.dirac([0.4, 0.7]), g).value == 1.0
    assert true_violation_probability([1.0, 1.0], DistributionSpec.dirac([0.4, 0.6]), g).value == 0.0
    assert true_violation_probability([0.5], DistributionSpec.dirac([0.2]), X_MINUS_XI).value == 1.0


def test_true_violation_discrete():
    target = DistributionSpec.discrete([[0.1], [0.5], [0.9]], [0.2, 0.3, 0.5])
    assert true_violation_probability([0.5], target, X_MINUS_XI).value == pytest.approx(0.2)


def test_true_violation_gaussian_matches_quadrature():
    g = BiAffineConstraint.inner(1.0, 2)
    target = DistributionSpec.gaussian([0.2, 0.3], 0.4)
    x = np.array([1.5, -0.7])
    # P{x . xi > 1}, integrated over xi_1 with the xi_2 tail in closed form

    def integrand(t):
        thr = (1.0 - x[0] * t) / x[1]
        tail = normal.cdf(thr, 0.3, 0.4)  # x[1] < 0 flips the inequality
        return normal.pdf(t, 0.2, 0.4) * tail

    ref, _ = integrate.quad(integrand, -6, 6, epsabs=1e-13)
    assert true_violation_probability(x, target, g).value == pytest.approx(ref, abs=1e-10)


@pytest.mark.parametrize("x", [[0.7, 0.9], [1.2, 0.3], [-0.5, 1.5], [0.0, 1.1]])
def test_true_violation_uniform_box_matches_quadrature(x):
    g = BiAffineConstraint.inner(0.6, 2)
    target = DistributionSpec.uniform([0.0, -0.5], [1.0, 1.0])
    x = np.array(x)

    def integrand(t):
        # measure of {u2 in [-0.5, 1] : x2 u2 > 0.6 - x1 t} / 1.5
        rest = 0.6 - x[0] * t
        if x[1] == 0:
            return float(rest < 0)
        cut = rest / x[1]
        lo, hi = -0.5, 1.0
        length = hi - np.clip(cut, lo, hi) if x[1] > 0 else np.clip(cut, lo, hi) - lo
        return length / 1.5

    ref, _ = integrate.quad(integrand, 0.0, 1.0, limit=200, epsabs=1e-13)
    assert true_violation_probability(x, target, g).value == pytest.approx(ref, abs=1e-9)


def test_true_violation_monotone_black_box():
    g = BlackBoxConstraint(lambda x, u: x[0] - u[0] ** 3, monotone="decreasing")
    v = true_violation_probability([0.125], DistributionSpec.uniform([0.0], [1.0]), g)
    assert v.value == pytest.approx(0.5, abs=1e-12)
    assert v.stderr == 0.0


def test_true_violation_monte_carlo_fallback():
    g = BlackBoxConstraint(lambda x, u: float(u @ u) - x[0])
    v = true_violation_probability([1.0], DistributionSpec.gaussian([0.0, 0.0], 1.0), g, draws=20_000, seed=3)
    assert v.method == "monte-carlo"
    assert 0 < v.stderr < 0.005
    assert v.value == pytest.approx(np.exp(-0.5), abs=5 * v.stderr)


# ---------------------------------------------------------- empirical rates


def test_empirical_violation_examples():
    b = batch_1d([0.2, 0.6, 0.9])
    assert empirical_violation([0.5], b, X_MINUS_XI) == Fraction(1, 3)
    assert empirical_violation([0.5], b, X_MINUS_XI, gamma=0.2) == Fraction(2, 3)
    assert empirical_violation([0.5], b, X_MINUS_XI, gamma=5.0) == 1


def test_empirical_violation_equality_is_satisfaction():
    b = batch_1d([0.5, 0.25])
    assert empirical_violation([0.5], b, X_MINUS_XI) == Fraction(1, 2)


def test_empirical_ignores_radii():
    b = batch_1d([0.2, 0.6, 0.9], radii=[0.5, 0.5, 0.5])
    assert empirical_violation([0.5], b, X_MINUS_XI) == Fraction(1, 3)


def test_robust_empirical_examples():
    b = batch_1d([0.2, 0.6, 0.9], radii=[0.2] * 3)
    assert robust_empirical_violation([0.5], b, X_MINUS_XI) == Fraction(2, 3)
    huge = batch_1d([0.2, 0.6, 0.9], radii=[1e6] * 3)
    assert robust_empirical_violation([0.5], huge, X_MINUS_XI) == 1
    g = BiAffineConstraint.inner(1.0, 2)
    b2 = SampleBatch(np.array([[-5.0, -5.0], [0.0, 0.0]]), [1e9, 1e9])
    assert robust_empirical_violation([0.3, 0.0], b2, g) == 1


@settings(max_examples=80, deadline=None)
@given(
    st.lists(st.floats(-3, 3), min_size=1, max_size=15),
    st.floats(-3, 3),
    st.floats(0, 2),
    st.sampled_from(["L1", "L2", "Linf"]),
)
def test_robust_reduces_to_classic_at_zero_radius(xis, x, gamma, norm):
    b = batch_1d(xis, radii=[0.0] * len(xis), norm=norm)
    g = BiAffineConstraint([[1.0]], [0.5], [-1.0], 0.25)
    assert robust_empirical_violation([x], b, g, gamma) == empirical_violation([x], b, g, gamma)


# -------------------------------------------------------------- robust sup


def test_robust_sup_examples():
    g = BiAffineConstraint.inner(0.0, 2)
    assert robust_sup([1.0, 0.0], [0.0, 0.0], 1.0, g, "L2") == pytest.approx(1.0)
    assert robust_sup([1.0, -2.0], [0.0, 0.0], 0.5, g, "Linf") == pytest.approx(1.5)
    assert robust_sup([1.0, -2.0], [0.0, 0.0], 0.5, g, "L1") == pytest.approx(1.0)
    assert robust_sup([1.0, -2.0], [0.3, 0.1], 0.0, g, "L2") == g([1.0, -2.0], [0.3, 0.1])


def random_biaffine(rng, n, d):
    return BiAffineConstraint(rng.normal(size=(d, n)), rng.normal(size=d), rng.normal(size=n), float(rng.normal()))


def test_robust_sup_matches_brute_force_ball():
    rng = np.random.default_rng(2024)
    for case in range(200):
        n, d = rng.integers(1, 4), rng.integers(1, 4)
        g = random_biaffine(rng, n, d)
        x, xi, r = rng.normal(size=n), rng.normal(size=d), float(rng.exponential())
        norm = ["L1", "L2", "Linf"][case % 3]
        W, S = g.coefficients(x[None, :])
        ref = oracles.brute_ball_sup(W[0], float(S[0]), xi, r, norm, rng)
        got = robust_sup(x, xi, r, g, norm)
        assert abs(got - ref) <= 1e-3 * (1 + abs(got))
        assert got >= ref - 1e-9


def cvx_box_sup(w, s, center, r, norm, lo, hi):
    cp = pytest.importorskip("cvxpy")
    u = cp.Variable(len(w))
    p = {"L1": 1, "L2": 2, "Linf": "inf"}[norm]
    prob = cp.Problem(cp.Maximize(w @ u + s), [cp.norm(u - center, p) <= r, u >= lo, u <= hi])
    prob.solve(solver="CLARABEL")
    return prob.value


@pytest.mark.parametrize("norm", ["L1", "L2", "Linf"])
def test_robust_sup_box_intersection_matches_conic_solver(norm):
    rng = np.random.default_rng({"L1": 1, "L2": 2, "Linf": 3}[norm])
    lo, hi = np.array([-1.0, -0.5, 0.0]), np.array([1.0, 1.5, 0.5])
    sup = SupportSet.box(lo, hi)
    for _ in range(40):
        g = random_biaffine(rng, 2, 3)
        x = rng.normal(size=2)
        xi = rng.uniform(lo - 0.2, hi + 0.2)
        r = float(rng.uniform(0.3, 1.5))
        try:
            got = robust_sup(x, xi, r, g, norm, "ball-intersect-support", sup)
        except EmptyUncertaintySetError:
            continue
        W, S = g.coefficients(x[None, :])
        ref = cvx_box_sup(W[0], float(S[0]), xi, r, norm, lo, hi)
        assert got == pytest.approx(ref, abs=1e-6)


def test_robust_sup_box_never_exceeds_ball_only():
    rng = np.random.default_rng(8)
    lo, hi = np.zeros(2), np.ones(2)
    for _ in range(100):
        g = random_biaffine(rng, 2, 2)
        x, xi, r = rng.normal(size=2), rng.uniform(0, 1, 2), float(rng.uniform(0, 1))
        for norm in ("L1", "L2", "Linf"):
            clipped = robust_sup(x, xi, r, g, norm, "ball-intersect-support", SupportSet.box(lo, hi))
            assert clipped <= robust_sup(x, xi, r, g, norm) + 1e-12


def test_empty_intersection_names_sample():
    g = BiAffineConstraint.inner(0.0, 1)
    b = SampleBatch(np.array([[0.5], [3.0], [0.2]]), [0.1, 0.5, 0.1], "L2", "ball-intersect-support", SupportSet.box([0], [1]))
    with pytest.raises(EmptyUncertaintySetError, match="sample 1") as info:
        robust_values(g, np.array([[1.0]]), b)
    assert info.value.index == 1


def test_black_box_sup_is_approximate_lower_estimate():
    rng = np.random.default_rng(4)
    for _ in range(30):
        g = random_biaffine(rng, 2, 2)
        bb = BlackBoxConstraint(lambda x, u, g=g: g(x, u))
        x, xi, r = rng.normal(size=2), rng.normal(size=2), float(rng.uniform(0.1, 1))
        exact = robust_sup(x, xi, r, g, "L2")
        approx = robust_sup(x, xi, r, bb, "L2")
        assert approx <= exact + 1e-12
        assert approx >= exact - 0.05 * (1 + abs(exact))
    assert not bb.exact


def test_black_box_matches_oracle_search():
    # nonlinear g: the quasi-random sup should be close to a dense random search
    bb = BlackBoxConstraint(lambda x, u: float(np.sin(3 * u[0]) + u[1] ** 2 - x[0]), inner_points=4096)
    rng = np.random.default_rng(0)
    center = np.array([0.2, -0.1])
    ref = oracles.monte_carlo_sup(lambda u: np.sin(3 * u[0]) + u[1] ** 2 - 0.5, center, 0.4, rng)
    assert robust_sup([0.5], center, 0.4, bb, "L2") == pytest.approx(ref, abs=1e-2)


# ------------------------------------------------------ feasible sets, solver


def small_instance(alpha=0.1, gamma=0.0, objective=None):
    pts = [[0.1 * k] for k in range(11)]
    return ProblemInstance(DecisionSet.finite(pts), X_MINUS_XI, RiskConfig(0.1, alpha, gamma), objective)


def test_feasible_set_alpha_one_is_everything():
    inst = small_instance(alpha=1.0)
    b = batch_1d([0.0, 0.1, 0.2])
    np.testing.assert_array_equal(feasible_set(inst, b), inst.decision_set.points)


def test_feasible_set_scenario_case():
    inst = small_instance(alpha=0.0)
    b = batch_1d([0.35, 0.8, 0.5])
    # x - xi <= 0 for every sample means x <= 0.35
    np.testing.assert_allclose(feasible_set(inst, b)[:, 0], [0.0, 0.1, 0.2, 0.3])


def test_feasible_comparison_is_exact_at_boundary():
    # 0.29 * 100 floats to 28.999999999999996; a count of 29 must stay feasible
    inst = ProblemInstance(DecisionSet.finite([[0.5]]), X_MINUS_XI, RiskConfig(0.5, 0.29))
    b = batch_1d([0.0] * 29 + [1.0] * 71)
    assert empirical_violation([0.5], b, X_MINUS_XI) == Fraction(29, 100)
    assert feasible_mask(inst, b).tolist() == [True]


@st.composite
def random_problems(draw):
    seed = draw(st.integers(0, 10**6))
    rng = np.random.default_rng(seed)
    n_pts, n = draw(st.integers(1, 12)), draw(st.integers(1, 25))
    g = random_biaffine(rng, 2, 2)
    xs = rng.normal(size=(n_pts, 2))
    xs = np.unique(xs, axis=0)
    pts = rng.normal(size=(n, 2))
    radii = rng.exponential(0.3, size=n)
    return g, xs, pts, radii, rng


@settings(max_examples=60, deadline=None)
@given(random_problems(), st.floats(0, 1), st.floats(0, 1), st.sampled_from(["L1", "L2", "Linf"]))
def test_feasible_set_monotonicity(problem, alpha, gamma, norm):
    g, xs, pts, radii, rng = problem
    inst = ProblemInstance(DecisionSet.finite(xs), g, RiskConfig(0.2, alpha, gamma))
    b = SampleBatch(pts, radii, norm)
    base = feasible_mask(inst, b)
    bigger_r = feasible_mask(inst, b.with_radii(radii + rng.exponential(0.2, size=len(radii))))
    assert np.all(bigger_r <= base)
    assert np.all(feasible_mask(inst, b, gamma + 0.3) <= base)
    looser = ProblemInstance(inst.decision_set, g, RiskConfig(0.2, min(1.0, alpha + 0.2), gamma))
    assert np.all(base <= feasible_mask(looser, b))


@settings(max_examples=60, deadline=None)
@given(random_problems(), st.floats(0, 0.5), st.floats(0, 0.3), st.sampled_from(["L1", "L2", "Linf"]))
def test_containment_of_robustly_feasible_points(problem, alpha, gamma, norm):
    # points with g(x, u) + gamma <= 0 on the whole support box are always feasible
    g, xs, _, radii, rng = problem
    lo, hi = np.array([-1.0, -1.0]), np.array([1.0, 1.0])
    pts = rng.uniform(lo, hi, size=(len(radii), 2))
    inst = ProblemInstance(DecisionSet.finite(xs), g, RiskConfig(0.2, alpha, gamma))
    b = SampleBatch(pts, radii, norm, "ball-intersect-support", SupportSet.box(lo, hi))
    corners = np.array([[a, c] for a in lo[:1].tolist() + hi[:1].tolist() for c in [lo[1], hi[1]]])
    W, S = g.coefficients(xs)
    worst = (W @ corners.T).max(axis=1) + S
    mask = feasible_mask(inst, b)
    assert np.all(mask[worst + gamma <= 0])


def test_solve_by_enumeration_cases():
    inst = small_instance(alpha=0.0, objective=[-1.0])
    b = batch_1d([0.35, 0.8])
    sol = solve_by_enumeration(inst, b)
    assert sol.feasible and sol.point.tolist() == pytest.approx([0.3]) and sol.objective == pytest.approx(-0.3)
    infeasible = solve_by_enumeration(inst, batch_1d([-1.0]))
    assert not infeasible.feasible and infeasible.point is None


def test_solve_single_feasible_point():
    inst = small_instance(alpha=0.0, objective=[1.0])
    sol = solve_by_enumeration(inst, batch_1d([0.0]))
    assert sol.point.tolist() == [0.0]


def test_solve_tie_break_lexicographic():
    g = BiAffineConstraint.inner(10.0, 2)
    inst = ProblemInstance(DecisionSet.finite([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]]), g, RiskConfig(0.1, 0.0), [1.0, 1.0])
    sol = solve_by_enumeration(inst, SampleBatch(np.zeros((3, 2))))
    assert sol.point.tolist() == [0.0, 1.0]


def test_decision_set_rules():
    with pytest.raises(DomainError):
        DecisionSet.finite([[0.0], [0.0]])
    with pytest.raises(DomainError):
        DecisionSet.finite([])
    box = DecisionSet.box([0.0, -1.0], [2.0, 0.5])
    assert box.diameter == 2.0 and box.dim == 2 and box.cardinality is None
    grid = box.grid(3)
    assert grid.cardinality == 9 and grid.diameter == 2.0


# ------------------------------------------------------------------ radii


def test_radii_from_theta_examples():
    r = radii_from_theta(VariationBudget.linear(0.01), 10, 0.02)
    assert r[0] == pytest.approx(5.0)
    assert r[-1] == pytest.approx(0.01 / 0.02)
    assert np.all(np.diff(r) <= 0)
    np.testing.assert_array_equal(radii_from_theta(VariationBudget.zero(), 10, 0.02), np.zeros(10))
    with pytest.raises(DomainError):
        radii_from_theta(VariationBudget.linear(0.01), 10, 0.0)


# --------------------------------------------------------------- Lipschitz


def test_check_lipschitz():
    g = BlackBoxConstraint(lambda x, u: float(np.abs(u).sum() * x[0]), lipschitz=2.0)
    xs = np.linspace(-1, 1, 21)[:, None]
    xis = np.array([[0.5, 0.5], [1.0, 1.0], [-0.2, 0.1]])
    assert check_lipschitz(g, 2.0, xs, xis) <= 2.0 + 1e-12
    with pytest.raises(DomainError):
        check_lipschitz(g, 1.5, xs, xis)


# ------------------------------------------------------------ serialization


def test_instance_json_round_trip():
    inst = ProblemInstance(
        DecisionSet.finite([[0.0, 1.0], [1.0, 0.5]]),
        BiAffineConstraint([[1.0, 0.0], [0.5, 2.0]], [0.1, 0.2], [0.3, -0.4], -1.0, lipschitz=3.0),
        RiskConfig(0.1, 0.05, 0.01, 0.1, 0.02),
        [1.0, -1.0],
    )
    back = load_instance(json.loads(json.dumps(inst.to_dict())))
    assert back.to_dict() == inst.to_dict()
    with pytest.raises(SchemaError, match="risk"):
        load_instance({**inst.to_dict(), "risk": {"epsilon": 0.1}})


def test_batch_json_round_trip():
    b = SampleBatch(np.array([[0.1, 0.2], [0.3, 0.4]]), [0.5, 0.0], "L1", "ball-intersect-support", SupportSet.box([0, 0], [1, 1]))
    back = load_batch(json.loads(json.dumps(b.to_dict())))
    assert back.to_dict() == b.to_dict()
    with pytest.raises(SchemaError, match="radii"):
        load_batch({"points": [[0.0]], "radii": [-1.0]})


def test_decision_csv(tmp_path):
    inst = small_instance(alpha=0.0, objective=[2.0])
    b = batch_1d([0.35, 0.8], radii=[0.1, 0.0])
    rows = decision_rows(inst, b)
    path = tmp_path / "decisions.csv"
    write_decision_csv(path, rows)
    with open(path) as fh:
        got = list(csv.DictReader(fh))
    assert list(got[0]) == ["x0", "v_hat", "v_hat_robust", "objective", "feasible", "approximate"]
    feas = [float(r["x0"]) for r in got if r["feasible"] == "1"]
    assert feas == pytest.approx([0.0, 0.1, 0.2])


# ---------------------------------------------------------------- drawing


def test_draw_sequence_dirac_and_determinism():
    seq = stationary_sequence(DistributionSpec.dirac([0.3, -1.0]), 7)
    assert draw_sequence(seq, 1).points.tolist() == [[0.3, -1.0]] * 7
    drift = make_drifting_sequence(DistributionSpec.uniform([0.0], [1.0]), 0.01, 50)
    a, b = draw_sequence(drift, 42), draw_sequence(drift, 42)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, draw_sequence(drift, 43).points)
    lo = 0.01 * np.arange(50)[:, None]
    assert np.all((a.points >= lo) & (a.points <= lo + 1))


def test_draw_sequence_points_depend_only_on_index():
    start = DistributionSpec.gaussian([0.0, 0.0], 1.0)
    short = draw_sequence(make_drifting_sequence(start, [0.1, 0.0], 5), 9).points
    long = draw_sequence(make_drifting_sequence(start, [0.1, 0.0], 12), 9).points
    assert np.array_equal(short, long[:5])


def test_draw_sequence_uniform_mean():
    pts = draw_sequence(stationary_sequence(DistributionSpec.uniform([0.0], [1.0]), 10_000), 0, radii=np.full(10_000, 0.1)).points
    # 5 standard errors of the mean of U[0, 1] at N = 10^4 is about 0.0144
    assert abs(pts.mean() - 0.5) < 0.02
