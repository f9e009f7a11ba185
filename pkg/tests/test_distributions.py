import itertools
import json

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import stats

from robust_saa.distributions import (
    DistributionSequence,
    DistributionSpec,
    SupportSet,
    VariationBudget,
    budget_eval,
    draw_points,
    dual_norm_of,
    empirical_w1,
    make_drifting_sequence,
    norm_of,
    stationary_sequence,
    wasserstein_distance,
)
from robust_saa.errors import BudgetViolationError, DomainError, NoClosedFormError
from robust_saa.schemas import load_sequence

finite = st.floats(-5, 5, allow_nan=False)
scale = st.floats(0.05, 3)


@st.composite
def specs_1d(draw):
    kind = draw(st.sampled_from(["dirac", "uniform", "gaussian", "discrete"]))
    if kind == "dirac":
        return DistributionSpec.dirac([draw(finite)])
    if kind == "uniform":
        lo = draw(finite)
        return DistributionSpec.uniform([lo], [lo + draw(scale)])
    if kind == "gaussian":
        return DistributionSpec.gaussian([draw(finite)], draw(scale))
    k = draw(st.integers(1, 4))
    atoms = draw(st.lists(finite, min_size=k, max_size=k, unique=True))
    w = np.array(draw(st.lists(st.floats(0.1, 1), min_size=k, max_size=k)))
    w = w / w.sum()
    w[-1] = 1.0 - w[:-1].sum()
    return DistributionSpec.discrete([[a] for a in atoms], w.tolist())


def mp_quantile(spec: DistributionSpec):
    # independent quantile functions in 50-digit arithmetic
    if spec.family == "dirac":
        a = mpmath.mpf(spec.location[0])
        return lambda t: a
    if spec.family == "uniform-box":
        lo, hi = mpmath.mpf(spec.lower[0]), mpmath.mpf(spec.upper[0])
        return lambda t: lo + (hi - lo) * t
    if spec.family == "gaussian-isotropic":
        mu, sd = mpmath.mpf(spec.location[0]), mpmath.mpf(spec.std)
        return lambda t: mu + sd * mpmath.sqrt(2) * mpmath.erfinv(2 * t - 1)
    order = np.argsort([a[0] for a in spec.atoms])
    atoms = [mpmath.mpf(spec.atoms[i][0]) for i in order]
    cum = np.cumsum([spec.weights[i] for i in order])

    def q(t):
        return atoms[min(int(np.searchsorted(cum, float(t))), len(atoms) - 1)]

    return q


def canonical(spec: DistributionSpec):
    # point masses and atom orderings name the same measure several ways
    if spec.family == "dirac":
        return ("atoms", ((spec.location, 1.0),))
    if spec.family == "discrete-weighted":
        return ("atoms", tuple(sorted(zip(spec.atoms, spec.weights))))
    return spec


def mp_w1_quantile(p, q) -> float:
    """Integral of |F_p^-1 - F_q^-1| over (0, 1), split at every kink."""
    qp, qq = mp_quantile(p), mp_quantile(q)

    def diff(t):
        return qp(t) - qq(t)

    with mpmath.workdps(30):
        cuts = set()
        for spec in (p, q):
            if spec.family == "discrete-weighted":
                order = np.argsort([a[0] for a in spec.atoms])
                cuts.update(float(c) for c in np.cumsum(np.array(spec.weights)[order])[:-1])
        grid = [mpmath.mpf(t) for t in np.linspace(0, 1, 2001)[1:-1]]
        vals = [diff(t) for t in grid]
        for a, b, fa, fb in zip(grid, grid[1:], vals, vals[1:]):
            if fa * fb < 0:
                lo, hi = a, b
                for _ in range(100):
                    mid = (lo + hi) / 2
                    if diff(mid) * fa > 0:
                        lo = mid
                    else:
                        hi = mid
                cuts.add(lo)
        points = [mpmath.mpf(0)] + sorted(mpmath.mpf(c) for c in cuts) + [mpmath.mpf(1)]
        return float(mpmath.quad(lambda t: abs(diff(t)), points))


# ------------------------------------------------------------------- types


def test_support_validation():
    with pytest.raises(DomainError):
        SupportSet.box([1.0], [0.0])
    assert SupportSet.box([0, 0], [1, 1]).contains(np.array([[0.5, 1.0]]))
    assert not SupportSet.box([0, 0], [1, 1]).contains(np.array([[0.5, 1.1]]))


def test_spec_validation():
    with pytest.raises(DomainError):
        DistributionSpec.gaussian([0.0], 1.0, SupportSet.box([-1], [1]))
    with pytest.raises(DomainError):
        DistributionSpec.discrete([[0.0], [1.0]], [0.5, 0.6])
    with pytest.raises(DomainError):
        DistributionSpec.uniform([0.0], [2.0], SupportSet.box([0], [1]))
    with pytest.raises(DomainError):
        DistributionSpec.gaussian([0.0], 0.0)


# ------------------------------------------------------------- Wasserstein


def test_w1_dirac_pair():
    a, b = DistributionSpec.dirac([1.0, 2.0]), DistributionSpec.dirac([4.0, -2.0])
    assert wasserstein_distance(a, b, "L2") == pytest.approx(5.0)
    assert wasserstein_distance(a, b, "L1") == pytest.approx(7.0)
    assert wasserstein_distance(a, b, "Linf") == pytest.approx(4.0)


def test_w1_uniform_translation():
    p = DistributionSpec.uniform([0.0], [1.0])
    q = DistributionSpec.uniform([0.3], [1.3])
    assert wasserstein_distance(p, q, "L1") == pytest.approx(0.3, abs=1e-12)


def test_w1_gaussian_translation():
    p, q = DistributionSpec.gaussian([0.0], 1.0), DistributionSpec.gaussian([2.0], 1.0)
    assert wasserstein_distance(p, q) == pytest.approx(2.0, abs=1e-12)


def test_w1_translation_in_higher_dimension_uses_norm():
    p = DistributionSpec.uniform([0.0, 0.0, 0.0], [1.0, 2.0, 1.0])
    q = p.translate([0.1, -0.2, 0.2])
    assert wasserstein_distance(p, q, "L2") == pytest.approx(0.3, abs=1e-12)
    assert wasserstein_distance(p, q, "L1") == pytest.approx(0.5, abs=1e-12)
    assert wasserstein_distance(p, q, "Linf") == pytest.approx(0.2, abs=1e-12)


def test_w1_unsupported_pair():
    p = DistributionSpec.gaussian([0.0, 0.0], 1.0)
    q = DistributionSpec.uniform([0.0, 0.0], [1.0, 1.0])
    with pytest.raises(NoClosedFormError):
        wasserstein_distance(p, q)
    with pytest.raises(NoClosedFormError):
        wasserstein_distance(p, DistributionSpec.gaussian([0.0, 0.0], 2.0))


@pytest.mark.parametrize(
    "p,q",
    [
        (DistributionSpec.uniform([0.0], [1.0]), DistributionSpec.gaussian([0.2], 0.5)),
        (DistributionSpec.gaussian([0.0], 1.0), DistributionSpec.gaussian([0.5], 2.0)),
        (DistributionSpec.uniform([0.0], [1.0]), DistributionSpec.uniform([0.5], [3.0])),
        (DistributionSpec.dirac([0.7]), DistributionSpec.gaussian([0.0], 1.5)),
        (DistributionSpec.discrete([[0.0], [2.0]], [0.3, 0.7]), DistributionSpec.uniform([-1.0], [1.0])),
        (DistributionSpec.discrete([[0.0], [2.0]], [0.3, 0.7]), DistributionSpec.gaussian([1.0], 0.4)),
    ],
)
def test_w1_1d_matches_quantile_integral(p, q):
    assert wasserstein_distance(p, q) == pytest.approx(mp_w1_quantile(p, q), abs=1e-9)


def test_w1_discrete_1d_matches_scipy():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a, b = rng.normal(size=5), rng.normal(size=7)
        wa, wb = rng.dirichlet(np.ones(5)), rng.dirichlet(np.ones(7))
        p = DistributionSpec.discrete(a[:, None], wa / wa.sum())
        q = DistributionSpec.discrete(b[:, None], wb / wb.sum())
        ref = stats.wasserstein_distance(a, b, wa, wb)
        assert wasserstein_distance(p, q) == pytest.approx(ref, abs=1e-10)


@pytest.mark.parametrize("norm", ["L1", "L2", "Linf"])
def test_w1_discrete_multid_matches_assignment_enumeration(norm):
    # equal uniform weights: optimal transport is an assignment
    rng = np.random.default_rng(11)
    for _ in range(5):
        a, b = rng.normal(size=(5, 2)), rng.normal(size=(5, 2))
        w = [0.2] * 5
        best = min(
            np.mean([norm_of(a[i] - b[j], norm) for i, j in enumerate(perm)])
            for perm in itertools.permutations(range(5))
        )
        got = wasserstein_distance(DistributionSpec.discrete(a, w), DistributionSpec.discrete(b, w), norm)
        assert got == pytest.approx(best, abs=1e-8)


@settings(max_examples=60, deadline=None)
@given(specs_1d(), specs_1d())
def test_w1_symmetric_nonnegative(p, q):
    d1, d2 = wasserstein_distance(p, q), wasserstein_distance(q, p)
    assert d1 >= 0
    assert d1 == pytest.approx(d2, abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(specs_1d())
def test_w1_zero_on_identical(p):
    assert wasserstein_distance(p, p) == pytest.approx(0.0, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(specs_1d(), specs_1d())
def test_w1_positive_on_distinct(p, q):
    assume(canonical(p) != canonical(q))
    assert wasserstein_distance(p, q) > 0


@settings(max_examples=60, deadline=None)
@given(specs_1d(), specs_1d(), specs_1d())
def test_w1_triangle_inequality(p, q, r):
    assert wasserstein_distance(p, r) <= wasserstein_distance(p, q) + wasserstein_distance(q, r) + 1e-8


def test_empirical_w1_converges():
    rng = np.random.default_rng(0)
    spec = DistributionSpec.uniform([0.0], [1.0])
    assert empirical_w1(spec.sample(rng, 10**5), spec) <= 0.01


def test_dual_norms():
    v = np.array([1.0, -2.0, 2.0])
    assert dual_norm_of(v, "L1") == pytest.approx(2.0)
    assert dual_norm_of(v, "Linf") == pytest.approx(5.0)
    assert dual_norm_of(v, "L2") == pytest.approx(3.0)


# ------------------------------------------------------------------ budgets


def test_budget_examples():
    assert budget_eval(VariationBudget.linear(0.01), 7) == pytest.approx(0.07)
    step = VariationBudget.step([(3, 0.5)])
    assert budget_eval(step, 2) == 0.0
    assert budget_eval(step, 5) == 0.5
    for b in (VariationBudget.linear(0.3), step, VariationBudget.tabulated([0, 0.1, 0.4]), VariationBudget.zero()):
        assert budget_eval(b, 0) == 0.0


def test_budget_table_no_extrapolation():
    b = VariationBudget.tabulated([0.0, 0.1, 0.2])
    assert budget_eval(b, 2) == 0.2
    with pytest.raises(DomainError):
        budget_eval(b, 3)


def test_budget_monotone_enforced():
    with pytest.raises(DomainError):
        VariationBudget.tabulated([0.0, 0.3, 0.2])
    with pytest.raises(DomainError):
        VariationBudget.tabulated([0.1, 0.3])
    with pytest.raises(DomainError):
        VariationBudget.linear(-0.1)
    with pytest.raises(DomainError):
        VariationBudget.step([(2, -0.5)])
    with pytest.raises(DomainError):
        budget_eval(VariationBudget.linear(0.1), -1)


# ---------------------------------------------------------------- sequences


def test_drift_zero_is_stationary():
    seq = make_drifting_sequence(DistributionSpec.gaussian([0.0], 1.0), 0.0, 20)
    assert seq.budget.is_zero(20)
    assert all(s == seq.specs[0] for s in seq.specs)


def test_drift_gaussian_budget_tight():
    seq = make_drifting_sequence(DistributionSpec.gaussian([0.0], 1.0), 0.01, 30)
    for i in range(30 - 10):
        assert wasserstein_distance(seq.specs[i], seq.specs[i + 10]) == pytest.approx(0.1, abs=1e-12)
    assert budget_eval(seq.budget, 10) == pytest.approx(0.1)


def test_drift_dirac_target():
    a, v = np.array([1.0, -1.0]), np.array([0.25, 0.5])
    seq = make_drifting_sequence(DistributionSpec.dirac(a), v, 12)
    np.testing.assert_allclose(seq.target.location, a + 12 * v, atol=1e-12)


def test_drift_unsupported_family():
    with pytest.raises(DomainError):
        make_drifting_sequence(DistributionSpec.discrete([[0.0], [1.0]], [0.5, 0.5]), 0.1, 5)


def test_budget_violation_rejected_at_construction():
    seq = make_drifting_sequence(DistributionSpec.uniform([0.0], [1.0]), 0.01, 10)
    with pytest.raises(BudgetViolationError):
        DistributionSequence(seq.specs, VariationBudget.linear(0.005), "L2")
    # non-translation families take the pairwise route
    specs = [DistributionSpec.uniform([0.0], [1.0 + 0.1 * i]) for i in range(4)]
    with pytest.raises(BudgetViolationError):
        DistributionSequence(tuple(specs), VariationBudget.linear(0.01))
    DistributionSequence(tuple(specs), VariationBudget.linear(0.05))


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(-0.05, 0.05), min_size=2, max_size=2),
    st.integers(1, 25),
    st.sampled_from(["L1", "L2", "Linf"]),
    st.sampled_from(["dirac", "uniform", "gaussian"]),
)
def test_sequence_respects_budget_everywhere(drift, n, norm, family):
    start = {
        "dirac": DistributionSpec.dirac([0.0, 0.0]),
        "uniform": DistributionSpec.uniform([0.0, 0.0], [1.0, 0.5]),
        "gaussian": DistributionSpec.gaussian([0.0, 1.0], 0.7),
    }[family]
    seq = make_drifting_sequence(start, drift, n, norm)
    for i in range(n + 1):
        for k in range(n + 1 - i):
            w = wasserstein_distance(seq.specs[i], seq.specs[i + k], norm)
            assert w <= budget_eval(seq.budget, k) + 1e-9


def test_draw_dirac_constant():
    seq = stationary_sequence(DistributionSpec.dirac([0.3, 0.4]), 15)
    pts = draw_points(seq, np.random.default_rng(1))
    np.testing.assert_array_equal(pts, np.tile([0.3, 0.4], (15, 1)))


def test_draw_deterministic_given_seed():
    seq = make_drifting_sequence(DistributionSpec.gaussian([0.0, 0.0], 1.0), [0.01, 0.0], 50)
    a = draw_points(seq, np.random.default_rng(42))
    b = draw_points(seq, np.random.default_rng(42))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, draw_points(seq, np.random.default_rng(43)))


def test_draw_uniform_mean_and_support():
    seq = stationary_sequence(DistributionSpec.uniform([0.0], [1.0], SupportSet.box([0.0], [1.0])), 10**4)
    pts = draw_points(seq, np.random.default_rng(9))
    assert abs(pts.mean() - 0.5) < 0.02
    assert seq.target.support.contains(pts)


def test_draw_follows_each_distribution():
    # point i comes from P_i: the drift is visible in the sample means
    seq = make_drifting_sequence(DistributionSpec.dirac([0.0]), 1.0, 5)
    pts = draw_points(seq, np.random.default_rng(0))
    np.testing.assert_allclose(pts[:, 0], [0, 1, 2, 3, 4])


def test_nontranslation_sequence_draws():
    specs = (
        DistributionSpec.uniform([0.0], [1.0]),
        DistributionSpec.discrete([[0.5]], [1.0]),
        DistributionSpec.uniform([0.0], [1.0]),
    )
    seq = DistributionSequence(specs, VariationBudget.linear(0.25))
    pts = draw_points(seq, np.random.default_rng(5))
    assert pts.shape == (2, 1)
    assert pts[1, 0] == 0.5


def test_sequence_json_round_trip():
    seq = make_drifting_sequence(DistributionSpec.uniform([0.0, 0.0], [1.0, 1.0]), [0.01, 0.02], 6, "Linf")
    doc = json.loads(json.dumps(seq.to_dict()))
    back = load_sequence(doc)
    assert back.specs == seq.specs
    assert back.budget == seq.budget
    assert back.norm == "Linf"


def test_l2_norm_tiny_entries_do_not_underflow():
    v = np.array([3e-200, 4e-200])
    assert norm_of(v, "L2") == pytest.approx(5e-200, rel=1e-15)
    assert wasserstein_distance(DistributionSpec.dirac([0.0]), DistributionSpec.dirac([2.2e-234])) == 2.2e-234
