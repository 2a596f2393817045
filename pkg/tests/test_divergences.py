import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chainbounds.distributions import DiscreteDistribution, deterministic_channel
from chainbounds.divergences import (
    CHI2_SQRT,
    KL,
    TV2,
    W1,
    DivergenceKind,
    POWER,
    chi2,
    kl,
    kl_uniform_intervals,
    lautum_information,
    mutual_information,
    power_divergence,
    sg_parameter_bounded,
    sg_parameter_numeric,
    tv,
    w1_1d,
    w1_discrete,
    w1_uniform_intervals,
)
from chainbounds.errors import DivergenceError
from chainbounds.toy_models import w1_point_to_uniform

from conftest import dist, joint_matrices, make_channel, prob_vectors


def _vertex_ot(a, b, cost):
    """Brute-force OT on a 3x3 grid: minimum cost over basic feasible solutions."""
    n = len(a)
    cells = list(itertools.product(range(n), range(n)))
    rows = []
    for i in range(n):
        rows.append([1.0 if c[0] == i else 0.0 for c in cells])
    for j in range(n):
        rows.append([1.0 if c[1] == j else 0.0 for c in cells])
    A = np.asarray(rows)
    rhs = np.concatenate([a, b])
    best = math.inf
    for basis in itertools.combinations(range(len(cells)), 2 * n - 1):
        sub = A[:, basis]
        x, *_ = np.linalg.lstsq(sub, rhs, rcond=None)
        if np.allclose(sub @ x, rhs, atol=1e-12) and x.min() >= -1e-12:
            best = min(best, sum(x[t] * cost[cells[c]] for t, c in enumerate(basis)))
    return best


@pytest.mark.parametrize("seed", range(5))
def test_w1_discrete_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    a = rng.dirichlet(np.ones(3))
    b = rng.dirichlet(np.ones(3))
    xa = rng.normal(size=(3, 2))
    xb = rng.normal(size=(3, 2))
    cost = np.linalg.norm(xa[:, None, :] - xb[None, :, :], axis=2)
    mu = DiscreteDistribution(["p", "q", "r"], a, xa)
    nu = DiscreteDistribution(["u", "v", "w"], b, xb)
    assert w1_discrete(mu, nu) == pytest.approx(_vertex_ot(a, b, cost), abs=1e-10)


def test_w1_1d_matches_lp(rng):
    for _ in range(20):
        n1, n2 = rng.integers(1, 40, size=2)
        mu = dist(rng.dirichlet(np.ones(n1)), rng.normal(size=(n1, 1)))
        nu = dist(rng.dirichlet(np.ones(n2)), rng.normal(size=(n2, 1)))
        assert w1_1d(mu, nu) == pytest.approx(w1_discrete(mu, nu), abs=1e-8)


def test_w1_two_points():
    mu = dist([1.0], [[0.0]])
    nu = dist([0.5, 0.5], [[-1.0], [3.0]])
    assert w1_1d(mu, nu) == pytest.approx(2.0)
    assert W1(mu, nu) == pytest.approx(2.0)


def test_w1_needs_coords():
    with pytest.raises(DivergenceError) as info:
        w1_1d(dist([1.0]), dist([1.0]))
    assert info.value.code == "MISSING_COORDS"


@pytest.mark.parametrize("inner, outer", [((0.0, 0.5), (0.0, 1.0)), ((0.2, 0.3), (-1.0, 2.0)), ((0.25, 0.75), (0.0, 1.0))])
def test_interval_closed_form_against_fine_grid(inner, outer):
    n = 20000
    def uniform(lo, hi, n):
        x = lo + (np.arange(n) + 0.5) * (hi - lo) / n
        return dist(np.full(n, 1.0 / n), x[:, None])
    fine = w1_1d(uniform(*inner, n), uniform(*outer, 2 * n))
    assert w1_uniform_intervals(inner, outer) == pytest.approx(fine, abs=1e-4)


@pytest.mark.parametrize("w", [0.0, 0.05, -0.1, 0.125])
def test_dirac_to_uniform(w):
    theta = 0.125
    expected = theta / 2 * (1 + w**2 / theta**2)
    assert w1_uniform_intervals((w, w), (-theta, theta)) == pytest.approx(expected)
    assert w1_point_to_uniform(w, -theta, theta) == pytest.approx(expected)


def test_interval_errors():
    with pytest.raises(DivergenceError) as info:
        w1_uniform_intervals((0.0, 2.0), (0.0, 1.0))
    assert info.value.code == "NOT_NESTED"
    with pytest.raises(DivergenceError) as info:
        kl_uniform_intervals((0.0, 0.0), (0.0, 1.0))
    assert info.value.code == "DEGENERATE_INTERVAL"


def test_kl_uniform_intervals():
    assert kl_uniform_intervals((0.0, 0.25), (0.0, 1.0)) == pytest.approx(math.log(4))
    assert kl_uniform_intervals((0.5, 1.5), (0.0, 1.0)) == math.inf


def test_small_values():
    nu = dist([0.5, 0.5])
    mu = dist([0.25, 0.75])
    assert kl(nu, mu) == pytest.approx(0.5 * math.log(2) + 0.5 * math.log(2 / 3))
    assert chi2(nu, mu) == pytest.approx(0.25**2 / 0.25 + 0.25**2 / 0.75)
    assert tv(nu, mu) == pytest.approx(0.25)
    assert kl(dist([0.5, 0.5]), dist([1.0, 0.0])) == math.inf


def test_power_two_is_chi2():
    nu = dist([0.2, 0.5, 0.3])
    mu = dist([0.4, 0.4, 0.2])
    assert power_divergence(nu, mu, 2.0) == pytest.approx(chi2(nu, mu))


@pytest.mark.parametrize("n", [4, 16, 64])
def test_deterministic_channel_information(n):
    p = DiscreteDistribution.from_points(np.arange(n, dtype=float)[:, None], np.full(n, 1.0 / n))
    ch = deterministic_channel(p)
    assert mutual_information(ch) == pytest.approx(math.log(n))
    assert lautum_information(ch) == math.inf


def test_product_channel_information_zero():
    j = np.outer([0.2, 0.8], [0.1, 0.3, 0.6])
    ch = make_channel(j)
    assert mutual_information(ch) == pytest.approx(0.0, abs=1e-15)
    assert lautum_information(ch) == pytest.approx(0.0, abs=1e-15)


def test_sg_parameters():
    assert sg_parameter_bounded(-1, 1) == 1.0
    assert sg_parameter_bounded(2.0, 2.0) == 0.0
    assert sg_parameter_bounded(0, 3) == 1.5
    with pytest.raises(DivergenceError):
        sg_parameter_bounded(1, 0)
    rademacher = dist([0.5, 0.5])
    grid = np.linspace(-1, 1, 201)
    s = sg_parameter_numeric(rademacher, [-1.0, 1.0], grid)
    assert 0.999 < s <= 1.0
    with pytest.raises(DivergenceError) as info:
        sg_parameter_numeric(rademacher, [-1.0, 1.0], [0.0])
    assert info.value.code == "EMPTY_GRID"


def test_sg_numeric_gaussian():
    x = np.linspace(-12, 12, 4001)
    p = np.exp(-0.5 * (x / 1.5) ** 2)
    g = DiscreteDistribution.from_points(x[:, None], p / p.sum())
    assert sg_parameter_numeric(g, x, np.linspace(-3, 3, 61)) == pytest.approx(1.5, rel=1e-3)


def test_kind_parse_and_errors():
    assert DivergenceKind.parse("w1") == W1
    assert DivergenceKind.parse("power:3") == POWER(3.0)
    assert str(POWER(3.0)) == "POWER:3"
    with pytest.raises(DivergenceError) as info:
        DivergenceKind.parse("hellinger")
    assert info.value.code == "UNKNOWN_DIVERGENCE"
    with pytest.raises(DivergenceError) as info:
        POWER(1.0)
    assert info.value.code == "BAD_EXPONENT"
    assert KL.convex and not DivergenceKind("SQRT2KL").convex


pairs = st.integers(2, 6).flatmap(lambda n: st.tuples(prob_vectors(n, n, positive=False), prob_vectors(n, n)))


@settings(max_examples=100, deadline=None)
@given(pairs)
def test_nonnegative_and_pinsker(pair):
    p, q = pair
    nu, mu = dist(p), dist(q)
    for kind in (KL, CHI2_SQRT, TV2, POWER(3.0)):
        assert kind(mu, nu) >= -1e-12
    assert tv(nu, mu) <= math.sqrt(kl(nu, mu) / 2) + 1e-12


@settings(max_examples=50, deadline=None)
@given(prob_vectors(2, 6))
def test_zero_at_equality(p):
    d = dist(p)
    assert kl(d, d) == pytest.approx(0.0, abs=1e-14)
    assert tv(d, d) == 0.0
    assert chi2(d, d) == pytest.approx(0.0, abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(joint_matrices(max_w=6), st.integers(1, 3))
def test_data_processing_on_merge(j, n_groups):
    ch = make_channel(j)
    keys = np.arange(len(ch.w_labels)) % n_groups
    labels = [f"g{i}" for i in range(n_groups)]
    merged = ch.merge_w(keys, labels)
    assert mutual_information(merged) <= mutual_information(ch) + 1e-12
