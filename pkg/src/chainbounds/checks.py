"""Randomised property suites behind ``chainbounds check``.

Each suite returns a :class:`SuiteResult` made of named checks with case
counts and a few counterexamples. Suites are deterministic given ``seed``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .distributions import DiscreteDistribution, JointChannel
from .divergences import (
    CHI2_SQRT,
    KL,
    POWER,
    TV2,
    W1,
    chi2,
    kl,
    mutual_information,
    power_divergence,
    sg_parameter_bounded,
    tv,
    w1_1d,
    w1_discrete,
    w1_uniform_intervals,
)
from .engine import BoundSpec, expected_divergence
from .nets import (
    build_circle_nets,
    build_dyadic_box_nets,
    build_nested_dyadic_nets,
    check_net_axioms,
    coarsen_channel,
)

SUITES = ("nets", "divergences", "monotonicity", "pinsker", "t1", "regularity")
MAX_EXAMPLES = 5


@dataclass
class CheckResult:
    name: str
    n_cases: int = 0
    n_failed: int = 0
    counterexamples: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.n_failed == 0

    def record(self, ok: bool, detail: str = "") -> None:
        self.n_cases += 1
        if not ok:
            self.n_failed += 1
            if len(self.counterexamples) < MAX_EXAMPLES:
                self.counterexamples.append(detail)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "n_cases": self.n_cases,
            "n_failed": self.n_failed,
            "counterexamples": list(self.counterexamples),
        }


@dataclass
class SuiteResult:
    name: str
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"suite": self.name, "passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def _random_probs(rng: np.random.Generator, n: int, sparsity: float = 0.0) -> np.ndarray:
    p = rng.gamma(0.7, size=n)
    if sparsity > 0:
        p[rng.random(n) < sparsity] = 0.0
        if p.sum() == 0:
            p[rng.integers(n)] = 1.0
    return p / p.sum()


def random_channel(rng: np.random.Generator, n_w: int | None = None, n_s: int | None = None, s_dim: int = 1) -> JointChannel:
    """A random joint law with W atoms in ``(-1, 1)`` and S atoms in ``(-1, 1)^s_dim``."""
    n_w = n_w or int(rng.integers(2, 13))
    n_s = n_s or int(rng.integers(2, 9))
    joint = rng.gamma(0.5, size=(n_w, n_s))
    joint[rng.random((n_w, n_s)) < 0.3] = 0.0
    joint[:, rng.integers(n_s)] += 1e-3
    joint /= joint.sum()
    w = rng.uniform(-1, 1, size=(n_w, 1))
    s = rng.uniform(-1, 1, size=(n_s, s_dim))
    return JointChannel([f"w{i}" for i in range(n_w)], [f"s{j}" for j in range(n_s)], joint, w, s)


# --- nets ------------------------------------------------------------------------


def default_net_families(depth: int = 10) -> list:
    return [
        build_dyadic_box_nets(1, depth),
        build_dyadic_box_nets(2, max(depth - 3, 1)),
        build_nested_dyadic_nets(1, depth),
        build_nested_dyadic_nets(2, max(depth - 3, 1)),
        build_circle_nets(depth),
    ]


def _net_tag(net) -> str:
    return f"{net.name}(dim={net.dim}, K={net.depth})"


def suite_nets(seed: int = 0, n_points: int = 10_000, nets=None) -> SuiteResult:
    """Net axioms on ``n_points`` random domain points per family, plus cardinalities and coarsening."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("nets")
    families = default_net_families() if nets is None else nets
    axioms = ("decreasing", "singleton", "radius", "refining", "fixed_points")
    checks = {a: CheckResult(f"axiom:{a}") for a in axioms}
    sizes = CheckResult("cardinality")
    coarsen = CheckResult("coarsening-consistency")
    for net in families:
        pts = net.sample_domain(n_points, rng)
        rep = check_net_axioms(net, pts)
        for a in axioms:
            bad = [v for v in rep.violations if v.axiom == a]
            checks[a].record(rep.counts[a] == 0, f"{_net_tag(net)}: {rep.counts[a]} violations; first: {bad[0] if bad else ''}")
        for k in range(net.depth + 1):
            if net.name == "dyadic" and net.dim == 1:
                sizes.record(net.size(k) == (2**k + 1 if k else 1), f"{_net_tag(net)} level {k}: {net.size(k)}")
            elif net.name == "circle":
                sizes.record(net.size(k) == (2**k if k else 1), f"{_net_tag(net)} level {k}: {net.size(k)}")
        if net.name != "circle":
            ch = JointChannel.from_kernel(
                np.full(64, 1 / 64), rng.dirichlet(np.ones(4), size=64), w_coords=net.sample_domain(64, rng)
            )
            for k in range(1, min(net.depth, 6) + 1):
                direct = coarsen_channel(ch, net, k - 1)
                twice = coarsen_channel(coarsen_channel(ch, net, k), net, k - 1)
                same = direct.w_labels == twice.w_labels and np.allclose(direct.joint, twice.joint, atol=1e-15)
                coarsen.record(same, f"{_net_tag(net)} level {k}: coarsen(coarsen(., {k}), {k - 1}) differs")
    res.checks.extend(list(checks.values()) + [sizes, coarsen])
    return res


# --- divergences ------------------------------------------------------------------


def suite_divergences(seed: int = 0, n_pairs: int = 200) -> SuiteResult:
    rng = np.random.default_rng(seed)
    res = SuiteResult("divergences")
    nonneg = CheckResult("nonnegative")
    zero = CheckResult("zero-at-equality")
    power2 = CheckResult("power-p2-equals-chi2")
    ot = CheckResult("w1_1d-vs-lp")
    intervals = CheckResult("uniform-interval-closed-form")
    for _ in range(n_pairs):
        n = int(rng.integers(2, 17))
        labels = [f"x{i}" for i in range(n)]
        mu = DiscreteDistribution(labels, _random_probs(rng, n))
        nu = DiscreteDistribution(labels, _random_probs(rng, n, sparsity=0.3))
        vals = {"kl": kl(nu, mu), "chi2": chi2(nu, mu), "tv": tv(nu, mu), "power3": power_divergence(nu, mu, 3.0)}
        nonneg.record(all(v >= 0 for v in vals.values()), f"n={n}: {vals}")
        same = {"kl": kl(mu, mu), "chi2": chi2(mu, mu), "tv": tv(mu, mu), "power3": power_divergence(mu, mu, 3.0)}
        zero.record(all(abs(v) <= 1e-12 for v in same.values()), f"n={n}: {same}")
        lhs = float(POWER(2.0)(mu, nu))
        rhs = math.sqrt(vals["chi2"] + 1.0)
        power2.record(abs(lhs - rhs) <= 1e-10 * max(1.0, rhs), f"n={n}: {lhs} vs {rhs}")
    for _ in range(100):
        n_a, n_b = int(rng.integers(1, 65)), int(rng.integers(1, 65))
        a = DiscreteDistribution.from_points(rng.normal(size=(n_a, 1)), _random_probs(rng, n_a), prefix="a")
        b = DiscreteDistribution.from_points(rng.normal(size=(n_b, 1)) + 0.5, _random_probs(rng, n_b), prefix="b")
        x, y = w1_1d(a, b), w1_discrete(a, b)
        ot.record(abs(x - y) <= 1e-8, f"atoms {n_a}x{n_b}: cdf {x!r} vs lp {y!r}")
    for _ in range(20):
        A, B = sorted(rng.uniform(-2, 2, size=2))
        lo_in, hi_in = sorted(rng.uniform(A, B, size=2))
        closed = w1_uniform_intervals((lo_in, hi_in), (A, B))
        fine = _fine_uniform_w1((lo_in, hi_in), (A, B), 20_000)
        intervals.record(abs(closed - fine) <= 1e-4, f"({lo_in:.4f},{hi_in:.4f}) in ({A:.4f},{B:.4f}): {closed} vs {fine}")
    res.checks.extend([nonneg, zero, power2, ot, intervals])
    return res


def _fine_uniform_w1(inner, outer, n: int) -> float:
    """``W1`` between uniforms discretised as midpoint atoms on a common grid of ``n`` cells."""
    A, B = outer
    h = (B - A) / n
    mids = A + (np.arange(n) + 0.5) * h
    lo, hi = inner
    if hi - lo <= 0:
        mu = DiscreteDistribution.from_points(mids[:, None], np.full(n, 1.0 / n))
        nu = DiscreteDistribution.from_points(np.array([[lo]]), prefix="p")
        return w1_1d(mu, nu)
    left = np.clip(A + np.arange(n) * h, lo, hi)
    right = np.clip(A + (np.arange(n) + 1) * h, lo, hi)
    q = (right - left) / (hi - lo)
    mu = DiscreteDistribution.from_points(mids[:, None], np.full(n, 1.0 / n))
    nu = DiscreteDistribution.from_points(mids[:, None], q / q.sum())
    return w1_1d(mu, nu)


# --- monotonicity ------------------------------------------------------------------


MONOTONE_KINDS = (KL, W1, TV2, CHI2_SQRT, POWER(3.0))


def suite_monotonicity(seed: int = 0, n_channels: int = 200, depth: int = 6, net=None) -> SuiteResult:
    """Level aggregates of convex divergences grow with ``k`` and stay below the unchained value.

    Run on nested nets, where ``W_{k-1}`` is a function of ``W_k``. Data
    processing for the mutual information is also checked on the
    anchored grid, where each level is still a function of ``W``.
    """
    rng = np.random.default_rng(seed)
    net = build_nested_dyadic_nets(1, depth) if net is None else net
    anchored = build_dyadic_box_nets(1, depth)
    res = SuiteResult("monotonicity")
    mono = CheckResult(f"non-decreasing-in-k[{net.name}]")
    below = CheckResult(f"below-unchained[{net.name}]")
    dpi = CheckResult("data-processing-mi")
    tol = 1e-12
    for c in range(n_channels):
        ch = random_channel(rng)
        bad_mono, bad_below = [], []
        for kind in MONOTONE_KINDS:
            spec = BoundSpec(kind)
            full = expected_divergence(ch, spec)
            levels = [expected_divergence(coarsen_channel(ch, net, k), spec) for k in range(depth + 1)]
            for k in range(1, depth + 1):
                if levels[k] < levels[k - 1] - tol * max(1.0, abs(levels[k - 1])):
                    bad_mono.append(f"{kind} k={k}: {levels[k]!r} < {levels[k - 1]!r}")
            if levels[-1] > full + tol * max(1.0, abs(full)):
                bad_below.append(f"{kind}: level {depth} {levels[-1]!r} > unchained {full!r}")
        mono.record(not bad_mono, f"channel {c}: {bad_mono[:2]}")
        below.record(not bad_below, f"channel {c}: {bad_below[:2]}")
        mi = mutual_information(ch)
        worst = max(mutual_information(coarsen_channel(ch, n_, k)) for n_ in (net, anchored) for k in range(depth + 1))
        dpi.record(worst <= mi + 1e-12, f"channel {c}: coarsened MI {worst!r} > {mi!r}")
    res.checks.extend([mono, below, dpi])
    return res


# --- pinsker, transport-cost --------------------------------------------------------


def suite_pinsker(seed: int = 0, n_pairs: int = 500) -> SuiteResult:
    rng = np.random.default_rng(seed)
    res = SuiteResult("pinsker")
    chk = CheckResult("tv<=sqrt(kl/2)")
    for _ in range(n_pairs):
        n = int(rng.integers(2, 17))
        labels = [f"x{i}" for i in range(n)]
        mu = DiscreteDistribution(labels, _random_probs(rng, n))
        nu = DiscreteDistribution(labels, _random_probs(rng, n, sparsity=0.3))
        t, k = tv(nu, mu), kl(nu, mu)
        chk.record(t <= math.sqrt(k / 2.0) + 1e-12, f"n={n}: tv={t!r}, kl={k!r}")
    res.checks.append(chk)
    return res


def discretised_gaussian(mean: float, sigma: float, lo: float = -14.0, hi: float = 14.0, n: int = 5600):
    """Cell masses of ``N(mean, sigma^2)`` on ``n`` equal cells of ``[lo, hi]``, atoms at midpoints.

    The two outer cells absorb the tails.
    """
    edges = np.linspace(lo, hi, n + 1)
    cdf = ndtr((edges - mean) / sigma)
    cdf[0], cdf[-1] = 0.0, 1.0
    mass = np.diff(cdf)
    mids = 0.5 * (edges[:-1] + edges[1:])
    return DiscreteDistribution.from_points(mids[:, None], np.maximum(mass, 0.0) / mass.sum())


T1_GRID = tuple((a, s) for a in (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0) for s in (0.5, 0.75, 1.0, 1.5, 2.0))


def suite_t1(slack: float = 1e-3, grid=T1_GRID) -> SuiteResult:
    """``W1(N(0,1), N(a, s^2)) <= sqrt(2 KL(N(a, s^2) || N(0,1)))`` on discretised Gaussians."""
    res = SuiteResult("t1")
    chk = CheckResult("w1<=sqrt(2kl)")
    mu = discretised_gaussian(0.0, 1.0)
    for a, s in grid:
        nu = discretised_gaussian(a, s)
        w, k = w1_1d(mu, nu), kl(nu, mu)
        chk.record(w <= math.sqrt(2.0 * k) + slack, f"a={a}, sigma={s}: w1={w!r}, sqrt(2kl)={math.sqrt(2 * k)!r}")
    res.checks.append(chk)
    return res


# --- regularity recipes -----------------------------------------------------------------


def suite_regularity(seed: int = 0, n_triples: int = 100) -> SuiteResult:
    """``|E_mu f - E_nu f| <= xi D(mu, nu)`` for bounded, Lipschitz and sub-Gaussian ``f``.

    Bounded ``f`` uses ``xi = max |f|`` with ``2 TV``; Lipschitz ``f`` uses
    its brute-force Lipschitz constant with ``W1``; the sub-Gaussian recipe
    uses the bounded-range parameter ``(max f - min f) / 2`` with
    ``sqrt(2 KL(nu || mu))``.
    """
    rng = np.random.default_rng(seed)
    res = SuiteResult("regularity")
    bounded = CheckResult("bounded->2tv")
    lipschitz = CheckResult("lipschitz->w1")
    subg = CheckResult("subgaussian->sqrt2kl")
    for t in range(n_triples):
        n = int(rng.integers(2, 17))
        pts = rng.uniform(-1, 1, size=(n, 2))
        mu = DiscreteDistribution.from_points(pts, _random_probs(rng, n))
        nu = DiscreteDistribution.from_points(pts, _random_probs(rng, n, sparsity=0.3))
        f = rng.normal(size=n) * rng.uniform(0.1, 3.0)
        gap = abs(math.fsum((mu.probs * f).tolist()) - math.fsum((nu.probs * f).tolist()))
        tol = 1e-12 * max(1.0, float(np.abs(f).max()))
        xi_b = float(np.abs(f).max())
        d_tv = float(TV2(mu, nu))
        bounded.record(gap <= xi_b * d_tv + tol, f"triple {t}: {gap!r} > {xi_b!r} * {d_tv!r}")
        diff = np.abs(f[:, None] - f[None, :])
        dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1))
        off = dist > 0
        xi_l = float((diff[off] / dist[off]).max()) if off.any() else 0.0
        d_w = w1_discrete(mu, nu)
        lipschitz.record(gap <= xi_l * d_w + tol + 1e-9 * xi_l, f"triple {t}: {gap!r} > {xi_l!r} * {d_w!r}")
        xi_s = sg_parameter_bounded(float(f.min()), float(f.max()))
        d_kl = math.sqrt(2.0 * kl(nu, mu))
        subg.record(gap <= xi_s * d_kl + tol, f"triple {t}: {gap!r} > {xi_s!r} * {d_kl!r}")
    res.checks.extend([bounded, lipschitz, subg])
    return res


_RUNNERS = {
    "nets": suite_nets,
    "divergences": suite_divergences,
    "monotonicity": suite_monotonicity,
    "pinsker": suite_pinsker,
    "t1": lambda seed=0: suite_t1(),
    "regularity": suite_regularity,
}


def run_suite(name: str, seed: int = 0) -> list[SuiteResult]:
    """Run one suite, or every suite for ``"all"``."""
    if name == "all":
        return [_RUNNERS[s](seed=seed) for s in SUITES]
    if name not in _RUNNERS:
        raise KeyError(name)
    return [_RUNNERS[name](seed=seed)]
