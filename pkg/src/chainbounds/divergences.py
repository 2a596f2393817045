"""Divergences, information measures and Wasserstein distances in nats.

``+inf`` is an ordinary return value: KL with a support mismatch, lautum
information of a deterministic channel, and so on. ``0 log 0 = 0``.

Two calling conventions coexist. The public functions take
:class:`DiscreteDistribution` objects and match atoms by label (or by
coordinates for the transport distances). The ``*_rows`` helpers take a
reference vector ``mu`` and a stack of rows ``nu`` on the same support and
are what the bound engine uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.special import logsumexp

from .distributions import DiscreteDistribution, JointChannel, SuperSampleChannel
from .errors import DivergenceError

_INF = math.inf


def _align(nu: DiscreteDistribution, mu: DiscreteDistribution) -> tuple[np.ndarray, np.ndarray]:
    """Probability vectors of ``nu`` and ``mu`` on the union of their labels."""
    if nu.labels == mu.labels:
        return nu.probs, mu.probs
    labels = list(dict.fromkeys(mu.labels + nu.labels))
    pos = {lab: i for i, lab in enumerate(labels)}
    a = np.zeros(len(labels))
    b = np.zeros(len(labels))
    a[[pos[x] for x in nu.labels]] = nu.probs
    b[[pos[x] for x in mu.labels]] = mu.probs
    return a, b


# --- array kernels -------------------------------------------------------


def _ratio_terms(nu: np.ndarray, mu: np.ndarray, phi) -> np.ndarray:
    """``sum_j mu_j phi(nu_j / mu_j)`` per row, ``+inf`` where ``nu`` is not dominated by ``mu``.

    Each ``phi`` below vanishes to second order at 1, so nearly equal rows
    give a tiny value instead of cancellation noise of order one ulp.
    """
    nu = np.atleast_2d(nu)
    mu = np.broadcast_to(mu, nu.shape)
    live = mu > 0
    bad = np.any((nu > 0) & ~live, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(live, nu / np.where(live, mu, 1.0), 1.0)
        terms = np.where(live, mu * phi(r), 0.0)
    out = terms.sum(axis=1)
    out[bad] = _INF
    return np.maximum(out, 0.0)


def _kl_phi(r):
    # r log r - r + 1, with 0 log 0 = 0
    return np.where(r > 0, r * np.log(np.where(r > 0, r, 1.0)), 0.0) - r + 1.0


def kl_rows(nu: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """``KL(nu_i || mu)`` for each row of ``nu``."""
    return _ratio_terms(nu, mu, _kl_phi)


def reverse_kl_rows(nu: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """``KL(mu || nu_i)`` for each row of ``nu``."""
    nu = np.atleast_2d(nu)
    return _ratio_terms(np.broadcast_to(mu, nu.shape), nu, _kl_phi)


def power_rows(nu: np.ndarray, mu: np.ndarray, p: float) -> np.ndarray:
    """``E_mu[(d nu / d mu)^p] - 1`` per row; ``+inf`` if a row is not dominated by ``mu``."""
    if not p > 1:
        raise DivergenceError("BAD_EXPONENT", f"power divergence needs p > 1, got {p!r}")

    def phi(r):
        if p == 2.0:
            return (r - 1.0) ** 2
        return r**p - 1.0 - p * (r - 1.0)

    return _ratio_terms(nu, mu, phi)


def chi2_rows(nu: np.ndarray, mu: np.ndarray) -> np.ndarray:
    return power_rows(nu, mu, 2.0)


def tv_rows(nu: np.ndarray, mu: np.ndarray) -> np.ndarray:
    nu = np.atleast_2d(nu)
    return 0.5 * np.abs(nu - mu).sum(axis=1)


def w1_rows(nu: np.ndarray, mu: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """``W1(mu, nu_i)`` for rows supported on the atoms at ``coords``.

    Scalar coordinates use the CDF formula; anything else solves the
    transport LP row by row.
    """
    nu = np.atleast_2d(nu)
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    if coords.shape[1] == 1:
        x = coords[:, 0]
        order = np.argsort(x, kind="stable")
        gaps = np.diff(x[order])
        diff = np.cumsum(nu[:, order] - mu[order], axis=1)[:, :-1]
        return np.abs(diff) @ gaps
    cost = _euclidean_cost(coords, coords)
    return np.array([_transport_lp(mu, row, cost) for row in nu])


# --- public distribution-level API ---------------------------------------


def kl(nu: DiscreteDistribution, mu: DiscreteDistribution) -> float:
    """``KL(nu || mu)``."""
    a, b = _align(nu, mu)
    return float(kl_rows(a, b)[0])


def kl_uniform_intervals(inner: tuple[float, float], outer: tuple[float, float]) -> float:
    """``KL(U(inner) || U(outer))``: ``log(|outer| / |inner|)`` if nested, else ``+inf``."""
    a, b = inner
    lo, hi = outer
    if not (b > a and hi > lo):
        raise DivergenceError("DEGENERATE_INTERVAL", "intervals must have positive length")
    if lo <= a and b <= hi:
        return math.log((hi - lo) / (b - a))
    return _INF


def chi2(nu: DiscreteDistribution, mu: DiscreteDistribution) -> float:
    """``E_mu[(d nu / d mu)^2] - 1``."""
    a, b = _align(nu, mu)
    return float(chi2_rows(a, b)[0])


def power_divergence(nu: DiscreteDistribution, mu: DiscreteDistribution, p: float) -> float:
    """``E_mu[(d nu / d mu)^p] - 1`` for ``p > 1``."""
    a, b = _align(nu, mu)
    return float(power_rows(a, b, p)[0])


def tv(nu: DiscreteDistribution, mu: DiscreteDistribution) -> float:
    a, b = _align(nu, mu)
    return float(tv_rows(a, b)[0])


def mutual_information(channel: JointChannel) -> float:
    """``I(W; S) = KL(P_{W,S} || P_W x P_S)``."""
    prod = np.outer(channel.p_w, channel.p_s)
    return float(kl_rows(channel.joint.ravel(), prod.ravel())[0])


def lautum_information(channel: JointChannel) -> float:
    """``L(W; S) = KL(P_W x P_S || P_{W,S})``."""
    prod = np.outer(channel.p_w, channel.p_s)
    return float(kl_rows(prod.ravel(), channel.joint.ravel())[0])


def power_information(channel: JointChannel, p: float) -> float:
    """``D^(p)(P_{W,S} || P_W x P_S)``."""
    prod = np.outer(channel.p_w, channel.p_s)
    return float(power_rows(channel.joint.ravel(), prod.ravel(), p)[0])


def conditional_mutual_information(ssc: SuperSampleChannel) -> float:
    """``I(W; S | S*)`` where ``S`` is the training half selected by ``U``.

    Computed exactly as the ``P(S*)``-weighted average of the mutual
    information between ``W`` and ``S`` within each super-sample.
    """
    total = 0.0
    for s, ps in enumerate(ssc.p_sstar):
        if ps <= 0:
            continue
        block = ssc.joint[:, s, :] / ps
        groups = _group_selections(ssc, s, ghost=False)
        joint = np.zeros((block.shape[0], len(groups[1])))
        np.add.at(joint.T, groups[0], block.T)
        pw, pv = joint.sum(axis=1), joint.sum(axis=0)
        total += ps * float(kl_rows(joint.ravel(), np.outer(pw, pv).ravel())[0])
    return total


def _group_selections(ssc: SuperSampleChannel, s: int, ghost: bool) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """Map each ``u`` to the index of the sample value it selects for super-sample ``s``."""
    values: dict[tuple[int, ...], int] = {}
    keys = np.empty(2**ssc.m, dtype=int)
    for u in range(2**ssc.m):
        sel = ssc.selection(s, u, ghost)
        keys[u] = values.setdefault(sel, len(values))
    return keys, list(values)


# --- transport -------------------------------------------------------------


def _euclidean_cost(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.sqrt(((x[:, None, :] - y[None, :, :]) ** 2).sum(axis=-1))


def _transport_lp(a: np.ndarray, b: np.ndarray, cost: np.ndarray) -> float:
    ia, ib = np.flatnonzero(a > 0), np.flatnonzero(b > 0)
    a, b, cost = a[ia], b[ib], cost[np.ix_(ia, ib)]
    n, m = cost.shape
    if n == 1 or m == 1:
        return float(np.dot(a, cost[:, 0]) if m == 1 else np.dot(b, cost[0]))
    rows = sparse.kron(sparse.eye(n), np.ones((1, m)))
    cols = sparse.kron(np.ones((1, n)), sparse.eye(m))
    a_eq = sparse.vstack([rows, cols]).tocsr()
    # One marginal constraint is redundant; drop it so the system has full rank.
    res = linprog(
        cost.ravel(), A_eq=a_eq[:-1], b_eq=np.r_[a, b][:-1], bounds=(0, None), method="highs-ds"
    )
    if res.status != 0:
        raise DivergenceError("LP_FAILED", res.message)
    return max(float(res.fun), 0.0)


def w1_discrete(mu: DiscreteDistribution, nu: DiscreteDistribution, cost=None) -> float:
    """Exact ``W1`` between finite distributions by linear programming.

    ``cost`` defaults to Euclidean distances between atom coordinates.
    """
    if cost is None:
        if mu.coords is None or nu.coords is None:
            raise DivergenceError("MISSING_COORDS", "w1_discrete needs coordinates or an explicit cost matrix")
        if mu.coords.shape[1] != nu.coords.shape[1]:
            raise DivergenceError("DIM_MISMATCH", "atoms live in spaces of different dimension")
        cost = _euclidean_cost(mu.coords, nu.coords)
    cost = np.asarray(cost, dtype=float)
    if cost.shape != (len(mu), len(nu)):
        raise DivergenceError("SHAPE_MISMATCH", f"cost has shape {cost.shape}")
    return _transport_lp(mu.probs, nu.probs, cost)


def w1_1d(mu: DiscreteDistribution, nu: DiscreteDistribution) -> float:
    """``W1 = integral of |F_mu - F_nu|`` for distributions on the real line."""
    for d in (mu, nu):
        if d.coords is None or d.coords.shape[1] != 1:
            raise DivergenceError("MISSING_COORDS", "w1_1d needs scalar coordinates")
    x = np.concatenate([mu.coords[:, 0], nu.coords[:, 0]])
    mass = np.concatenate([mu.probs, -nu.probs])
    order = np.argsort(x, kind="stable")
    cdf_gap = np.cumsum(mass[order])[:-1]
    return float(np.abs(cdf_gap) @ np.diff(x[order]))


def w1_uniform_intervals(inner: tuple[float, float], outer: tuple[float, float]) -> float:
    """``W1(U(inner), U(outer))`` for nested intervals.

    ``inner`` may be a point ``(w, w)``, in which case the first measure is
    a Dirac mass.
    """
    a, b = inner
    lo, hi = outer
    if not (b >= a and hi > lo):
        raise DivergenceError("DEGENERATE_INTERVAL", "outer interval must have positive length")
    if not (lo <= a and b <= hi):
        raise DivergenceError("NOT_NESTED", f"[{a}, {b}] is not inside [{lo}, {hi}]")
    width_gap = (hi - lo) - (b - a)
    if width_gap == 0:
        return 0.0
    return ((lo - a) ** 2 + (hi - b) ** 2) / (2.0 * width_gap)


# --- sub-Gaussian parameters ---------------------------------------------


def sg_parameter_bounded(lo: float, hi: float) -> float:
    """Sub-Gaussian parameter certified for any variable taking values in ``[lo, hi]``."""
    if hi < lo:
        raise DivergenceError("BAD_RANGE", f"hi={hi} < lo={lo}")
    return (hi - lo) / 2.0


def sg_parameter_numeric(dist: DiscreteDistribution, values, lambda_grid) -> float:
    """Smallest sub-Gaussian parameter consistent with the MGF on ``lambda_grid``.

    This is a lower estimate of the true parameter: it only inspects the
    listed ``lambda`` values.
    """
    grid = np.asarray(lambda_grid, dtype=float).ravel()
    grid = grid[grid != 0]
    if grid.size == 0:
        raise DivergenceError("EMPTY_GRID", "lambda grid has no non-zero entries")
    v = np.asarray(values, dtype=float)
    mask = dist.probs > 0
    v, logp = v[mask], np.log(dist.probs[mask])
    mean = float(np.dot(np.exp(logp), v))
    cgf = logsumexp(logp[None, :] + grid[:, None] * v[None, :], axis=1) - grid * mean
    return float(np.sqrt(np.max(np.maximum(2.0 * cgf / grid**2, 0.0))))


# --- divergence kinds used by the bound engine ----------------------------


@dataclass(frozen=True)
class DivergenceKind:
    """A divergence ``D(mu, nu)`` between the reference ``mu`` and the conditional ``nu``.

    ``inner`` is the raw quantity averaged under the Jensen aggregation and
    ``outer`` maps it to ``D``; for the kinds without a useful
    decomposition ``outer`` is the identity.
    """

    tag: str
    p: float | None = None

    TAGS = ("KL", "SQRT2KL", "CHI2_SQRT", "TV2", "POWER", "LAUTUM_SQRT2", "W1")

    def __post_init__(self):
        if self.tag not in self.TAGS:
            raise DivergenceError("UNKNOWN_DIVERGENCE", self.tag)
        if self.tag == "POWER" and not (self.p is not None and self.p > 1):
            raise DivergenceError("BAD_EXPONENT", f"POWER needs p > 1, got {self.p!r}")

    @classmethod
    def parse(cls, text: str) -> "DivergenceKind":
        """``"W1"``, ``"sqrt2kl"``, ``"power:3"`` and so on."""
        name, _, arg = text.strip().partition(":")
        name = name.upper()
        if name == "POWER":
            return cls("POWER", float(arg or 2.0))
        return cls(name)

    def __str__(self) -> str:
        return f"POWER:{self.p:g}" if self.tag == "POWER" else self.tag

    @property
    def needs_coords(self) -> bool:
        return self.tag == "W1"

    def inner_rows(self, nu: np.ndarray, mu: np.ndarray, coords=None) -> np.ndarray:
        t = self.tag
        if t in ("KL", "SQRT2KL"):
            return kl_rows(nu, mu)
        if t == "LAUTUM_SQRT2":
            return reverse_kl_rows(nu, mu)
        if t == "CHI2_SQRT":
            return chi2_rows(nu, mu)
        if t == "POWER":
            return power_rows(nu, mu, self.p)
        if t == "TV2":
            return 2.0 * tv_rows(nu, mu)
        if coords is None:
            raise DivergenceError("MISSING_COORDS", "W1 needs coordinates on the data atoms")
        return w1_rows(nu, mu, coords)

    def outer(self, x):
        x = np.asarray(x, dtype=float)
        t = self.tag
        if t in ("SQRT2KL", "LAUTUM_SQRT2"):
            return np.sqrt(2.0 * x)
        if t == "CHI2_SQRT":
            return np.sqrt(x)
        if t == "POWER":
            return (x + 1.0) ** (1.0 / self.p)
        return x

    def rows(self, nu: np.ndarray, mu: np.ndarray, coords=None) -> np.ndarray:
        return self.outer(self.inner_rows(nu, mu, coords))

    def __call__(self, mu: DiscreteDistribution, nu: DiscreteDistribution) -> float:
        """``D(mu, nu)`` for two distributions (argument order as in bounds: reference first)."""
        if self.tag == "W1":
            if mu.coords is not None and nu.coords is not None and mu.coords.shape[1] == 1:
                return w1_1d(mu, nu)
            return w1_discrete(mu, nu)
        a, b = _align(nu, mu)
        return float(self.rows(a, b)[0])

    @property
    def convex(self) -> bool:
        """Whether ``nu -> D(mu, nu)`` is convex, so coarser conditionals cannot increase it."""
        return self.tag in ("KL", "CHI2_SQRT", "TV2", "POWER", "W1")


KL = DivergenceKind("KL")
SQRT2KL = DivergenceKind("SQRT2KL")
CHI2_SQRT = DivergenceKind("CHI2_SQRT")
TV2 = DivergenceKind("TV2")
LAUTUM_SQRT2 = DivergenceKind("LAUTUM_SQRT2")
W1 = DivergenceKind("W1")


def POWER(p: float) -> DivergenceKind:
    return DivergenceKind("POWER", p)
