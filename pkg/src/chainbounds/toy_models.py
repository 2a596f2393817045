"""Two worked examples with closed forms, finite discretisations and Monte Carlo checks.

Toy 1: ``X ~ U(-theta, theta)`` with ``theta = 2^-k_star``, ``W = X`` and
the loss ``(w - x)^2 / 2`` on ``[-1, 1]``; chaining over the anchored
dyadic nets.

Toy 2: ``X ~ N((a, 0), I_2)`` and ``W = X / |X|`` on the unit circle,
with the loss ``-<w, x>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import erf, erfcx, i0e, i1e, log_ndtr, ndtr

from .distributions import JointChannel
from .divergences import SQRT2KL, W1
from .engine import BoundReport, BoundSpec, chained_bound, generalisation_gap, unchained_bound
from .errors import ToyModelError
from .montecarlo import MCConfig, MCEstimate, estimate_expectation
from .nets import build_dyadic_box_nets

LOG2 = math.log(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


# --- toy 1 ---------------------------------------------------------------------


@dataclass(frozen=True)
class Toy1Config:
    k_star: int
    m: int = 1
    resolution: int | None = None

    def __post_init__(self):
        if self.k_star < 1:
            raise ToyModelError("BAD_CONFIG", "k_star must be a positive integer")
        if self.m < 1:
            raise ToyModelError("BAD_CONFIG", "m must be a positive integer")
        if self.resolution is not None and self.resolution < self.k_star + 1:
            raise ToyModelError("BAD_CONFIG", "resolution must be at least k_star + 1")

    @property
    def theta(self) -> float:
        return 2.0**-self.k_star

    @property
    def res(self) -> int:
        return self.k_star + 10 if self.resolution is None else self.resolution


def _check_level(k_prime: int) -> None:
    if int(k_prime) != k_prime or k_prime < 1:
        raise ToyModelError("BAD_LEVEL", f"k_prime must be an integer >= 1, got {k_prime}")


def toy1_level_w1(cfg: Toy1Config, k_prime: int) -> float:
    """``E[W1(P_X, P_{X|W_k})]`` at level ``k = k_star + k_prime`` (zero for ``k_prime <= 0``).

    Inner cells and the two half cells are summed separately; the total
    simplifies to ``theta (2/3 - 2^-k' / 3)``. Levels ``k <= k_star`` are
    independent of ``X`` and contribute zero; they are not accepted here.
    """
    _check_level(k_prime)
    th = cfg.theta
    q = 2.0**-k_prime
    e1 = th / (6.0 * (1.0 - q)) * (4.0 - 12.0 * q + 11.0 * q**2 - 3.0 * q**3)
    e2 = th * (q - 0.5 * q**2)
    return e1 + e2


def toy1_level_mi(k_prime: int) -> float:
    """``I(W_k; X)`` at level ``k = k_star + k_prime``: two half cells and ``2^k' - 1`` full ones."""
    _check_level(k_prime)
    return (k_prime + 2.0**-k_prime) * LOG2


def _series(term, tol=1e-18, max_terms=200) -> float:
    parts = []
    for k in range(1, max_terms + 1):
        t = term(k)
        parts.append(t)
        if abs(t) < tol:
            break
    return math.fsum(parts)


def toy1_analytic(cfg: Toy1Config) -> dict[str, float]:
    """Closed forms: the gap, the two unchained bounds and the two chained ones."""
    th = cfg.theta
    return {
        "gap": th**2 / 3.0,
        "b_ltilde": 2.0 * th / 3.0,
        "b_l": 4.0 * th / 3.0,
        # level k' contributes theta * (2/3 - 2^-k'/3), so the sum is (4/3 - 2/9) theta^2
        "b_grad": 10.0 / 9.0 * th**2,
        "b_cmi": th * _series(lambda k: 2.0 ** (1 - k) * math.sqrt(2.0 * toy1_level_mi(k))),
    }


def toy1_b_grad_series(cfg: Toy1Config) -> float:
    """``theta * sum_k' 2^(1-k') E_k'``: the chained Wasserstein bound summed from the level terms."""
    return cfg.theta * _series(lambda k: 2.0 ** (1 - k) * toy1_level_w1(cfg, k))


def toy1_channel(cfg: Toy1Config) -> JointChannel:
    """Deterministic channel on the cells of width ``2^-resolution`` inside ``(-theta, theta)``.

    W atoms and X atoms share the cell midpoints as coordinates.
    """
    n = 2 ** (cfg.res - cfg.k_star + 1)
    h = 2.0**-cfg.res
    mids = -cfg.theta + (np.arange(n) + 0.5) * h
    labels_w = [f"w{i}" for i in range(n)]
    labels_x = [f"x{i}" for i in range(n)]
    return JointChannel(labels_w, labels_x, np.diag(np.full(n, 1.0 / n)), mids[:, None], mids[:, None])


def _half_square(w, x):
    return 0.5 * (w[:, 0][:, None] - x[:, 0][None, :]) ** 2


def toy1_engine(cfg: Toy1Config, k_trunc: int | None = None) -> dict[str, BoundReport | float]:
    """Engine evaluations on :func:`toy1_channel`, chained up to ``k_trunc`` (default: the resolution)."""
    ch = toy1_channel(cfg)
    k = cfg.res if k_trunc is None else k_trunc
    net = build_dyadic_box_nets(1, max(k, 1))
    return {
        "gap": generalisation_gap(ch, _half_square),
        "b_ltilde": unchained_bound(ch, BoundSpec(W1)),
        "b_l": unchained_bound(ch, BoundSpec(W1, xi=2.0)),
        "b_grad": chained_bound(ch, net, k, BoundSpec(W1)),
        "b_cmi": chained_bound(ch, net, k, BoundSpec(SQRT2KL, aggregate="jensen")),
    }


def w1_point_to_uniform(w, lo: float, hi: float):
    """Vectorised ``W1(delta_w, U(lo, hi))`` for ``w`` in ``[lo, hi]``."""
    w = np.asarray(w, dtype=float)
    return ((lo - w) ** 2 + (hi - w) ** 2) / (2.0 * (hi - lo))


def toy1_mc_unchained(cfg: Toy1Config, mc: MCConfig) -> MCEstimate:
    """Monte Carlo estimate of ``E_W[W1(P_X, P_{X|W})] = E_W[W1(U(-theta, theta), delta_W)]``."""
    th = cfg.theta
    return estimate_expectation(
        lambda rng, n: rng.uniform(-th, th, size=n),
        lambda w: w1_point_to_uniform(w, -th, th),
        mc,
    )


def toy1_highdim_theta(d: int) -> float:
    """A dyadic ``theta`` of order ``d^(-3/4)``: ``2^-ceil(0.75 log2 d)``."""
    return 2.0 ** -math.ceil(0.75 * math.log2(d))


def toy1_highdim(d: int, cfg: Toy1Config | float) -> dict[str, float]:
    """Bounds for ``X`` uniform on ``(-theta, theta)^(d-1) x (-1, 1)`` with the l1 metric on ``X``.

    ``cfg`` is a :class:`Toy1Config` or a bare ``theta``. The loss is
    ``sqrt(d)``-Lipschitz for the l1 metric and every axis contributes
    its one-dimensional toy-1 bound (the last axis at ``theta = 1``), so
    ``b_ltilde_l1 = (2 sqrt(d) / 3)(1 + (d - 1) theta)`` and
    ``b_grad_l1 = (10 sqrt(d) / 9)(1 + (d - 1) theta^2)``.
    """
    if d < 1:
        raise ToyModelError("BAD_CONFIG", "d must be a positive integer")
    theta = cfg.theta if isinstance(cfg, Toy1Config) else float(cfg)
    rd = math.sqrt(d)
    lt = 2.0 * rd / 3.0 * (1.0 + (d - 1) * theta)
    gr = 10.0 * rd / 9.0 * (1.0 + (d - 1) * theta**2)
    return {"b_ltilde_l1": lt, "b_grad_l1": gr, "ratio": gr / lt}


def toy1_sample_mean_channel(cfg: Toy1Config) -> JointChannel:
    """``m`` i.i.d. draws on the cells of :func:`toy1_channel` and ``W`` their mean.

    S atoms are the ``m``-tuples of cell indices; W atoms are the distinct
    means, so ``W`` stays inside ``(-theta, theta)``. Sizes grow as
    ``n^m``; keep the resolution small.
    """
    n = 2 ** (cfg.res - cfg.k_star + 1)
    h = 2.0**-cfg.res
    mids = -cfg.theta + (np.arange(n) + 0.5) * h
    grids = np.stack(np.meshgrid(*[np.arange(n)] * cfg.m, indexing="ij"), axis=-1).reshape(-1, cfg.m)
    # means are (2 sum(idx) + m) h / 2 - theta, distinct per index sum
    sums = grids.sum(axis=1)
    uniq = np.unique(sums)
    joint = np.zeros((uniq.size, grids.shape[0]))
    joint[np.searchsorted(uniq, sums), np.arange(grids.shape[0])] = float(n) ** -cfg.m
    w_coords = (-cfg.theta + (uniq + 0.5 * cfg.m) * h / cfg.m)[:, None]
    s_labels = ["s" + "_".join(map(str, row)) for row in grids]
    s_coords = mids[grids]
    return JointChannel([f"w{u}" for u in uniq], s_labels, joint, w_coords, s_coords)


# --- toy 2 ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Toy2Config:
    a: float
    mc: MCConfig = MCConfig(100_000)

    def __post_init__(self):
        if not self.a > 0:
            raise ToyModelError("BAD_CONFIG", f"a must be positive, got {self.a}")


def toy2_density(a: float, alpha):
    """Density of the angle of ``X ~ N((a, 0), I)`` on ``(-pi, pi]``."""
    alpha = np.asarray(alpha, dtype=float)
    t = a * np.cos(alpha)
    return math.exp(-a * a / 2.0) / (2.0 * math.pi) + t * ndtr(t) * np.exp(-((a * np.sin(alpha)) ** 2) / 2.0) / _SQRT2PI


def toy2_gap_analytic(a: float) -> float:
    """``|G(a)| = a - (a^2/2) sqrt(pi/2) e^(-a^2/4) (I_0(a^2/4) + I_1(a^2/4))``."""
    x = a * a / 4.0
    return a - 0.5 * a * a * math.sqrt(math.pi / 2.0) * (i0e(x) + i1e(x))


def toy2_gap_quadrature(a: float) -> float:
    """``a * integral of (1 - cos alpha) rho_a(alpha)`` by adaptive quadrature."""
    val, _ = integrate.quad(
        lambda al: (1.0 - math.cos(al)) * float(toy2_density(a, al)), -math.pi, math.pi, points=[0.0], limit=200,
        epsabs=1e-13, epsrel=1e-12,
    )
    return a * val


def toy2_w1_brackets(a: float) -> tuple[float, float]:
    """Lower and upper brackets on ``E_W[W1(P_X, P_{X|W})]``."""
    low = math.sqrt(2.0 / math.pi) * math.erf(a / math.sqrt(2.0))
    tail = math.exp(-a * a - float(log_ndtr(-a)))
    return low, 1.0 + low + tail


def _abs_normal_mean(mu):
    """``E|N(mu, 1)|``."""
    return mu * (2.0 * ndtr(mu) - 1.0) + 2.0 * np.exp(-mu * mu / 2.0) / _SQRT2PI


def _line_w1(t: np.ndarray, n_points: int) -> np.ndarray:
    """``W1(N(0, 1), Q_t)`` on the line, where ``Q_t`` has density ``(v + t) phi(v)`` on ``v >= -t``.

    ``Q_t`` is the law of ``X`` given its angle, in the coordinate along
    the ray measured from the foot of the mean. Left of the ray origin
    the CDF gap is exactly ``Phi``; on the ray it is integrated with the
    trapezoid rule on ``n_points`` nodes.
    """
    t = np.asarray(t, dtype=float)[:, None]
    phi_t = np.exp(-t * t / 2.0) / _SQRT2PI
    # Z = phi(t) (1 + t Phi(t) / phi(t)), with the Mills-type ratio from erfcx.
    z = phi_t * (1.0 + t * math.sqrt(math.pi / 2.0) * erfcx(-t / math.sqrt(2.0)))
    left = phi_t - t * ndtr(-t)
    hi = np.maximum(-t, 0.0) + 8.0
    u = np.linspace(0.0, 1.0, n_points)[None, :]
    v = -t + (hi + t) * u
    phi_v = np.exp(-v * v / 2.0) / _SQRT2PI
    g = (phi_t - phi_v + t * (ndtr(t) - ndtr(-v))) / z
    gap = np.abs(ndtr(v) - g)
    width = (hi + t)[:, 0] / (n_points - 1)
    inner = width * (gap.sum(axis=1) - 0.5 * (gap[:, 0] + gap[:, -1]))
    return left[:, 0] + inner


def toy2_transport_upper(a: float, alpha, n_points: int = 512):
    """Cost of a transport plan from ``P_X`` to ``P_{X|W}`` at angle ``alpha``.

    The plan first projects onto the line through the origin in
    direction ``w`` (cost ``E|N(a sin alpha, 1)|``) and then rearranges
    along the line. It upper-bounds ``W1(P_X, P_{X|W})`` and is never below
    ``a |sin alpha|``.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    perp = _abs_normal_mean(a * np.abs(np.sin(alpha)))
    return perp + _line_w1(a * np.cos(alpha), n_points)


def toy2_mc_unchained(a: float, mc: MCConfig, n_points: int = 512) -> MCEstimate:
    """Monte Carlo estimate of ``E_W[W1(P_X, P_{X|W})]`` via :func:`toy2_transport_upper`."""

    def sampler(rng, n):
        x = rng.standard_normal((n, 2))
        x[:, 0] += a
        return np.arctan2(x[:, 1], x[:, 0])

    return estimate_expectation(sampler, lambda al: toy2_transport_upper(a, al, n_points), mc)
