"""Standard and chained PAC-Bayesian bounds on finite nets.

The chained bound reads

    xi / sqrt(2m) * (2 sqrt(log 1/delta_0)
                     + sum_{k=1}^K eps_{k-1} (lambda_k + (KL_k + log 1/delta_k) / lambda_k))

plus a deterministic remainder ``2 xi eps_K`` for the levels beyond ``K``:
with ``|grad loss| <= xi`` the gap ``g_S`` is ``2 xi``-Lipschitz, so
``E|g_S(W) - g_S(W_K)| <= 2 xi eps_K`` without any probability cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .distributions import DiscreteDistribution
from .divergences import kl
from .engine import BoundReport, LevelTerm
from .errors import PacBayesError
from .nets import RefiningNetSequence

SUM_TOL = 1e-12


def _check_delta(delta: float, what: str = "delta") -> None:
    if not (0.0 < delta < 1.0):
        raise PacBayesError("BAD_DELTA", f"{what} must lie in (0, 1), got {delta!r}")


def _check_lambda(lam: float, what: str = "lambda") -> None:
    if not (lam > 0.0 and math.isfinite(lam)):
        raise PacBayesError("BAD_LAMBDA", f"{what} must be positive and finite, got {lam!r}")


def pac_bound(xi: float, m: int, lam: float, delta: float, kl_term: float) -> float:
    """``xi / sqrt(2m) * (lam + (kl_term + log(1/delta)) / lam)``; ``+inf`` when ``kl_term`` is."""
    _check_delta(delta)
    _check_lambda(lam)
    if not kl_term >= 0.0:
        raise PacBayesError("BAD_KL", f"kl_term must be non-negative, got {kl_term!r}")
    if math.isinf(kl_term):
        return math.inf
    return xi / math.sqrt(2.0 * m) * (lam + (kl_term + math.log(1.0 / delta)) / lam)


def oracle_lambda(kl_term: float, delta: float) -> float:
    """Minimiser ``sqrt(kl_term + log(1/delta))`` of :func:`pac_bound` in ``lam``.

    Diagnostic only: it depends on the sample through ``kl_term``, so the
    resulting value is not a valid high-probability bound.
    """
    _check_delta(delta)
    return math.sqrt(kl_term + math.log(1.0 / delta))


def union_bound_grid(
    xi: float, m: int, lambdas: Sequence[float], delta: float, kl_term: float
) -> tuple[float, float, float]:
    """Best of :func:`pac_bound` over a grid fixed before seeing the sample.

    Each grid point runs at confidence ``delta / t`` so the minimum holds
    with probability at least ``1 - delta``. Returns ``(bound, lambda, delta / t)``.
    """
    lambdas = list(lambdas)
    if not lambdas:
        raise PacBayesError("BAD_LAMBDA", "empty lambda grid")
    per = delta / len(lambdas)
    values = [pac_bound(xi, m, lam, per, kl_term) for lam in lambdas]
    i = int(np.argmin(values))
    return values[i], lambdas[i], per


@dataclass(frozen=True)
class PacSchedule:
    """``lambdas[k-1]`` is ``lambda_k`` for ``k = 1..K``; ``deltas[k]`` is ``delta_k`` for ``k = 0..K``.

    The deltas must sum to at most ``delta``; a truncated geometric
    schedule falls short of it, which only makes the bound conservative.
    """

    lambdas: tuple[float, ...]
    deltas: tuple[float, ...]
    delta: float

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(float(x) for x in self.lambdas))
        object.__setattr__(self, "deltas", tuple(float(x) for x in self.deltas))
        _check_delta(self.delta)
        if len(self.deltas) != len(self.lambdas) + 1:
            raise PacBayesError("BAD_SCHEDULE", "need one delta per level k = 0..K and one lambda per k = 1..K")
        for k, lam in enumerate(self.lambdas, start=1):
            _check_lambda(lam, f"lambda_{k}")
        for k, d in enumerate(self.deltas):
            _check_delta(d, f"delta_{k}")
        total = math.fsum(self.deltas)
        if total > self.delta + SUM_TOL:
            raise PacBayesError("BAD_DELTA", f"deltas sum to {total!r}, more than delta = {self.delta!r}")

    @property
    def depth(self) -> int:
        return len(self.lambdas)

    @staticmethod
    def geometric_deltas(delta: float, depth: int) -> tuple[float, ...]:
        """``delta_k = delta 2^-(k+1)`` for ``k = 0..depth``."""
        _check_delta(delta)
        return tuple(delta * 2.0 ** -(k + 1) for k in range(depth + 1))

    @classmethod
    def geometric(cls, delta: float, depth: int, lambdas: Sequence[float] | Callable[[int, float], float]):
        """Geometric deltas with ``lambdas`` given as a list or as ``f(k, delta_k)``."""
        deltas = cls.geometric_deltas(delta, depth)
        if callable(lambdas):
            lambdas = [lambdas(k, deltas[k]) for k in range(1, depth + 1)]
        return cls(tuple(lambdas), deltas, delta)

    @classmethod
    def alpha(cls, delta: float, depth: int, alpha: float, deltas: Sequence[float] | None = None):
        """``lambda_k = sqrt(alpha k + log(1/delta_k))``, optimal when ``KL_k = alpha k``."""
        _check_alpha(alpha)
        ds = tuple(deltas) if deltas is not None else cls.geometric_deltas(delta, depth)
        lams = [math.sqrt(alpha * k + math.log(1.0 / ds[k])) for k in range(1, depth + 1)]
        return cls(tuple(lams), ds, delta)

    def to_dict(self) -> dict:
        return {"lambdas": list(self.lambdas), "deltas": list(self.deltas), "delta": self.delta}


def _check_alpha(alpha: float) -> None:
    if not (alpha > 0.0 and math.isfinite(alpha)):
        raise PacBayesError("BAD_ALPHA", f"alpha must be positive and finite, got {alpha!r}")


class PosteriorOnNets:
    """Posterior and prior masses on the levels ``k = 0..K`` of a net.

    ``posteriors[k]`` and ``priors[k]`` are arrays over the ``net.size(k)``
    points of ``W_k``. Construction checks that pushing level ``k``
    through ``pi_{k-1}`` reproduces level ``k - 1``; this fails on nets
    whose projections do not nest.
    """

    def __init__(self, net: RefiningNetSequence, posteriors: Sequence, priors: Sequence, check_priors: bool = False):
        if len(posteriors) != len(priors):
            raise PacBayesError("BAD_POSTERIOR", "posterior and prior level counts differ")
        if len(posteriors) - 1 > net.depth:
            raise PacBayesError("SCHEDULE_TOO_DEEP", f"{len(posteriors) - 1} levels on a net of depth {net.depth}")
        self.net = net
        self.posteriors = [np.asarray(p, dtype=float) for p in posteriors]
        self.priors = [np.asarray(p, dtype=float) for p in priors]
        for k, (q, p) in enumerate(zip(self.posteriors, self.priors)):
            for arr, what in ((q, "posterior"), (p, "prior")):
                if arr.shape != (net.size(k),):
                    raise PacBayesError("BAD_POSTERIOR", f"{what} at level {k} has shape {arr.shape}")
                if np.any(arr < 0) or abs(math.fsum(arr.tolist()) - 1.0) > 1e-9:
                    raise PacBayesError("BAD_POSTERIOR", f"{what} at level {k} is not a probability vector")
        self._check_consistency(self.posteriors, "INCONSISTENT_POSTERIOR", "posterior")
        if check_priors:
            self._check_consistency(self.priors, "INCONSISTENT_PRIOR", "prior")

    @property
    def depth(self) -> int:
        return len(self.posteriors) - 1

    def parents(self, k: int) -> np.ndarray:
        """Index of ``pi_{k-1}(p)`` for every point ``p`` of ``W_k``."""
        return self.net.locate(self.net.points(k), k - 1)

    def _check_consistency(self, levels, code: str, what: str) -> None:
        for k in range(1, len(levels)):
            pushed = np.bincount(self.parents(k), weights=levels[k], minlength=self.net.size(k - 1))
            err = float(np.max(np.abs(pushed - levels[k - 1])))
            if err > 1e-12:
                raise PacBayesError(code, f"{what} at level {k} pushed through pi_{k - 1} misses level {k - 1} by {err:.3g}")

    def kl(self, k: int) -> float:
        """``KL(P_{W_k|S} || P*_{W_k})`` via :func:`chainbounds.divergences.kl`."""
        labels = [self.net.label(k, i) for i in range(self.net.size(k))]
        return kl(DiscreteDistribution(labels, self.posteriors[k]), DiscreteDistribution(labels, self.priors[k]))

    @staticmethod
    def _uniform_priors(net: RefiningNetSequence, depth: int) -> list[np.ndarray]:
        return [np.full(net.size(k), 1.0 / net.size(k)) for k in range(depth + 1)]

    @classmethod
    def from_points(
        cls, net: RefiningNetSequence, depth: int, points, probs=None, prior_points=None, prior_probs=None
    ) -> "PosteriorOnNets":
        """Push an atomic posterior (and optionally an atomic prior) on ``W`` to every level.

        Without a prior, each ``P*_{W_k}`` is uniform on ``W_k``.
        """
        if depth > net.depth:
            raise PacBayesError("SCHEDULE_TOO_DEEP", f"depth {depth} exceeds net depth {net.depth}")

        def push(pts, pr):
            pts = np.asarray(pts, dtype=float).reshape(-1, net.dim)
            pr = np.full(len(pts), 1.0 / len(pts)) if pr is None else np.asarray(pr, dtype=float)
            return [np.bincount(net.locate(pts, k), weights=pr, minlength=net.size(k)) for k in range(depth + 1)]

        post = push(points, probs)
        if prior_points is None:
            return cls(net, post, cls._uniform_priors(net, depth))
        return cls(net, post, push(prior_points, prior_probs), check_priors=True)

    @classmethod
    def dirac(cls, net: RefiningNetSequence, depth: int, w) -> "PosteriorOnNets":
        """Deterministic algorithm output ``w`` with uniform priors on every level."""
        return cls.from_points(net, depth, np.atleast_1d(np.asarray(w, dtype=float)).reshape(1, net.dim))


def chained_pac_bound(
    xi: float, m: int, net: RefiningNetSequence, schedule: PacSchedule, posterior: PosteriorOnNets
) -> BoundReport:
    """Chained PAC-Bayes bound truncated at ``K = schedule.depth``.

    ``value`` covers the levels ``0..K``; ``tail_bound = 2 xi eps_K``
    covers the rest, so ``total`` bounds the whole expected gap.
    """
    K = schedule.depth
    if K > net.depth or K > posterior.depth:
        raise PacBayesError("SCHEDULE_TOO_DEEP", f"schedule depth {K}, net depth {net.depth}, posterior depth {posterior.depth}")
    if posterior.net is not net:
        raise PacBayesError("BAD_POSTERIOR", "posterior was built on a different net")
    pre = xi / math.sqrt(2.0 * m)
    head = pre * 2.0 * math.sqrt(math.log(1.0 / schedule.deltas[0]))
    terms = []
    for k in range(1, K + 1):
        kl_k = posterior.kl(k)
        lam = schedule.lambdas[k - 1]
        eps = net.eps(k - 1)
        inner = lam + (kl_k + math.log(1.0 / schedule.deltas[k])) / lam
        terms.append(LevelTerm(k, eps, kl_k, pre * eps * inner))
    value = math.fsum([head] + [t.contribution for t in terms])
    return BoundReport(
        value,
        terms,
        tail_bound=2.0 * xi * net.eps(K),
        truncation_k=K,
        preset="chained-pac-bayes",
        metadata={"xi": xi, "m": m, "head": head, "schedule": schedule.to_dict(), "net": net.name},
    )


def alpha_heuristic_bound(
    xi: float,
    m: int,
    net: RefiningNetSequence,
    alpha: float,
    deltas: Sequence[float],
    posterior: PosteriorOnNets,
    as_printed: bool = False,
) -> BoundReport:
    """Chained bound with ``lambda_k = sqrt(alpha k + log(1/delta_k))``.

    By default each level keeps both the ``lambda_k`` term and the KL
    term, which is the chained bound at that schedule and therefore valid
    for every ``alpha > 0``. ``as_printed=True`` drops the ``lambda_k``
    term and evaluates ``eps_{k-1} (KL_k + log 1/delta_k) / lambda_k``
    alone; that variant is smaller and is kept for comparison.
    """
    _check_alpha(alpha)
    deltas = tuple(float(d) for d in deltas)
    depth = len(deltas) - 1
    delta = math.fsum(deltas)
    _check_delta(delta, "sum of deltas")
    schedule = PacSchedule.alpha(delta, depth, alpha, deltas)
    if not as_printed:
        rep = chained_pac_bound(xi, m, net, schedule, posterior)
    else:
        if depth > net.depth or depth > posterior.depth:
            raise PacBayesError("SCHEDULE_TOO_DEEP", f"depth {depth} on net depth {net.depth}")
        pre = xi / math.sqrt(2.0 * m)
        head = pre * 2.0 * math.sqrt(math.log(1.0 / deltas[0]))
        terms = []
        for k in range(1, depth + 1):
            kl_k = posterior.kl(k)
            lam = schedule.lambdas[k - 1]
            eps = net.eps(k - 1)
            terms.append(LevelTerm(k, eps, kl_k, pre * eps * (kl_k + math.log(1.0 / deltas[k])) / lam))
        rep = BoundReport(
            math.fsum([head] + [t.contribution for t in terms]),
            terms,
            tail_bound=2.0 * xi * net.eps(depth),
            truncation_k=depth,
            metadata={"xi": xi, "m": m, "head": head, "schedule": schedule.to_dict(), "net": net.name},
        )
    rep.preset = "alpha-heuristic"
    rep.metadata.update({"alpha": alpha, "as_printed": as_printed})
    return rep
