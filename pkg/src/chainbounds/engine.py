"""Assembly of chained and unchained bounds from finite channels.

Every bound has the form ``constant * xi * scale(m) * A`` where ``A`` is
an aggregate of divergences ``D(P_S, P_{S|W})`` (unchained) or a sum
``sum_k eps_{k-1} A_k`` over net levels (chained). Two aggregates exist:

``mean``
    ``E_W[D^r]^(1/r)`` with ``r`` the conjugate of ``holder_p``; with the
    default ``holder_p = inf`` this is ``E_W[D]``.
``jensen``
    ``outer(E_W[inner])``, i.e. Jensen's inequality applied inside the
    square root or power. For ``SQRT2KL`` this turns ``E[sqrt(2 KL)]``
    into ``sqrt(2 I(W; S))``.

Summation order is fixed: levels ascend, and within a level the rows
follow the ascending net index.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .distributions import MASS_TOL, JointChannel, SuperSampleChannel
from .divergences import DivergenceKind, _group_selections
from .errors import BoundError
from .nets import RefiningNetSequence, coarsen_channel, coarsen_supersample


class Scaling(str, Enum):
    NONE = "NONE"
    INV_SQRT_M = "INV_SQRT_M"
    INV_M = "INV_M"

    def factor(self, m: int) -> float:
        if self is Scaling.INV_SQRT_M:
            return 1.0 / math.sqrt(m)
        if self is Scaling.INV_M:
            return 1.0 / m
        return 1.0


@dataclass(frozen=True)
class BoundSpec:
    """What to bound and how.

    ``holder_p`` is the integrability exponent of a non-uniform regularity
    constant ``xi_w``; the divergence is then aggregated in ``L^r`` with
    ``r = holder_p / (holder_p - 1)``. ``holder_p = inf`` is the uniform
    case.
    """

    divergence: DivergenceKind
    xi: float = 1.0
    m: int = 1
    scaling: Scaling = Scaling.NONE
    holder_p: float = math.inf
    constant: float = 1.0
    aggregate: str = "mean"

    def __post_init__(self):
        if not (self.xi > 0 and math.isfinite(self.xi)):
            raise BoundError("BAD_XI", f"xi must be positive and finite, got {self.xi!r}")
        if int(self.m) != self.m or self.m < 1:
            raise BoundError("BAD_M", f"m must be a positive integer, got {self.m!r}")
        if not self.holder_p >= 1:
            raise BoundError("BAD_HOLDER", f"holder_p must be >= 1, got {self.holder_p!r}")
        if self.aggregate not in ("mean", "jensen"):
            raise BoundError("BAD_AGGREGATE", self.aggregate)
        if self.aggregate == "jensen" and self.r != 1.0:
            raise BoundError("BAD_AGGREGATE", "the jensen aggregate needs a uniform constant (holder_p = inf)")
        object.__setattr__(self, "scaling", Scaling(self.scaling))

    @property
    def r(self) -> float:
        p = self.holder_p
        if p == math.inf:
            return 1.0
        if p == 1:
            return math.inf
        return p / (p - 1.0)

    @property
    def prefactor(self) -> float:
        return self.constant * self.xi * self.scaling.factor(self.m)

    def to_dict(self) -> dict:
        return {
            "divergence": str(self.divergence),
            "xi": self.xi,
            "m": self.m,
            "scaling": self.scaling.value,
            "holder_p": _json_num(self.holder_p),
            "constant": self.constant,
            "aggregate": self.aggregate,
        }


@dataclass(frozen=True)
class LevelTerm:
    k: int
    eps_prev: float
    expected_divergence: float
    contribution: float


@dataclass
class BoundReport:
    value: float
    per_level: list[LevelTerm] = field(default_factory=list)
    tail_bound: float = 0.0
    truncation_k: int | None = None
    preset: str | None = None
    spec: BoundSpec | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        """``value + tail_bound``: a certified bound for the full chained sum."""
        return self.value + self.tail_bound

    def to_dict(self) -> dict:
        return {
            "preset": self.preset,
            "value": _json_num(self.value),
            "tail_bound": _json_num(self.tail_bound),
            "total": _json_num(self.total),
            "truncation_k": self.truncation_k,
            "spec": self.spec.to_dict() if self.spec else None,
            "per_level": [{key: _json_num(v) for key, v in asdict(t).items()} for t in self.per_level],
            "metadata": _jsonable(self.metadata),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "k", "eps_prev", "expected_divergence", "contribution"])
        for t in self.per_level:
            w.writerow(["level", t.k, fmt(t.eps_prev), fmt(t.expected_divergence), fmt(t.contribution)])
        w.writerow(["tail", "", "", "", fmt(self.tail_bound)])
        w.writerow(["total", self.truncation_k if self.truncation_k is not None else "", "", "", fmt(self.value)])
        return buf.getvalue()


def fmt(x: float) -> str:
    """Round-trippable decimal with 17 significant digits; infinities as ``+inf``/``-inf``."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return f"{x:.17g}"


def _json_num(x):
    if isinstance(x, (float, np.floating)) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("+inf" if x > 0 else "-inf")
    if isinstance(x, np.generic):
        return x.item()
    return x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return _json_num(obj)


# --- aggregation -------------------------------------------------------------


def _aggregate(weights: np.ndarray, inner: np.ndarray, spec: BoundSpec, kind: DivergenceKind | None = None) -> float:
    kind = kind or spec.divergence
    if spec.aggregate == "jensen":
        return float(kind.outer(_wsum(weights, inner)))
    return _lr_mean(weights, kind.outer(inner), spec.r)


def _wsum(weights: np.ndarray, values: np.ndarray) -> float:
    if np.any(np.isinf(values)):
        return math.inf
    return math.fsum((weights * values).tolist())


def _lr_mean(weights: np.ndarray, values: np.ndarray, r: float) -> float:
    if r == math.inf:
        return float(np.max(values)) if values.size else 0.0
    if r == 1.0:
        return _wsum(weights, values)
    return _wsum(weights, values**r) ** (1.0 / r)


def _cap(weights: np.ndarray, inner: np.ndarray, spec: BoundSpec) -> float:
    """Upper bound on every coarsened level aggregate, from the unchained inner values.

    Coarsening ``W`` replaces each conditional by a mixture of conditionals.
    ``inner`` is convex in the conditional for every kind, so the jensen
    aggregate is capped by its unchained value. For the ``mean`` aggregate
    this also holds when ``D`` itself is convex; for the square-root kinds
    the cap is ``sqrt(2 E[inner])`` when ``r <= 2`` and the unchained
    ``L^r`` mean otherwise.
    """
    kind = spec.divergence
    if spec.aggregate == "jensen" or kind.convex:
        return _aggregate(weights, inner, spec)
    if spec.r <= 2.0:
        return float(kind.outer(_wsum(weights, inner)))
    return _aggregate(weights, inner, spec)


# --- full-sample bounds --------------------------------------------------------


def _channel_inner(channel: JointChannel, kind: DivergenceKind) -> tuple[np.ndarray, np.ndarray]:
    if kind.needs_coords and channel.s_coords is None:
        raise BoundError("MISSING_COORDS", "the W1 divergence needs coordinates on the S atoms")
    _, weights, rows = channel.conditional_rows()
    return weights, kind.inner_rows(rows, channel.p_s, channel.s_coords)


def expected_divergence(channel: JointChannel, spec: BoundSpec) -> float:
    """The aggregate ``A`` of ``D(P_S, P_{S|W})`` for ``channel``."""
    weights, inner = _channel_inner(channel, spec.divergence)
    return _aggregate(weights, inner, spec)


def unchained_bound(channel: JointChannel, spec: BoundSpec) -> BoundReport:
    a = expected_divergence(channel, spec)
    return BoundReport(_scaled(spec.prefactor, a), spec=spec, metadata={"expected_divergence": a})


def unchained_from_gradient(channel: JointChannel, spec: BoundSpec, eps0: float) -> BoundReport:
    """Unchained bound for a loss whose gradient has the regularity: ``eps_0`` times the plain bound."""
    rep = unchained_bound(channel, spec)
    rep.value = _scaled(eps0, rep.value)
    rep.metadata["eps0"] = eps0
    return rep


def _scaled(c: float, a: float) -> float:
    return math.inf if math.isinf(a) else c * a


def _chained(
    level_value: Callable[[int], float],
    cap: float,
    net: RefiningNetSequence,
    k_trunc: int,
    spec: BoundSpec,
    saturated_from: int | None,
) -> BoundReport:
    if not 1 <= k_trunc <= net.depth:
        raise BoundError("LEVEL_OUT_OF_RANGE", f"k_trunc={k_trunc} must lie in [1, {net.depth}]")
    terms = []
    for k in range(1, k_trunc + 1):
        a = level_value(k)
        eps = net.eps(k - 1)
        terms.append(LevelTerm(k, eps, a, _scaled(spec.prefactor * eps, a)))
    contribs = [t.contribution for t in terms]
    value = math.inf if any(math.isinf(c) for c in contribs) else math.fsum(contribs)
    radius_tail = tail_radius_sum(net, k_trunc)
    if math.isinf(cap):
        if math.isinf(value):
            tail = math.inf
        else:
            needed = saturated_from if saturated_from is not None else "beyond the net depth"
            raise BoundError(
                "NO_TAIL_CAP",
                f"the unchained aggregate is infinite and levels only saturate at {needed}; k_trunc={k_trunc}",
            )
    else:
        tail = spec.prefactor * cap * radius_tail
    meta = {
        "tail_cap": cap,
        "tail_radius_sum": radius_tail,
        "net": net.name,
        "net_refining": bool(getattr(net, "refining", False)),
    }
    if not meta["net_refining"]:
        meta["warning"] = "net projections are not nested; the telescoping argument assumes refining nets"
    return BoundReport(value, terms, tail, k_trunc, spec=spec, metadata=meta)


def tail_radius_sum(net: RefiningNetSequence, k_trunc: int) -> float:
    """``sum_{k > K} eps_{k-1}``; for finite-depth nets the last radius closes the sum."""
    fn = getattr(net, "tail_radius_sum", None)
    if fn is not None:
        return fn(k_trunc)
    return math.fsum(net.radii[k_trunc:])


def chained_bound(channel: JointChannel, net: RefiningNetSequence, k_trunc: int, spec: BoundSpec) -> BoundReport:
    """``sum_{k=1}^K eps_{k-1} A(P_S, P_{S|W_k})`` plus a certified tail for ``k > K``."""
    from .nets import injective_level

    kind = spec.divergence
    if channel.w_coords is None:
        raise BoundError("MISSING_COORDS", "chaining needs coordinates on the W atoms")
    weights, inner = _channel_inner(channel, kind)
    cap = _cap(weights, inner, spec)
    keep = channel.p_w > 0

    def level_value(k):
        return expected_divergence(coarsen_channel(channel, net, k), spec)

    sat = injective_level(channel.w_coords[keep], net) if math.isinf(cap) else None
    return _chained(level_value, cap, net, k_trunc, spec, sat)


# --- individual-sample bounds ----------------------------------------------------


def _check_shared_w(channels: Sequence, attr: str = "joint") -> None:
    first = channels[0]
    ref = _w_marginal(first)
    for i, ch in enumerate(channels[1:], start=1):
        if ch.w_labels != first.w_labels or np.max(np.abs(_w_marginal(ch) - ref)) > MASS_TOL:
            raise BoundError("MARGINAL_MISMATCH", f"channel {i} has a different W marginal from channel 0")


def _w_marginal(ch) -> np.ndarray:
    return ch.joint.reshape(ch.joint.shape[0], -1).sum(axis=1)


def _check_count(n: int, spec: BoundSpec) -> None:
    if n != spec.m:
        raise BoundError("SAMPLE_COUNT_MISMATCH", f"{n} per-sample channels but m={spec.m}")


def per_sample_bound(
    channels: Sequence[JointChannel],
    spec: BoundSpec,
    net: RefiningNetSequence | None = None,
    k_trunc: int | None = None,
) -> BoundReport:
    """``sum_i`` of the unchained (or chained) aggregate for ``(W, X_i)`` channels.

    Use ``Scaling.INV_M`` to get the ``1/m`` average.
    """
    if not channels:
        raise BoundError("EMPTY", "need at least one per-sample channel")
    _check_shared_w(channels)
    _check_count(len(channels), spec)
    if net is None:
        parts = [expected_divergence(ch, spec) for ch in channels]
        a = _sum(parts)
        return BoundReport(_scaled(spec.prefactor, a), spec=spec, metadata={"per_sample": parts})
    reports = [chained_bound(ch, net, k_trunc, spec) for ch in channels]
    return _sum_reports(reports, spec, k_trunc)


def _sum(values) -> float:
    return math.inf if any(math.isinf(v) for v in values) else math.fsum(values)


def _sum_reports(reports: list[BoundReport], spec: BoundSpec, k_trunc: int) -> BoundReport:
    terms = []
    for idx in range(len(reports[0].per_level)):
        rows = [r.per_level[idx] for r in reports]
        terms.append(
            LevelTerm(
                rows[0].k,
                rows[0].eps_prev,
                _sum([t.expected_divergence for t in rows]),
                _sum([t.contribution for t in rows]),
            )
        )
    value = _sum([r.value for r in reports])
    tail = _sum([r.tail_bound for r in reports])
    meta = dict(reports[0].metadata)
    meta["tail_cap"] = _sum([r.metadata["tail_cap"] for r in reports])
    return BoundReport(value, terms, tail, k_trunc, spec=spec, metadata=meta)


# --- super-sample bounds -------------------------------------------------------------


@dataclass
class _SSBlock:
    """Per-super-sample view: weights and inner divergences for both halves."""

    weights: np.ndarray
    inner_s: np.ndarray
    inner_ghost: np.ndarray


def _ss_blocks(ssc: SuperSampleChannel, kind: DivergenceKind) -> list[_SSBlock]:
    if kind.needs_coords and ssc.x_coords is None:
        raise BoundError("MISSING_COORDS", "the W1 divergence needs coordinates on the x atoms")
    n_u = 2**ssc.m
    blocks = []
    for s, ps in enumerate(ssc.p_sstar):
        if ps <= 0:
            continue
        block = ssc.joint[:, s, :]
        pw = block.sum(axis=1)
        keep = pw > 0
        inner = []
        for ghost in (False, True):
            keys, values = _group_selections(ssc, s, ghost)
            ref = np.bincount(keys, minlength=len(values)) / n_u
            rows = np.zeros((int(keep.sum()), len(values)))
            np.add.at(rows.T, keys, block[keep].T)
            rows /= pw[keep][:, None]
            coords = None
            if ssc.x_coords is not None:
                coords = np.array([ssc.x_coords[list(v)].ravel() for v in values])
            inner.append(kind.inner_rows(rows, ref, coords))
        blocks.append(_SSBlock(pw[keep], inner[0], inner[1]))
    return blocks


def _ss_aggregate(blocks: list[_SSBlock], spec: BoundSpec) -> float:
    kind = spec.divergence
    w = np.concatenate([b.weights for b in blocks])
    a = np.concatenate([b.inner_s for b in blocks])
    g = np.concatenate([b.inner_ghost for b in blocks])
    if spec.aggregate == "jensen":
        return float(kind.outer(_wsum(w, a))) + float(kind.outer(_wsum(w, g)))
    return _lr_mean(w, kind.outer(a) + kind.outer(g), spec.r)


def _ss_cap(blocks: list[_SSBlock], spec: BoundSpec) -> float:
    kind = spec.divergence
    if spec.aggregate == "jensen" or kind.convex or spec.r > 2.0:
        return _ss_aggregate(blocks, spec)
    w = np.concatenate([b.weights for b in blocks])
    # E[(D_a + D_b)^r]^(1/r) <= E[D_a^2]^(1/2) + E[D_b^2]^(1/2) for r <= 2.
    total = 0.0
    for attr in ("inner_s", "inner_ghost"):
        total += float(kind.outer(_wsum(w, np.concatenate([getattr(b, attr) for b in blocks]))))
    return total


def supersample_expected(ssc: SuperSampleChannel, spec: BoundSpec) -> float:
    return _ss_aggregate(_ss_blocks(ssc, spec.divergence), spec)


def supersample_bound(
    ssc: SuperSampleChannel,
    spec: BoundSpec,
    net: RefiningNetSequence | None = None,
    k_trunc: int | None = None,
) -> BoundReport:
    """``E_{W,S*}[D(P_{S|S*}, P_{S|W,S*}) + D(P_{Sbar|S*}, P_{Sbar|W,S*})]``, optionally chained."""
    if net is None:
        a = supersample_expected(ssc, spec)
        return BoundReport(_scaled(spec.prefactor, a), spec=spec, metadata={"expected_divergence": a})
    from .nets import injective_level

    if ssc.w_coords is None:
        raise BoundError("MISSING_COORDS", "chaining needs coordinates on the W atoms")
    cap = _ss_cap(_ss_blocks(ssc, spec.divergence), spec)
    keep = _w_marginal(ssc) > 0
    sat = injective_level(ssc.w_coords[keep], net) if math.isinf(cap) else None
    return _chained(
        lambda k: supersample_expected(coarsen_supersample(ssc, net, k), spec), cap, net, k_trunc, spec, sat
    )


def per_sample_supersample_bound(
    sscs: Sequence[SuperSampleChannel],
    spec: BoundSpec,
    net: RefiningNetSequence | None = None,
    k_trunc: int | None = None,
) -> BoundReport:
    """Sum over ``i`` of the super-sample aggregate for ``(W, X_i*, U_i)`` channels (each with ``m = 1``)."""
    if not sscs:
        raise BoundError("EMPTY", "need at least one per-sample super-sample channel")
    for i, c in enumerate(sscs):
        if c.m != 1:
            raise BoundError("SHAPE_MISMATCH", f"channel {i} has m={c.m}; per-sample channels carry one pair")
    _check_shared_w(sscs)
    _check_count(len(sscs), spec)
    if net is None:
        parts = [supersample_expected(c, spec) for c in sscs]
        return BoundReport(_scaled(spec.prefactor, _sum(parts)), spec=spec, metadata={"per_sample": parts})
    return _sum_reports([supersample_bound(c, spec, net, k_trunc) for c in sscs], spec, k_trunc)


# --- generalisation gap -----------------------------------------------------------


def generalisation_gap(channel: JointChannel, loss: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> float:
    """``E_{P_W x P_S}[loss] - E_{P_{W,S}}[loss]`` with ``loss(w_coords, s_coords)`` a matrix."""
    if channel.w_coords is None or channel.s_coords is None:
        raise BoundError("MISSING_COORDS", "the gap needs coordinates on both W and S atoms")
    table = np.asarray(loss(channel.w_coords, channel.s_coords), dtype=float)
    prod = np.outer(channel.p_w, channel.p_s)
    return math.fsum((prod * table).ravel().tolist()) - math.fsum((channel.joint * table).ravel().tolist())


def with_spec(spec: BoundSpec, **changes) -> BoundSpec:
    return replace(spec, **changes)
