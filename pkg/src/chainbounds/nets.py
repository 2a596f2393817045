"""Sequences of nets ``W_0, W_1, ...`` with projections ``pi_k``.

A net sequence is described by its radii ``eps_k`` and by a ``locate``
map sending domain points to the index of their level-``k`` net point.
Four properties are expected of a refining sequence:

1. ``|pi_k(w) - w| <= eps_k``;
2. ``W_0`` is a single point;
3. ``pi_{k-1}(pi_k(w)) = pi_{k-1}(w)``;
4. every net point is its own projection, so ``pi_k(W) = W_k``.

:func:`check_net_axioms` tests all four on sample points. The anchored
dyadic and circle families below project by rounding to the nearest grid
point. Rounding cells at consecutive levels are not nested, so those
families satisfy 1, 2 and 4 but not 3; :func:`build_nested_dyadic_nets`
is a dyadic family whose cells are nested and which satisfies all four.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import JointChannel, SuperSampleChannel
from .errors import DistributionError, NetError

DOMAIN_TOL = 1e-9


class RefiningNetSequence:
    """Base class: subclasses implement ``_locate``, ``_coords`` and ``size``."""

    name = "net"
    refining = False

    def __init__(self, radii: Sequence[float], dim: int):
        self.radii = tuple(float(r) for r in radii)
        self.dim = dim

    @property
    def depth(self) -> int:
        """Deepest available level ``K``."""
        return len(self.radii) - 1

    def eps(self, k: int) -> float:
        self._check_level(k)
        return self.radii[k]

    def _check_level(self, k: int) -> None:
        if not 0 <= k <= self.depth:
            raise NetError("LEVEL_OUT_OF_RANGE", f"level {k} not in [0, {self.depth}]")

    def _as_points(self, w) -> np.ndarray:
        pts = np.asarray(w, dtype=float)
        if pts.ndim == 0:
            pts = pts.reshape(1, 1)
        elif pts.ndim == 1:
            pts = pts.reshape(1, -1) if pts.shape[0] == self.dim else pts.reshape(-1, 1)
        if pts.shape[1] != self.dim:
            raise NetError("DIM_MISMATCH", f"points have dimension {pts.shape[1]}, net has {self.dim}")
        if not np.all(self.in_domain(pts)):
            raise NetError("OUT_OF_DOMAIN", f"{self.name} is defined on {self.domain_description}")
        return pts

    domain_description = "its domain"

    def in_domain(self, pts: np.ndarray) -> np.ndarray:
        return np.ones(len(pts), dtype=bool)

    def locate(self, w, k: int) -> np.ndarray:
        """Index of ``pi_k(w)`` within level ``k`` for each row of ``w``."""
        self._check_level(k)
        return self._locate(self._as_points(w), k)

    def project(self, w, k: int) -> np.ndarray:
        """``pi_k(w)``: same shape convention as the input."""
        pts = self._as_points(w)
        out = self._coords(k, self.locate(pts, k))
        single = np.ndim(w) == 0 or (np.ndim(w) == 1 and np.shape(w)[0] == self.dim)
        return out[0] if single else out

    def coords(self, k: int, idx) -> np.ndarray:
        self._check_level(k)
        return self._coords(k, np.atleast_1d(np.asarray(idx, dtype=int)))

    def points(self, k: int) -> np.ndarray:
        """All of ``W_k`` as an ``(n, dim)`` array."""
        return self.coords(k, np.arange(self.size(k)))

    def label(self, k: int, idx: int) -> str:
        return f"L{k}:{int(idx)}"

    def size(self, k: int) -> int:
        raise NotImplementedError

    def _locate(self, pts: np.ndarray, k: int) -> np.ndarray:
        raise NotImplementedError

    def _coords(self, k: int, idx: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample_domain(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def tail_radius_sum(self, k_trunc: int) -> float:
        """``sum_{k > K} eps_{k-1}``; here the radii halve at every level beyond the last one."""
        return 2.0 * self.radii[k_trunc] if k_trunc <= self.depth else 2.0 * self.radii[-1] / 2 ** (k_trunc - self.depth)


# --- box families ----------------------------------------------------------


class _BoxNets(RefiningNetSequence):
    domain_description = "[-1, 1]^dim"

    def in_domain(self, pts):
        return np.all(np.abs(pts) <= 1.0 + DOMAIN_TOL, axis=1)

    def sample_domain(self, n, rng):
        return rng.uniform(-1.0, 1.0, size=(n, self.dim))

    def _per_axis(self, k: int) -> int:
        raise NotImplementedError

    def size(self, k):
        return self._per_axis(k) ** self.dim

    def _flatten(self, j: np.ndarray, k: int) -> np.ndarray:
        base = self._per_axis(k)
        idx = np.zeros(j.shape[0], dtype=np.int64)
        for c in range(self.dim):
            idx = idx * base + j[:, c]
        return idx

    def _unflatten(self, idx: np.ndarray, k: int) -> np.ndarray:
        base = self._per_axis(k)
        out = np.empty((idx.shape[0], self.dim), dtype=np.int64)
        rest = idx.astype(np.int64)
        for c in range(self.dim - 1, -1, -1):
            out[:, c] = rest % base
            rest = rest // base
        return out

    def label(self, k, idx):
        j = self._unflatten(np.array([idx]), k)[0]
        return f"L{k}:" + ",".join(str(int(x)) for x in self._axis_labels(j, k))

    def _axis_labels(self, j, k):
        return j


class AnchoredDyadicNets(_BoxNets):
    """``W_k = {2^(1-k) j : |j| <= 2^(k-1)}^dim``, projection by coordinate-wise rounding.

    Ties go to the lower grid point, so the level-``k`` cell of grid point
    ``p`` along each axis is ``(p - 2^-k, p + 2^-k]`` clipped to ``[-1, 1]``.
    """

    name = "dyadic"

    def __init__(self, dim: int, k_max: int):
        if dim < 1 or k_max < 0:
            raise NetError("BAD_NET_SPEC", f"dim={dim}, k_max={k_max}")
        super().__init__([2.0**-k * math.sqrt(dim) for k in range(k_max + 1)], dim)
        self.k_max = k_max

    def _per_axis(self, k):
        return 2**k + 1 if k > 0 else 1

    def _half(self, k):
        return 2 ** (k - 1) if k > 0 else 0

    def _locate(self, pts, k):
        step = 2.0 ** (1 - k)
        j = np.ceil(pts / step - 0.5).astype(np.int64)
        h = self._half(k)
        j = np.clip(j, -h, h)
        return self._flatten(j + h, k)

    def _coords(self, k, idx):
        return (self._unflatten(idx, k) - self._half(k)) * 2.0 ** (1 - k)

    def _axis_labels(self, j, k):
        return j - self._half(k)

    def cells(self, k: int, within: tuple[float, float] | None = None) -> list["Cell"]:
        """Preimages of the level-``k`` points (1-D only), optionally intersected with ``within``."""
        return _interval_cells(self, k, within, lower_open=True)


class NestedDyadicNets(_BoxNets):
    """Centres of the ``2^k`` dyadic cells per axis; cells are ``[lo, hi)`` with ``hi = 1`` closed.

    Cells at level ``k`` split those at level ``k - 1``, so the family is
    refining with ``eps_k = 2^-k sqrt(dim)``.
    """

    name = "nested-dyadic"
    refining = True

    def __init__(self, dim: int, k_max: int):
        if dim < 1 or k_max < 0:
            raise NetError("BAD_NET_SPEC", f"dim={dim}, k_max={k_max}")
        super().__init__([2.0**-k * math.sqrt(dim) for k in range(k_max + 1)], dim)
        self.k_max = k_max

    def _per_axis(self, k):
        return 2**k

    def _locate(self, pts, k):
        width = 2.0 ** (1 - k)
        j = np.floor((pts + 1.0) / width).astype(np.int64)
        return self._flatten(np.clip(j, 0, 2**k - 1), k)

    def _coords(self, k, idx):
        return -1.0 + (2 * self._unflatten(idx, k) + 1) * 2.0**-k

    def cells(self, k: int, within: tuple[float, float] | None = None) -> list["Cell"]:
        return _interval_cells(self, k, within, lower_open=False)


@dataclass(frozen=True)
class Cell:
    """Preimage of one net point. ``lower``/``upper`` are angles for circle nets."""

    index: int
    label: str
    point: np.ndarray
    lower: float
    upper: float

    @property
    def length(self) -> float:
        return self.upper - self.lower


def _interval_cells(net: _BoxNets, k: int, within, lower_open: bool) -> list[Cell]:
    if net.dim != 1:
        raise NetError("UNSUPPORTED", "cells are only enumerated for one-dimensional box nets")
    net._check_level(k)
    pts = net.points(k)[:, 0]
    mids = (pts[1:] + pts[:-1]) / 2.0
    lows = np.r_[-1.0, mids]
    highs = np.r_[mids, 1.0]
    lo_clip, hi_clip = within if within is not None else (-1.0, 1.0)
    out = []
    for i, (lo, hi) in enumerate(zip(lows, highs)):
        lo, hi = max(lo, lo_clip), min(hi, hi_clip)
        if hi > lo:
            out.append(Cell(i, net.label(k, i), np.array([pts[i]]), float(lo), float(hi)))
    return out


# --- circle ------------------------------------------------------------------


class CircleNets(RefiningNetSequence):
    """Points at angles ``2 pi j / 2^k`` on the unit circle, ``eps_k = 4 / 2^k``.

    ``W_0 = {(1, 0)}``. Projection rounds the angle, ties going to the
    smaller index ``j`` in ``[-2^(k-1), 2^(k-1) - 1]``.
    """

    name = "circle"
    domain_description = "the unit circle"

    def __init__(self, k_max: int):
        if k_max < 0:
            raise NetError("BAD_NET_SPEC", f"k_max={k_max}")
        super().__init__([4.0 / 2**k for k in range(k_max + 1)], 2)
        self.k_max = k_max

    def in_domain(self, pts):
        return np.abs(np.hypot(pts[:, 0], pts[:, 1]) - 1.0) <= DOMAIN_TOL

    def sample_domain(self, n, rng):
        a = rng.uniform(-math.pi, math.pi, size=n)
        return np.column_stack([np.cos(a), np.sin(a)])

    def size(self, k):
        return 2**k if k > 0 else 1

    def _locate(self, pts, k):
        if k == 0:
            return np.zeros(len(pts), dtype=np.int64)
        n = 2**k
        t = np.arctan2(pts[:, 1], pts[:, 0]) * n / (2 * math.pi)
        j = np.ceil(t - 0.5).astype(np.int64)
        j = np.where(j >= n // 2, j - n, j)
        return j + n // 2

    def _angles(self, k, idx):
        if k == 0:
            return np.zeros(len(idx))
        n = 2**k
        return 2 * math.pi * (idx - n // 2) / n

    def _coords(self, k, idx):
        a = self._angles(k, idx)
        return np.column_stack([np.cos(a), np.sin(a)])

    def label(self, k, idx):
        return f"L{k}:{int(idx) - (2 ** k) // 2 if k else 0}"

    def cells(self, k: int) -> list[Cell]:
        """Arcs as angle intervals (lower open, upper closed, centred on each point)."""
        self._check_level(k)
        if k == 0:
            return [Cell(0, self.label(0, 0), self.coords(0, 0)[0], -math.pi, math.pi)]
        half = math.pi / 2**k
        out = []
        for i in range(self.size(k)):
            a = float(self._angles(k, np.array([i]))[0])
            out.append(Cell(i, self.label(k, i), self.coords(k, i)[0], a - half, a + half))
        return out


# --- user-supplied point sets ------------------------------------------------


class PointSetNets(RefiningNetSequence):
    """Nearest-point projection onto explicit point sets (ties to the lowest index)."""

    name = "points"

    def __init__(self, levels: Sequence, radii: Sequence[float], domain_samples=None):
        lv = [np.atleast_2d(np.asarray(p, dtype=float)) for p in levels]
        if len(lv) != len(radii) or not lv:
            raise NetError("BAD_NET_SPEC", "need one radius per level")
        dims = {p.shape[1] for p in lv}
        if len(dims) != 1:
            raise NetError("DIM_MISMATCH", "all levels must share a dimension")
        super().__init__(radii, dims.pop())
        self.levels = tuple(lv)
        self._samples = None if domain_samples is None else np.atleast_2d(np.asarray(domain_samples, float))

    def size(self, k):
        return self.levels[k].shape[0]

    def _locate(self, pts, k):
        grid = self.levels[k]
        out = np.empty(len(pts), dtype=np.int64)
        for start in range(0, len(pts), 4096):
            chunk = pts[start : start + 4096]
            d = ((chunk[:, None, :] - grid[None, :, :]) ** 2).sum(axis=-1)
            out[start : start + 4096] = np.argmin(d, axis=1)
        return out

    def _coords(self, k, idx):
        return self.levels[k][idx]

    def tail_radius_sum(self, k_trunc):
        # Beyond the last level the remainder W - W_depth is bounded by eps_depth.
        return math.fsum(self.radii[k_trunc:])

    def sample_domain(self, n, rng):
        pool = np.vstack(([self._samples] if self._samples is not None else []) + list(self.levels))
        return pool[rng.integers(0, len(pool), size=n)]


def nets_from_points(levels: Sequence, radii: Sequence[float], domain_samples=None) -> PointSetNets:
    """Build a nearest-point net sequence and reject it unless it passes every axiom.

    The axioms are checked on the net points themselves and on
    ``domain_samples`` if given.
    """
    net = PointSetNets(levels, radii, domain_samples)
    pool = np.vstack(list(net.levels) + ([net._samples] if net._samples is not None else []))
    report = check_net_axioms(net, pool)
    if not report.ok:
        first = report.violations[0]
        raise NetError(f"AXIOM_{first.axiom.upper()}", str(first))
    net.refining = True
    return net


def build_dyadic_box_nets(dim: int, k_max: int) -> AnchoredDyadicNets:
    return AnchoredDyadicNets(dim, k_max)


def build_nested_dyadic_nets(dim: int, k_max: int) -> NestedDyadicNets:
    return NestedDyadicNets(dim, k_max)


def build_circle_nets(k_max: int) -> CircleNets:
    return CircleNets(k_max)


def parse_net_spec(text: str) -> RefiningNetSequence:
    """``dyadic:DIM:K``, ``nested-dyadic:DIM:K`` or ``circle:K``."""
    parts = text.strip().split(":")
    try:
        if parts[0] == "dyadic" and len(parts) == 3:
            return build_dyadic_box_nets(int(parts[1]), int(parts[2]))
        if parts[0] == "nested-dyadic" and len(parts) == 3:
            return build_nested_dyadic_nets(int(parts[1]), int(parts[2]))
        if parts[0] == "circle" and len(parts) == 2:
            return build_circle_nets(int(parts[1]))
    except ValueError:
        pass
    raise NetError("BAD_NET_SPEC", f"cannot parse net spec {text!r}")


# --- axioms --------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    axiom: str
    level: int
    point: tuple[float, ...]
    detail: str

    def __str__(self):
        return f"{self.axiom} at level {self.level}, w={self.point}: {self.detail}"


@dataclass(frozen=True)
class AxiomReport:
    net: str
    n_samples: int
    violations: tuple[Violation, ...]
    counts: dict

    @property
    def ok(self) -> bool:
        return not self.violations


def check_net_axioms(
    net: RefiningNetSequence, samples, max_examples: int = 5, radius_tol: float = 1e-12
) -> AxiomReport:
    """Check the net axioms on ``samples``; keep a few counterexamples per axiom.

    The axioms are strictly decreasing radii, a singleton ``W_0``, the
    radius bound at every level and the nesting identity
    ``pi_{k-1}(pi_k(w)) = pi_{k-1}(w)``. ``fixed_points`` (net points
    project to themselves) is checked as well.
    """
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    counts = {"decreasing": 0, "singleton": 0, "radius": 0, "refining": 0, "fixed_points": 0}
    examples: list[Violation] = []

    def record(axiom, k, mask, detail):
        bad = np.flatnonzero(mask)
        counts[axiom] += int(bad.size)
        seen = sum(1 for v in examples if v.axiom == axiom)
        for i in bad[: max(0, max_examples - seen)]:
            examples.append(Violation(axiom, k, tuple(float(x) for x in pts[i]), detail))

    for k in range(1, net.depth + 1):
        if not net.radii[k] < net.radii[k - 1]:
            counts["decreasing"] += 1
            examples.append(Violation("decreasing", k, (), f"eps_{k}={net.radii[k]:g} >= eps_{k - 1}"))
    if net.size(0) != 1:
        counts["singleton"] = 1
        examples.append(Violation("singleton", 0, (), f"|W_0| = {net.size(0)}"))
    prev = None
    for k in range(net.depth + 1):
        idx = net.locate(pts, k)
        proj = net.coords(k, idx)
        dist = np.sqrt(((proj - pts) ** 2).sum(axis=1))
        record("radius", k, dist > net.eps(k) + radius_tol, f"distance exceeds eps_{k}={net.eps(k):g}")
        if k > 0:
            chained = net.locate(proj, k - 1)
            record("refining", k, chained != prev, "pi_{k-1}(pi_k(w)) != pi_{k-1}(w)")
        if net.size(k) <= 1 << 16:
            own = net.points(k)
            back = net.locate(own, k)
            bad = back != np.arange(net.size(k))
            if bad.any():
                counts["fixed_points"] += int(bad.sum())
                for i in np.flatnonzero(bad)[:max_examples]:
                    examples.append(Violation("fixed_points", k, tuple(own[i]), "net point is not its own projection"))
        prev = idx
    return AxiomReport(net.name, len(pts), tuple(examples), counts)


# --- coarsening ------------------------------------------------------------------


def _coarsen_keys(w_coords, net: RefiningNetSequence, k: int):
    if w_coords is None:
        raise DistributionError("MISSING_COORDS", "coarsening needs coordinates on the W atoms")
    idx = net.locate(w_coords, k)
    uniq, keys = np.unique(idx, return_inverse=True)
    labels = [net.label(k, i) for i in uniq]
    return keys, labels, net.coords(k, uniq)


def coarsen_channel(channel: JointChannel, net: RefiningNetSequence, k: int) -> JointChannel:
    """Joint law of ``(pi_k(W), S)``; W atoms become the occupied level-``k`` points."""
    keys, labels, coords = _coarsen_keys(channel.w_coords, net, k)
    return channel.merge_w(keys, labels, coords)


def coarsen_supersample(ssc: SuperSampleChannel, net: RefiningNetSequence, k: int) -> SuperSampleChannel:
    keys, labels, coords = _coarsen_keys(ssc.w_coords, net, k)
    return ssc.merge_w(keys, labels, coords)


def injective_level(w_coords, net: RefiningNetSequence) -> int | None:
    """Smallest level from which ``pi_k`` separates all given points and keeps doing so."""
    pts = np.atleast_2d(w_coords)
    if len(pts) <= 1:
        return 0
    found = None
    for k in range(net.depth + 1):
        injective = len(np.unique(net.locate(pts, k))) == len(pts)
        if injective and found is None:
            found = k
        elif not injective:
            found = None
    return found
