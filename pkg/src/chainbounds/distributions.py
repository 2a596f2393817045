"""Finite probability objects: distributions, joint channels, super-samples.

All objects are immutable once built and validate their inputs eagerly.
Probability vectors are never renormalised: anything whose total mass is
off by more than ``MASS_TOL`` is refused.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DistributionError

MASS_TOL = 1e-9


def _as_coords(coords, n: int, what: str) -> np.ndarray | None:
    if coords is None:
        return None
    arr = np.asarray(coords, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(n, -1) if n else arr.reshape(0, 1)
    if arr.ndim != 2 or arr.shape[0] != n:
        raise DistributionError("BAD_COORDS", f"{what}: expected {n} coordinate rows, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DistributionError("BAD_COORDS", f"{what}: coordinates must be finite")
    return arr


def _check_labels(labels: Sequence[str], what: str) -> tuple[str, ...]:
    out = tuple(str(x) for x in labels)
    if len(set(out)) != len(out):
        raise DistributionError("DUPLICATE_LABEL", f"{what}: atom labels must be unique")
    return out


def check_mass(probs: np.ndarray, what: str = "probabilities") -> None:
    if not np.all(np.isfinite(probs)):
        raise DistributionError("NON_FINITE", f"{what} must be finite")
    if np.any(probs < 0):
        i = int(np.argmin(probs))
        raise DistributionError("NEGATIVE_MASS", f"{what}: entry {i} is {probs.flat[i]!r}")
    total = float(probs.sum())
    if abs(total - 1.0) > MASS_TOL:
        raise DistributionError("SUM_NOT_ONE", f"{what} sum to {total!r}")


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """A probability vector over labelled atoms, optionally with coordinates.

    ``coords`` has shape ``(n_atoms, dim)`` and is what the transport
    routines use as the metric space; labels are used for matching atoms
    between two distributions in the f-divergences.
    """

    labels: tuple[str, ...]
    probs: np.ndarray
    coords: np.ndarray | None = None

    def __init__(self, labels: Sequence[str], probs, coords=None):
        labels = _check_labels(labels, "distribution")
        p = np.array(probs, dtype=float).ravel()
        if p.shape[0] != len(labels):
            raise DistributionError("SHAPE_MISMATCH", f"{len(labels)} labels but {p.shape[0]} probabilities")
        if p.shape[0] == 0:
            raise DistributionError("EMPTY", "a distribution needs at least one atom")
        check_mass(p)
        p.setflags(write=False)
        c = _as_coords(coords, len(labels), "distribution")
        if c is not None:
            c.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "coords", c)

    @classmethod
    def from_points(cls, points, probs=None, prefix: str = "x") -> "DiscreteDistribution":
        """Atoms at ``points`` (1-D array or ``(n, dim)``), uniform unless ``probs`` is given."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        n = pts.shape[0]
        if probs is None:
            probs = np.full(n, 1.0 / n)
        return cls([f"{prefix}{i}" for i in range(n)], probs, pts)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int | None:
        return None if self.coords is None else self.coords.shape[1]

    def index(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    def expectation(self, values) -> float:
        v = np.asarray(values, dtype=float)
        return float(np.dot(self.probs, v))


@dataclass(frozen=True, eq=False)
class JointChannel:
    """Joint law of a hypothesis ``W`` and the data ``S`` on finite supports.

    ``joint[i, j] = P(W = w_i, S = s_j)``.
    """

    w_labels: tuple[str, ...]
    s_labels: tuple[str, ...]
    joint: np.ndarray
    w_coords: np.ndarray | None = None
    s_coords: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __init__(self, w_labels, s_labels, joint, w_coords=None, s_coords=None):
        w_labels = _check_labels(w_labels, "w_atoms")
        s_labels = _check_labels(s_labels, "s_atoms")
        j = np.array(joint, dtype=float)
        if j.shape != (len(w_labels), len(s_labels)):
            raise DistributionError(
                "SHAPE_MISMATCH", f"joint has shape {j.shape}, expected {(len(w_labels), len(s_labels))}"
            )
        check_mass(j, "joint")
        j.setflags(write=False)
        object.__setattr__(self, "w_labels", w_labels)
        object.__setattr__(self, "s_labels", s_labels)
        object.__setattr__(self, "joint", j)
        object.__setattr__(self, "w_coords", _as_coords(w_coords, len(w_labels), "w_atoms"))
        object.__setattr__(self, "s_coords", _as_coords(s_coords, len(s_labels), "s_atoms"))
        object.__setattr__(self, "_cache", {})

    @classmethod
    def from_kernel(cls, p_w, kernel, w_labels=None, s_labels=None, w_coords=None, s_coords=None):
        """Build from a W-marginal and a row-stochastic kernel ``P(S | W)``."""
        p_w = np.asarray(p_w, dtype=float)
        kernel = np.asarray(kernel, dtype=float)
        check_mass(p_w, "p_w")
        for i, row in enumerate(kernel):
            check_mass(row, f"kernel row {i}")
        n_w, n_s = kernel.shape
        w_labels = w_labels or [f"w{i}" for i in range(n_w)]
        s_labels = s_labels or [f"s{j}" for j in range(n_s)]
        return cls(w_labels, s_labels, p_w[:, None] * kernel, w_coords, s_coords)

    @property
    def p_w(self) -> np.ndarray:
        if "p_w" not in self._cache:
            self._cache["p_w"] = self.joint.sum(axis=1)
        return self._cache["p_w"]

    @property
    def p_s(self) -> np.ndarray:
        if "p_s" not in self._cache:
            self._cache["p_s"] = self.joint.sum(axis=0)
        return self._cache["p_s"]

    def marginal_w(self) -> DiscreteDistribution:
        return DiscreteDistribution(self.w_labels, _clean(self.p_w), self.w_coords)

    def marginal_s(self) -> DiscreteDistribution:
        return DiscreteDistribution(self.s_labels, _clean(self.p_s), self.s_coords)

    def conditional_s_given_w(self, w) -> DiscreteDistribution:
        """``P(S | W = w)`` for a label or row index; zero-mass rows are refused."""
        i = self.w_labels.index(w) if isinstance(w, str) else int(w)
        mass = self.p_w[i]
        if mass <= 0:
            raise DistributionError("ZERO_MASS_CONDITION", f"W atom {self.w_labels[i]!r} has zero mass")
        return DiscreteDistribution(self.s_labels, _clean(self.joint[i] / mass), self.s_coords)

    def conditional_rows(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Row indices with positive mass, their weights and conditional rows."""
        if "rows" not in self._cache:
            keep = np.flatnonzero(self.p_w > 0)
            weights = self.p_w[keep]
            rows = self.joint[keep] / weights[:, None]
            self._cache["rows"] = (keep, weights, rows)
        return self._cache["rows"]

    def merge_w(self, keys: Sequence, labels: Sequence[str], coords=None) -> "JointChannel":
        """Sum rows that share a key; output rows follow the order of ``labels``.

        ``keys[i]`` is an index into ``labels`` for input row ``i``.
        """
        keys = np.asarray(keys, dtype=int)
        out = np.zeros((len(labels), len(self.s_labels)))
        np.add.at(out, keys, self.joint)
        return JointChannel(labels, self.s_labels, out, coords, self.s_coords)


def _clean(p: np.ndarray) -> np.ndarray:
    # Row normalisation can leave a few ulps of drift; that is not a user error.
    return np.clip(p, 0.0, None)


def product_channel(p_w: DiscreteDistribution, p_s: DiscreteDistribution) -> JointChannel:
    """Independent ``W`` and ``S``."""
    return JointChannel(p_w.labels, p_s.labels, np.outer(p_w.probs, p_s.probs), p_w.coords, p_s.coords)


def deterministic_channel(p_s: DiscreteDistribution) -> JointChannel:
    """``W = S`` with the same atoms and coordinates."""
    return JointChannel(p_s.labels, p_s.labels, np.diag(p_s.probs), p_s.coords, p_s.coords)


@dataclass(frozen=True, eq=False)
class SuperSampleChannel:
    """Joint law of ``(W, S*, U)`` for the super-sample construction.

    ``S*`` is a table of ``m`` pairs of data atoms. ``U`` is encoded as an
    integer in ``[0, 2**m)`` whose bit ``i`` selects column ``U_i`` of pair
    ``i``; the training sample is ``S = (S*_{i, U_i})_i`` and the ghost
    sample is ``S-bar = (S*_{i, 1 - U_i})_i``.

    ``joint[w, s, u] = P(W = w, S* = sstar[s], U = u)``. The marginal of
    ``(S*, U)`` must factor as ``P(S*) * 2**-m``.
    """

    x_labels: tuple[str, ...]
    sstar: np.ndarray
    w_labels: tuple[str, ...]
    joint: np.ndarray
    x_coords: np.ndarray | None = None
    w_coords: np.ndarray | None = None

    def __init__(self, x_labels, sstar, w_labels, joint, x_coords=None, w_coords=None):
        x_labels = _check_labels(x_labels, "x_atoms")
        w_labels = _check_labels(w_labels, "w_atoms")
        ss = np.array(sstar, dtype=int)
        if ss.ndim != 3 or ss.shape[2] != 2:
            raise DistributionError("SHAPE_MISMATCH", f"sstar must have shape (n, m, 2), got {ss.shape}")
        if ss.min() < 0 or ss.max() >= len(x_labels):
            raise DistributionError("BAD_INDEX", "sstar refers to an unknown x atom")
        m = ss.shape[1]
        j = np.array(joint, dtype=float)
        if j.shape != (len(w_labels), ss.shape[0], 2**m):
            raise DistributionError(
                "SHAPE_MISMATCH", f"joint has shape {j.shape}, expected {(len(w_labels), ss.shape[0], 2**m)}"
            )
        check_mass(j, "joint")
        su = j.sum(axis=0)
        p_sstar = su.sum(axis=1)
        if np.max(np.abs(su - p_sstar[:, None] / 2**m)) > MASS_TOL:
            raise DistributionError("U_NOT_UNIFORM", "U must be uniform on {0,1}^m and independent of S*")
        ss.setflags(write=False)
        j.setflags(write=False)
        object.__setattr__(self, "x_labels", x_labels)
        object.__setattr__(self, "sstar", ss)
        object.__setattr__(self, "w_labels", w_labels)
        object.__setattr__(self, "joint", j)
        object.__setattr__(self, "x_coords", _as_coords(x_coords, len(x_labels), "x_atoms"))
        object.__setattr__(self, "w_coords", _as_coords(w_coords, len(w_labels), "w_atoms"))

    @classmethod
    def from_kernel(cls, x_labels, sstar, p_sstar, kernel, w_labels=None, x_coords=None, w_coords=None):
        """Build from ``P(S*)`` and a kernel ``kernel[s, u, w] = P(W = w | S*, U)``."""
        kernel = np.asarray(kernel, dtype=float)
        p_sstar = np.asarray(p_sstar, dtype=float)
        check_mass(p_sstar, "p_sstar")
        n_s, n_u, n_w = kernel.shape
        joint = np.transpose(kernel, (2, 0, 1)) * (p_sstar[None, :, None] / n_u)
        w_labels = w_labels or [f"w{i}" for i in range(n_w)]
        return cls(x_labels, sstar, w_labels, joint, x_coords, w_coords)

    @property
    def m(self) -> int:
        return self.sstar.shape[1]

    @property
    def p_sstar(self) -> np.ndarray:
        return self.joint.sum(axis=(0, 2))

    def selection(self, s: int, u: int, ghost: bool = False) -> tuple[int, ...]:
        """x-atom indices of the training (or ghost) sample for ``S* = s``, ``U = u``."""
        out = []
        for i in range(self.m):
            bit = (u >> i) & 1
            out.append(int(self.sstar[s, i, 1 - bit if ghost else bit]))
        return tuple(out)

    def merge_w(self, keys, labels, coords=None) -> "SuperSampleChannel":
        keys = np.asarray(keys, dtype=int)
        out = np.zeros((len(labels),) + self.joint.shape[1:])
        np.add.at(out, keys, self.joint)
        return SuperSampleChannel(self.x_labels, self.sstar, labels, out, self.x_coords, coords)
