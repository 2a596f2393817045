"""Named bound recipes: divergence, aggregate, scaling and constant for each tabulated bound.

Each preset is evaluated with ``xi`` in front; the tabulated expressions
are written for ``xi = 1``. Where the tabulated constant disagrees with
the statement it summarises, the engine follows the statement and the
preset carries ``flagged=True`` with an explanatory ``note``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .divergences import CHI2_SQRT, LAUTUM_SQRT2, SQRT2KL, TV2, W1, DivergenceKind, POWER
from .engine import (
    BoundReport,
    BoundSpec,
    Scaling,
    chained_bound,
    per_sample_bound,
    per_sample_supersample_bound,
    supersample_bound,
    unchained_bound,
)
from .errors import BoundError

BLOCKS = ("full", "per-sample", "super-sample", "per-sample-super-sample")
_PREFIX = {"full": "", "per-sample": "ind-", "super-sample": "ss-", "per-sample-super-sample": "ind-ss-"}


def power_constant(p: float) -> float:
    """``e^(1/e) sqrt(p / (p - 1))``."""
    return math.exp(1.0 / math.e) * math.sqrt(p / (p - 1.0))


@dataclass(frozen=True)
class Preset:
    name: str
    block: str
    family: str
    chained: bool
    aggregate: str
    scaling: Scaling
    tabulated: str
    divergence_factory: Callable[[float], DivergenceKind]
    constant_factory: Callable[[float], float]
    flagged: bool = False
    note: str | None = None

    def divergence(self, p: float = 2.0) -> DivergenceKind:
        return self.divergence_factory(p)

    def constant(self, p: float = 2.0) -> float:
        return self.constant_factory(p)

    def spec(self, xi: float = 1.0, m: int = 1, p: float = 2.0) -> BoundSpec:
        return BoundSpec(
            self.divergence(p), xi=xi, m=m, scaling=self.scaling, constant=self.constant(p), aggregate=self.aggregate
        )

    def describe(self) -> dict:
        return {
            "name": self.name,
            "block": self.block,
            "family": self.family,
            "chained": self.chained,
            "aggregate": self.aggregate,
            "scaling": self.scaling.value,
            "tabulated": self.tabulated,
            "flagged": self.flagged,
            "note": self.note,
        }


def _one(p: float) -> float:
    return 1.0


def _two(p: float) -> float:
    return 2.0


def _const(kind: DivergenceKind):
    return lambda p: kind


def _rows() -> list[Preset]:
    out: list[Preset] = []

    def add(block, family, div, aggregate, scaling, plain, chained, constant=_one, notes=(None, None)):
        for is_chained, text, note in ((False, plain, notes[0]), (True, chained, notes[1])):
            name = _PREFIX[block] + ("chained-" if is_chained else "") + family
            out.append(
                Preset(
                    name, block, family, is_chained, aggregate, scaling, text, div, constant,
                    flagged=note is not None and note.startswith("!"), note=note.lstrip("!") if note else None,
                )
            )

    sq, m_ = Scaling.INV_SQRT_M, Scaling.INV_M
    power = POWER
    # full sample
    add("full", "mi", _const(SQRT2KL), "jensen", sq,
        "sqrt(2 I(W;S)/m)", "sum_k eps_{k-1} sqrt(2 I(W_k;S)/m)")
    add("full", "w1", _const(W1), "mean", sq,
        "E[W(P_S, P_{S|W})]/sqrt(m)", "sum_k eps_{k-1} E[W(P_S, P_{S|W_k})]/sqrt(m)")
    add("full", "power", power, "jensen", sq,
        "e^(1/e) sqrt(p) (I^(p)(W;S)+1)^(1/p)/sqrt(m(p-1))",
        "e^(1/e) sqrt(p) sum_k eps_{k-1} (I^(p)(W_k;S)+1)^(1/p)/sqrt(m(p-1))", power_constant)
    add("full", "chi2", _const(CHI2_SQRT), "mean", sq,
        "E[chi2(P_{S|W}||P_S)^(1/2)]/sqrt(m)", "sum_k eps_{k-1} E[chi2(P_{S|W}||P_S)^(1/2)]/sqrt(m)",
        notes=(None, "!tabulated summand conditions on W instead of W_k; the engine uses W_k as in the statement"))
    # individual samples
    add("per-sample", "mi", _const(SQRT2KL), "jensen", m_,
        "sum_i sqrt(2 I(W;X_i))/m", "sum_i sum_k eps_{k-1} sqrt(2 I(W_k;X_i))/m")
    add("per-sample", "w1", _const(W1), "mean", m_,
        "sum_i E[W(P_X, P_{X_i|W})]/m", "sum_i sum_k eps_{k-1} E[W(P_X, P_{X_i|W_k})]/m")
    add("per-sample", "power", power, "jensen", m_,
        "sum_i (I^(p)(W;X_i)+1)^(1/p)/m", "sum_i sum_k eps_{k-1} (I^(p)(W_k;X_i)+1)^(1/p)/m")
    add("per-sample", "chi2", _const(CHI2_SQRT), "mean", m_,
        "sum_i E[chi2(P_{X_i|W}||P_X)^(1/2)]/m", "sum_i sum_k eps_{k-1} E[chi2(P_{X_i|W_k}||P_X)^(1/2)]/m")
    tv_note = "!tabulated constant is 1 but the statement has 2 xi/m; the engine uses 2 TV"
    add("per-sample", "tv", _const(TV2), "mean", m_,
        "sum_i E[TV(P_X, P_{X_i|W})]/m", "sum_i sum_k eps_{k-1} E[TV(P_X, P_{X_i|W_k})]/m", notes=(tv_note, tv_note))
    add("per-sample", "lautum", _const(LAUTUM_SQRT2), "jensen", m_,
        "sum_i sqrt(2 L(W;X_i))/m", "sum_i sum_k eps_{k-1} sqrt(2 L(W_k;X_i))/m")
    # super-sample
    add("super-sample", "mi", _const(SQRT2KL), "jensen", sq,
        "2 sqrt(2 I(W;S|S*)/m)", "2 sum_k eps_{k-1} sqrt(2 I(W_k;S|S*)/m)")
    add("super-sample", "w1", _const(W1), "mean", sq,
        "E[W(P_{S|S*}, P_{S|W,S*}) + ...]/sqrt(m)", "sum_k eps_{k-1} E[W(P_{S|S*}, P_{S|W_k,S*}) + ...]/sqrt(m)")
    add("super-sample", "power", power, "jensen", sq,
        "2 e^(1/e) sqrt(p) (I^(p)(W;S|S*)+1)^(1/p)/sqrt(m(p-1))",
        "2 e^(1/e) sqrt(p) sum_k eps_{k-1} (I^(p)(W_k;S|S*)+1)^(1/p)/sqrt(m(p-1))", power_constant)
    chi_note = "explicit factor 2 on top of the two-half sum; the per-sample super-sample chi2 rows carry none"
    add("super-sample", "chi2", _const(CHI2_SQRT), "mean", sq,
        "2 E[chi2(P_{S|W,S*}||P_{S|S*})^(1/2) + ...]/sqrt(m)",
        "2 sum_k eps_{k-1} E[chi2(P_{S|W_k,S*}||P_{S|S*})^(1/2) + ...]/sqrt(m)", _two, (chi_note, chi_note))
    # individual samples of a super-sample
    add("per-sample-super-sample", "mi", _const(SQRT2KL), "jensen", m_,
        "2 sum_i sqrt(2 I(W;X_i|X_i*))/m", "2 sum_i sum_k eps_{k-1} sqrt(2 I(W_k;X_i|X_i*))/m")
    add("per-sample-super-sample", "w1", _const(W1), "mean", m_,
        "sum_i E[W(P_{X_i|X_i*}, P_{X_i|W,X_i*}) + ...]/m",
        "sum_i sum_k eps_{k-1} E[W(P_{X_i|X_i*}, P_{X_i|W_k,X_i*}) + ...]/m")
    add("per-sample-super-sample", "power", power, "jensen", m_,
        "2 sum_i (I^(p)(W;X_i|X_i*)+1)^(1/p)/m", "2 sum_i sum_k eps_{k-1} (I^(p)(W_k;X_i|X_i*)+1)^(1/p)/m")
    add("per-sample-super-sample", "chi2", _const(CHI2_SQRT), "mean", m_,
        "sum_i E[chi2(P_{X_i|W,X_i*}||P_{X_i|X_i*})^(1/2) + ...]/m",
        "sum_i sum_k eps_{k-1} E[chi2(P_{X_i|W_k,X_i*}||P_{X_i|X_i*})^(1/2) + ...]/m")
    add("per-sample-super-sample", "tv", _const(TV2), "mean", m_,
        "2 sum_i E[TV(P_{X_i|X_i*}, P_{X_i|W,X_i*}) + ...]/m",
        "2 sum_i sum_k eps_{k-1} E[TV(P_{X_i|X_i*}, P_{X_i|W_k,X_i*}) + ...]/m")
    add("per-sample-super-sample", "lautum", _const(LAUTUM_SQRT2), "jensen", m_,
        "2 sum_i sqrt(2 L(W;X_i|X_i*))/m", "2 sum_i sum_k eps_{k-1} sqrt(2 L(W_k;X_i|X_i*))/m")
    return out


_CATALOGUE: tuple[Preset, ...] = tuple(_rows())
_BY_NAME = {p.name: p for p in _CATALOGUE}


def preset_catalogue() -> tuple[Preset, ...]:
    return _CATALOGUE


def get_preset(name: str) -> Preset:
    key = name.strip().lower()
    if key not in _BY_NAME:
        raise BoundError("UNKNOWN_PRESET", f"{name!r}; known presets: {', '.join(_BY_NAME)}")
    return _BY_NAME[key]


def evaluate_preset(
    name: str,
    *,
    channel=None,
    channels=None,
    ssc=None,
    sscs=None,
    net=None,
    k_trunc: int | None = None,
    xi: float = 1.0,
    m: int | None = None,
    p: float = 2.0,
) -> BoundReport:
    """Evaluate a preset on the data structure its block expects.

    ``full`` takes ``channel`` (and ``m``, default 1), ``per-sample`` a list
    ``channels``, ``super-sample`` a :class:`SuperSampleChannel` ``ssc`` and
    ``per-sample-super-sample`` a list ``sscs`` of one-pair super-samples.
    Chained presets also need ``net`` and ``k_trunc``.
    """
    pr = get_preset(name)
    if pr.chained and (net is None or k_trunc is None):
        raise BoundError("MISSING_NET", f"preset {pr.name} needs a net and a truncation level")
    level_args = (net, k_trunc) if pr.chained else (None, None)

    def need(x, what):
        if x is None:
            raise BoundError("MISSING_INPUT", f"preset {pr.name} needs {what}")
        return x

    if pr.block == "full":
        ch = need(channel, "a joint channel")
        spec = pr.spec(xi, m or 1, p)
        rep = chained_bound(ch, net, k_trunc, spec) if pr.chained else unchained_bound(ch, spec)
    elif pr.block == "per-sample":
        chs = need(channels, "a list of per-sample channels")
        rep = per_sample_bound(chs, pr.spec(xi, len(chs), p), *level_args)
    elif pr.block == "super-sample":
        s = need(ssc, "a super-sample channel")
        rep = supersample_bound(s, pr.spec(xi, s.m, p), *level_args)
    else:
        ss = need(sscs, "a list of one-pair super-sample channels")
        rep = per_sample_supersample_bound(ss, pr.spec(xi, len(ss), p), *level_args)
    rep.preset = pr.name
    rep.metadata["preset"] = pr.describe()
    return rep
