import math
from collections import Counter

import numpy as np
import pytest

from chainbounds.distributions import DiscreteDistribution, SuperSampleChannel, product_channel
from chainbounds.engine import Scaling
from chainbounds.errors import BoundError
from chainbounds.nets import build_nested_dyadic_nets
from chainbounds.presets import evaluate_preset, get_preset, power_constant, preset_catalogue


def test_catalogue_shape():
    cat = preset_catalogue()
    assert len(cat) == 40
    assert len({p.name for p in cat}) == 40
    counts = Counter(p.block for p in cat)
    assert counts == {"full": 8, "per-sample": 12, "super-sample": 8, "per-sample-super-sample": 12}
    assert sum(p.chained for p in cat) == 20


def test_mi_and_chained_w1_rows():
    mi = get_preset("mi")
    assert (mi.block, mi.chained, mi.aggregate, mi.scaling) == ("full", False, "jensen", Scaling.INV_SQRT_M)
    assert str(mi.divergence()) == "SQRT2KL"
    cw = get_preset("chained-w1")
    assert cw.chained and cw.aggregate == "mean" and str(cw.divergence()) == "W1"
    assert get_preset("CHAINED-W1") is cw


def test_flags():
    flagged = {p.name for p in preset_catalogue() if p.flagged}
    assert flagged == {"chained-chi2", "ind-tv", "ind-chained-tv"}
    assert get_preset("ss-chi2").note and not get_preset("ss-chi2").flagged
    assert get_preset("ss-chi2").constant() == 2.0


def test_power_constant():
    assert power_constant(2.0) == pytest.approx(math.exp(1 / math.e) * math.sqrt(2))
    assert get_preset("power").constant(3.0) == pytest.approx(math.exp(1 / math.e) * math.sqrt(1.5))
    assert get_preset("ind-power").constant(3.0) == 1.0


def test_unknown_and_missing():
    with pytest.raises(BoundError) as info:
        get_preset("hellinger")
    assert info.value.code == "UNKNOWN_PRESET"
    with pytest.raises(BoundError) as info:
        evaluate_preset("chained-mi", channel=None)
    assert info.value.code == "MISSING_NET"
    with pytest.raises(BoundError) as info:
        evaluate_preset("mi")
    assert info.value.code == "MISSING_INPUT"


def _product_inputs():
    pw = DiscreteDistribution.from_points([[-0.5], [0.3]], [0.4, 0.6], prefix="w")
    px = DiscreteDistribution.from_points([[0.0], [1.0], [2.5]], [0.2, 0.3, 0.5])
    ch = product_channel(pw, px)
    sstar = [[[0, 1]], [[1, 2]], [[0, 2]]]
    kernel = np.broadcast_to(pw.probs, (3, 2, 2))
    ssc = SuperSampleChannel.from_kernel(px.labels, sstar, [0.5, 0.3, 0.2], kernel, list(pw.labels), px.coords, pw.coords)
    return ch, ssc


@pytest.mark.parametrize("name", [p.name for p in preset_catalogue()])
def test_every_preset_vanishes_on_independent_inputs(name):
    ch, ssc = _product_inputs()
    net = build_nested_dyadic_nets(1, 5)
    rep = evaluate_preset(name, channel=ch, channels=[ch, ch], ssc=ssc, sscs=[ssc, ssc], net=net, k_trunc=5)
    pr = get_preset(name)
    if pr.family == "power":
        # (I^(p) + 1)^(1/p) is 1 for independent inputs, not 0
        assert rep.value > 0
    else:
        assert rep.total == pytest.approx(0.0, abs=1e-12)
    assert rep.preset == pr.name
