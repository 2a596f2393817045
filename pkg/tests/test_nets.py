import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chainbounds.distributions import DiscreteDistribution, deterministic_channel
from chainbounds.errors import ChainBoundsError, NetError
from chainbounds.nets import (
    build_circle_nets,
    build_dyadic_box_nets,
    build_nested_dyadic_nets,
    check_net_axioms,
    coarsen_channel,
    injective_level,
    nets_from_points,
    parse_net_spec,
)
from chainbounds.toy_models import Toy1Config, toy1_channel


def test_anchored_levels():
    net = build_dyadic_box_nets(1, 4)
    np.testing.assert_array_equal(net.points(1)[:, 0], [-1.0, 0.0, 1.0])
    assert net.size(0) == 1 and net.size(3) == 9
    assert net.eps(3) == 0.125
    assert build_dyadic_box_nets(2, 3).eps(0) == pytest.approx(math.sqrt(2))
    assert build_dyadic_box_nets(2, 3).size(2) == 25
    assert float(np.ravel(net.project(0.3, 2))[0]) == 0.5
    assert net.label(1, 0) == "L1:-1"


def test_anchored_tie_goes_low():
    net = build_dyadic_box_nets(1, 3)
    assert float(np.ravel(net.project(0.25, 2))[0]) == 0.0
    assert float(np.ravel(net.project(-0.25, 2))[0]) == -0.5
    assert float(np.ravel(net.project(0.5, 1))[0]) == 0.0


def test_nested_levels():
    net = build_nested_dyadic_nets(1, 3)
    np.testing.assert_allclose(net.points(1)[:, 0], [-0.5, 0.5])
    assert net.size(3) == 8
    assert net.refining


def test_circle_levels():
    net = build_circle_nets(4)
    assert net.size(1) == 2
    np.testing.assert_allclose(net.points(1), [[-1.0, 0.0], [1.0, 0.0]], atol=1e-15)
    assert net.eps(2) == 1.0
    assert not net.refining


def _admissible(points, w, eps):
    d = np.abs(points - w)
    return set(points[d <= eps + 1e-15].tolist())


def test_anchored_rounding_cannot_refine():
    """Every projection obeying the radii on these grids breaks the nesting at 0.5."""
    net = build_dyadic_box_nets(1, 2)
    w1, w2 = net.points(1)[:, 0], net.points(2)[:, 0]
    forced = {}
    for w in (0.3, 0.7):
        (p2,) = _admissible(w2, w, net.eps(2))
        (p1,) = _admissible(w1, w, net.eps(1))
        forced[w] = (p2, p1)
    assert forced[0.3][0] == forced[0.7][0] == 0.5
    assert forced[0.3][1] != forced[0.7][1]
    report = check_net_axioms(net, [[0.3], [0.7]])
    assert report.counts["refining"] >= 1
    assert not net.refining


def test_circle_cannot_refine():
    net = build_circle_nets(3)

    def admissible(k, angle):
        pts = net.points(k)
        p = np.array([math.cos(angle), math.sin(angle)])
        d = np.linalg.norm(pts - p, axis=1)
        ang = np.degrees(np.arctan2(pts[:, 1], pts[:, 0]))
        return set(np.round(ang[d <= net.eps(k) + 1e-15], 9).tolist())

    lo, hi = math.radians(29.2), math.radians(60.8)
    assert admissible(2, lo) == {0.0} and admissible(3, lo) == {45.0}
    assert admissible(2, hi) == {90.0} and admissible(3, hi) == {45.0}
    samples = np.array([[math.cos(lo), math.sin(lo)], [math.cos(hi), math.sin(hi)]])
    assert check_net_axioms(net, samples).counts["refining"] >= 1


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_nested_axioms_hold(dim, depth, seed):
    net = build_nested_dyadic_nets(dim, depth)
    pts = net.sample_domain(500, np.random.default_rng(seed))
    corners = np.array([[-1.0] * dim, [1.0] * dim, [0.0] * dim])
    assert check_net_axioms(net, np.vstack([pts, corners])).ok


def test_toy1_level1_cells():
    net = build_dyadic_box_nets(1, 3)
    cells = net.cells(1)
    assert [c.length / 2 for c in cells] == [0.25, 0.5, 0.25]
    centres = (np.arange(64) + 0.5) / 32 - 1.0
    uniform = DiscreteDistribution.from_points(centres[:, None], np.full(64, 1 / 64))
    ch = coarsen_channel(deterministic_channel(uniform).merge_w(np.arange(64), [f"w{i}" for i in range(64)], centres[:, None]), net, 1)
    np.testing.assert_allclose(ch.p_w, [0.25, 0.5, 0.25], atol=1e-14)


def _coarsening_consistent(net, ch, k):
    direct = coarsen_channel(ch, net, k - 1)
    twice = coarsen_channel(coarsen_channel(ch, net, k), net, k - 1)
    return direct.w_labels == twice.w_labels and np.allclose(direct.joint, twice.joint)


def test_coarsening_consistency():
    ch = toy1_channel(Toy1Config(2))
    nested = build_nested_dyadic_nets(1, 8)
    assert all(_coarsening_consistent(nested, ch, k) for k in range(1, 8))
    anchored = build_dyadic_box_nets(1, 8)
    assert not all(_coarsening_consistent(anchored, ch, k) for k in range(1, 8))


def test_injective_level():
    net = build_nested_dyadic_nets(1, 6)
    assert injective_level(np.array([[-0.9], [0.1], [0.6]]), net) == 2
    assert injective_level(np.array([[0.1]]), net) == 0


def test_nets_from_points_accepts_valid_sequence():
    levels = [[[0.0]], [[-0.5], [0.5]]]
    net = nets_from_points(levels, [1.0, 0.5], domain_samples=np.linspace(-1, 1, 41)[:, None])
    assert net.refining
    assert float(np.ravel(net.project(0.2, 1))[0]) == 0.5


@pytest.mark.parametrize(
    "levels, radii, code",
    [
        ([[[0.0], [1.0]], [[0.0], [1.0]]], [1.0, 0.5], "AXIOM_SINGLETON"),
        ([[[0.0]], [[-0.5], [0.5]]], [1.0, 1.0], "AXIOM_DECREASING"),
        ([[[0.0]], [[-0.5], [0.5]]], [1.0, 0.1], "AXIOM_RADIUS"),
    ],
)
def test_nets_from_points_rejects(levels, radii, code):
    with pytest.raises(NetError) as info:
        nets_from_points(levels, radii, domain_samples=np.linspace(-1, 1, 41)[:, None])
    assert info.value.code == code


def test_nets_from_points_rejects_non_refining():
    levels = [[[0.0]], [[-1.0], [1.0]], [[0.1]]]
    with pytest.raises(NetError) as info:
        nets_from_points(levels, [2.0, 1.5, 1.2], domain_samples=[[-0.05]])
    assert info.value.code == "AXIOM_REFINING"


@pytest.mark.parametrize("text", ["dyadic:1", "circle", "hex:1:2", "dyadic:a:b", "nested-dyadic:0:3"])
def test_bad_net_spec(text):
    with pytest.raises(ChainBoundsError) as info:
        parse_net_spec(text)
    assert info.value.code == "BAD_NET_SPEC"


def test_parse_net_spec():
    assert parse_net_spec("nested-dyadic:2:5").size(5) == 1024
    assert parse_net_spec("circle:6").depth == 6


def test_out_of_domain_and_level_range():
    net = build_dyadic_box_nets(1, 3)
    with pytest.raises(NetError) as info:
        net.project(1.5, 1)
    assert info.value.code == "OUT_OF_DOMAIN"
    with pytest.raises(NetError) as info:
        net.project(0.1, 4)
    assert info.value.code == "LEVEL_OUT_OF_RANGE"
    with pytest.raises(NetError) as info:
        build_circle_nets(3).project([0.2, 0.2], 1)
    assert info.value.code == "OUT_OF_DOMAIN"
