import numpy as np
import pytest
from hypothesis import strategies as st

from chainbounds.distributions import DiscreteDistribution, JointChannel


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def prob_vectors(n_min=2, n_max=6, positive=True):
    """Hypothesis strategy: normalised probability vectors."""
    lo = 1e-3 if positive else 0.0

    @st.composite
    def build(draw):
        n = draw(st.integers(n_min, n_max))
        raw = draw(st.lists(st.floats(lo, 1.0), min_size=n, max_size=n))
        raw = np.asarray(raw, dtype=float)
        if raw.sum() <= 0:
            raw[0] = 1.0
        return raw / raw.sum()

    return build()


@st.composite
def joint_matrices(draw, max_w=5, max_s=5):
    n_w = draw(st.integers(1, max_w))
    n_s = draw(st.integers(1, max_s))
    cells = draw(st.lists(st.floats(1e-3, 1.0), min_size=n_w * n_s, max_size=n_w * n_s))
    j = np.asarray(cells).reshape(n_w, n_s)
    return j / j.sum()


def make_channel(joint, w_coords=None, s_coords=None):
    joint = np.asarray(joint, dtype=float)
    n_w, n_s = joint.shape
    if w_coords is None:
        w_coords = np.arange(n_w, dtype=float)[:, None]
    if s_coords is None:
        s_coords = np.arange(n_s, dtype=float)[:, None]
    return JointChannel([f"w{i}" for i in range(n_w)], [f"s{j}" for j in range(n_s)], joint, w_coords, s_coords)


def dist(probs, coords=None):
    probs = np.asarray(probs, dtype=float)
    return DiscreteDistribution([f"a{i}" for i in range(len(probs))], probs, coords)
