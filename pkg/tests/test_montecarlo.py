import numpy as np
import pytest

from chainbounds.errors import ConfigError
from chainbounds.montecarlo import MCConfig, MCEstimate, chunk_rng, estimate_expectation


def test_uniform_mean():
    est = estimate_expectation(lambda rng, n: rng.uniform(size=n), lambda x: x, MCConfig(50000, seed=2))
    assert est.n == 50000
    assert est.within(0.5)
    assert est.stderr == pytest.approx(np.sqrt(1 / 12 / 50000), rel=0.02)


def test_chunks_are_independent_streams():
    a = chunk_rng(0, 0).uniform(size=4)
    b = chunk_rng(0, 1).uniform(size=4)
    assert not np.allclose(a, b)
    np.testing.assert_array_equal(a, chunk_rng(0, 0).uniform(size=4))


def test_fixed_chunking_is_reproducible():
    cfg = MCConfig(10000, seed=5, chunk_size=777)
    f = lambda rng, n: rng.normal(size=n)
    assert estimate_expectation(f, np.abs, cfg) == estimate_expectation(f, np.abs, cfg)


def test_within():
    assert MCEstimate(1.0, 0.1, 10, 0).within(1.25)
    assert not MCEstimate(1.0, 0.1, 10, 0).within(1.35)


def test_bad_config():
    with pytest.raises(ConfigError):
        MCConfig(10, chunk_size=0)
