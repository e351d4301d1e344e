import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from eroders import rng


def test_site_hashes_depend_only_on_coordinates():
    big = rng.site_hashes((-5, -5), (20, 30))
    small = rng.site_hashes((2, 7), (4, 3))
    assert np.array_equal(big[7:11, 12:15], small)
    assert len(np.unique(big)) == big.size


def test_word_keys_are_per_word():
    a = rng.word_keys(1, rng.NOISE, 3, 0, [0, 1, 2])
    b = rng.word_keys(1, rng.NOISE, 3, 0, [2])
    assert a[2] == b[0] and len(set(a.tolist())) == 3


def test_bernoulli_frequency():
    sites = rng.site_hashes((0, 0), (64, 64))
    words = rng.bernoulli_words(sites, 11, 0, range(8), 0.3)
    n = words.size * 64
    p = rng.popcount(words) / n
    assert abs(p - 0.3) < 4 * np.sqrt(0.3 * 0.7 / n)


def test_extremes():
    sites = rng.site_hashes((0,), (10,))
    assert rng.popcount(rng.bernoulli_words(sites, 1, 0, [0], 0.0)) == 0
    assert rng.popcount(rng.bernoulli_words(sites, 1, 0, [0], 1.0)) == 640
    assert rng.effective_epsilon(0.25) == 0.25
    assert abs(rng.effective_epsilon(0.1) - 0.1) < 2**-32


@given(st.floats(0, 1), st.floats(0, 1), st.integers(0, 2**64 - 1))
@settings(max_examples=60, deadline=None)
def test_bernoulli_monotone_in_eps(e1, e2, seed):
    lo, hi = sorted((e1, e2))
    sites = rng.site_hashes((0, 0), (6, 6))
    a = rng.bernoulli_words(sites, seed, 4, [0, 5], lo)
    b = rng.bernoulli_words(sites, seed, 4, [0, 5], hi)
    assert not np.any(a & ~b)


def test_replica_bits_match_words():
    sites = rng.site_hashes((3, -2), (5, 5))
    words = rng.bernoulli_words(sites, 9, 2, [0, 1], 0.4)
    for replica in (0, 17, 63, 64, 100):
        bits = rng.replica_bits(sites, 9, 2, replica, 0.4)
        w, b = divmod(replica, 64)
        assert np.array_equal(bits, ((words[..., w] >> np.uint64(b)) & np.uint64(1)).astype(bool))


def test_uniforms_range_and_reproducibility():
    sites = rng.site_hashes((0, 0), (50, 50))
    u = rng.uniforms(sites, 3, 1, 0)
    assert np.all((u >= 0) & (u < 1))
    assert np.array_equal(u, rng.uniforms(sites, 3, 1, 0))
    assert not np.array_equal(u, rng.uniforms(sites, 3, 1, 1))
    assert abs(u.mean() - 0.5) < 0.02
