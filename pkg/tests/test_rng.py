import numpy as np

from sbmexit.rng import DEFAULT_SEED, stream


def test_streams_are_reproducible_and_distinct():
    a = stream(DEFAULT_SEED, "particle", 3).random(5)
    assert np.array_equal(a, stream(DEFAULT_SEED, "particle", 3).random(5))
    assert not np.array_equal(a, stream(DEFAULT_SEED, "particle", 4).random(5))
    assert not np.array_equal(a, stream(DEFAULT_SEED, "bessel", 3).random(5))
    assert not np.array_equal(a, stream(DEFAULT_SEED + 1, "particle", 3).random(5))


def test_tuple_keys_flatten():
    x = stream(1, "verify", (2, 5)).random(3)
    assert np.array_equal(x, stream(1, "verify", ((2,), 5)).random(3))
    assert not np.array_equal(x, stream(1, "verify", (5, 2)).random(3))
