import numpy as np

from braids.rng import spawn_seed, substream


def test_substream_deterministic():
    a = substream(42, "fit", 3).standard_normal(5)
    b = substream(42, "fit", 3).standard_normal(5)
    assert np.array_equal(a, b)


def test_substreams_differ_by_name():
    a = substream(42, "fit").standard_normal(5)
    b = substream(42, "search").standard_normal(5)
    c = substream(43, "fit").standard_normal(5)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_substreams_differ_by_index():
    draws = {tuple(substream(7, "rep", i).standard_normal(3)) for i in range(20)}
    assert len(draws) == 20


def test_spawn_seed_range_and_determinism():
    s = spawn_seed(0, "rules", 2)
    assert 0 <= s < 2**31 - 1
    assert s == spawn_seed(0, "rules", 2)
    assert s != spawn_seed(0, "rules", 3)
