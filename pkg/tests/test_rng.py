import numpy as np
import pytest

from caresim.rng import STREAMS, RngStream, as_generator, year_generator


def test_same_key_same_draws():
    a = RngStream(7, "mortality", 1900).gen.random(5)
    b = RngStream(7, "mortality", 1900).gen.random(5)
    assert np.array_equal(a, b)


def test_streams_and_years_differ():
    base = RngStream(7, "mortality", 1900).gen.random(5)
    assert not np.array_equal(base, RngStream(7, "fertility", 1900).gen.random(5))
    assert not np.array_equal(base, RngStream(7, "mortality", 1901).gen.random(5))
    assert not np.array_equal(base, RngStream(8, "mortality", 1900).gen.random(5))


def test_extra_draws_do_not_shift_other_streams():
    seed = 3
    reference = year_generator(seed, "health", 1950).random(10)
    noisy = year_generator(seed, "allocation", 1950)
    noisy.random(1000)  # a process taking extra draws
    assert np.array_equal(year_generator(seed, "health", 1950).random(10), reference)


def test_child_key_matches_flat_key():
    s = RngStream(1, "allocation", 1990)
    assert np.array_equal(s.child(4).gen.random(3), RngStream(1, "allocation", 1990, 4).gen.random(3))


def test_streams_look_independent():
    a = RngStream(11, "mortality", 2000).gen.random(20_000)
    b = RngStream(11, "fertility", 2000).gen.random(20_000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.03


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_range(seed):
    with pytest.raises(ValueError):
        RngStream(seed, "mortality")


def test_unknown_stream():
    with pytest.raises(ValueError):
        RngStream(0, "weather")


def test_largest_seed_accepted():
    RngStream(2**64 - 1, "mortality").gen.random()


def test_required_streams_present():
    for name in ("mortality", "fertility", "partnership", "divorce", "relocation", "allocation", "health"):
        assert name in STREAMS
    assert len(set(STREAMS.values())) == len(STREAMS)


def test_as_generator():
    g = np.random.default_rng(0)
    assert as_generator(g) is g
    assert isinstance(as_generator(RngStream(0, "init")), np.random.Generator)
    assert isinstance(as_generator(5), np.random.Generator)
