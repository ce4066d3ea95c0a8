import numpy as np

from opeval.seeding import CounterStream, mix64, mix64_array, normal_block, uniform_block


def test_mix64_deterministic_and_sensitive():
    assert mix64(1, 2, 3) == mix64(1, 2, 3)
    assert mix64(1, 2, 3) != mix64(1, 2, 4)
    assert mix64(1, 2, 3) != mix64(1, 3, 2)
    assert 0 <= mix64(0) < 2**64


def test_mix64_array_matches_scalar():
    idx = np.arange(17)
    vec = mix64_array((42, 7), idx)
    for i in idx:
        assert int(vec[i]) == mix64(42, 7, int(i))


def test_counter_stream_blocks_match():
    seed = mix64(5)
    stream = CounterStream(seed)
    first = stream.uniform(10)
    second = stream.uniform(10)
    blocks = uniform_block(np.array([seed], dtype=np.uint64), 10, block=0)[0]
    blocks2 = uniform_block(np.array([seed], dtype=np.uint64), 10, block=1)[0]
    np.testing.assert_array_equal(first, blocks)
    np.testing.assert_array_equal(second, blocks2)


def test_uniform_range_and_normal_finite():
    u = uniform_block(mix64_array((1,), np.arange(100)), 50)
    assert np.all((u >= 0) & (u < 1))
    z = normal_block(mix64_array((1,), np.arange(10)), 1000)
    assert np.all(np.isfinite(z))
    assert abs(z.mean()) < 0.05
    assert abs(z.std() - 1.0) < 0.05


def test_streams_independent_of_chunking():
    seeds = mix64_array((9,), np.arange(8))
    whole = uniform_block(seeds, 20)
    parts = np.vstack([uniform_block(seeds[i : i + 1], 20)[0] for i in range(8)])
    np.testing.assert_array_equal(whole, parts)
