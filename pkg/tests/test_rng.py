import numpy as np
from scipy import stats as sps

from graph_coupler.rng import SharedRandomness, derive_key, mix64, mix64_array


def test_mix64_scalar_matches_vector():
    xs = [0, 1, 2 ** 63, 2 ** 64 - 1, 123456789]
    vec = mix64_array(np.array(xs, dtype=np.uint64))
    assert [int(v) for v in vec] == [mix64(x) for x in xs]


def test_mix64_reference_value():
    # splitmix64 finalizer of 0 is 0; of 1 the published constant chain gives this value
    assert mix64(0) == 0
    z = 1
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) % 2 ** 64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) % 2 ** 64
    assert mix64(1) == z ^ (z >> 31)


def test_derive_key_is_path_sensitive():
    assert derive_key(1, 2) != derive_key(2, 1)
    assert derive_key(1, 2) == derive_key(1, 2)
    assert derive_key(5) != derive_key(5, 0)


def test_same_key_same_uniforms():
    a, b = SharedRandomness(42, 100), SharedRandomness(42, 100)
    assert [a.stub_uniform(t) for t in range(50)] == [b.stub_uniform(t) for t in range(50)]
    assert np.array_equal(a.pair_row(7), b.pair_row(7))
    assert np.array_equal(a.out_row(3), b.out_row(3))
    assert np.array_equal(a.aux.random(10), b.aux.random(10))


def test_pair_uniforms_symmetric_and_consistent():
    r = SharedRandomness(9, 50)
    row3, row8 = r.pair_row(3), r.pair_row(8)
    assert row3[8] == row8[3] == r.pair_uniform(3, 8) == r.pair_uniform(8, 3)


def test_ordered_uniforms_consistent():
    r = SharedRandomness(9, 50)
    assert r.out_row(4)[11] == r.in_col(11)[4] == r.ordered_uniform(4, 11)
    assert r.ordered_uniform(4, 11) != r.ordered_uniform(11, 4)


def test_streams_share_pairs_not_stubs():
    r = SharedRandomness(3, 20)
    s = r.for_stream(1)
    assert np.array_equal(r.pair_row(2), s.pair_row(2))
    assert r.stub_uniform(0) != s.stub_uniform(0)
    assert r.aux.random() != s.aux.random()


def test_uniforms_look_uniform():
    r = SharedRandomness(11, 2000)
    stubs = np.array([r.stub_uniform(t) for t in range(20000)])
    assert sps.kstest(stubs, "uniform").pvalue > 1e-3
    rows = np.concatenate([r.pair_row(i)[i + 1:] for i in range(0, 2000, 50)])
    assert sps.kstest(rows, "uniform").pvalue > 1e-3
    assert np.all((rows >= 0) & (rows < 1))


def test_pair_uniforms_uncorrelated_across_rows():
    r = SharedRandomness(12, 5000)
    a, b = r.pair_row(10), r.pair_row(11)
    assert abs(np.corrcoef(a, b)[0, 1]) < 4 / np.sqrt(5000)
