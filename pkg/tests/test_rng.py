"""The counter generator against a plain-Python mirror of its documented
algorithm, plus distribution sanity checks."""

import numpy as np
import pytest

from bigcs import rng
from bigcs.errors import DomainError

MASK = (1 << 64) - 1


def mirror_mix64(z):
    z &= MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return (z ^ (z >> 31)) & MASK


def mirror_output(seed, i):
    return mirror_mix64((seed + i * 0x9E3779B97F4A7C15) & MASK)


@pytest.mark.parametrize("seed", [0, 1, 42, 0xDEADBEEF, MASK])
def test_outputs_match_scalar_mirror(seed):
    got = rng.outputs(seed, 20)
    want = [mirror_output(seed, i) for i in range(1, 21)]
    assert got.dtype == np.uint64
    assert got.tolist() == want


def test_outputs_with_offset_counter():
    seed = 7
    got = rng.outputs(seed, 5, start=1000)
    want = [mirror_output(seed, i) for i in range(1000, 1005)]
    assert got.tolist() == want


def test_derive_seed_is_kth_output():
    assert rng.derive_seed(99, 1) == mirror_output(99, 1)
    assert rng.derive_seed(99, 2) == mirror_output(99, 2)
    assert rng.derive_seed(99, 1) != rng.derive_seed(99, 2)
    with pytest.raises(DomainError):
        rng.derive_seed(99, 0)


def test_uniforms_range_and_determinism():
    u = rng.uniforms(3, 10000)
    assert u.dtype == np.float64
    assert np.all(u >= 0) and np.all(u < 1)
    assert np.array_equal(u, rng.uniforms(3, 10000))
    # 53-bit conversion of the mirrored stream
    want = [(mirror_output(3, i) >> 11) * 2.0**-53 for i in range(1, 6)]
    assert u[:5].tolist() == want
    # crude uniformity: mean near 1/2, spread near 1/12
    assert abs(u.mean() - 0.5) < 0.02
    assert abs(u.var() - 1.0 / 12.0) < 0.01


def mirror_permutation(n, seed):
    p = list(range(n))
    for t in range(n - 1):
        i = n - 1 - t
        j = mirror_output(seed, t + 1) % (i + 1)
        p[i], p[j] = p[j], p[i]
    return p


def test_permutation_matches_mirror():
    for n, seed in [(1, 0), (2, 5), (10, 7), (257, 42)]:
        assert rng.permutation(n, seed).tolist() == mirror_permutation(n, seed)


def test_permutation_is_a_permutation():
    p = rng.permutation(4096, 11)
    assert np.array_equal(np.sort(p), np.arange(4096))
    assert not np.array_equal(p, np.arange(4096))


def test_permutation_edges():
    assert rng.permutation(0, 1).tolist() == []
    assert rng.permutation(1, 1).tolist() == [0]
    with pytest.raises(DomainError):
        rng.permutation(-1, 1)


def test_permutation_seed_sensitivity():
    assert not np.array_equal(rng.permutation(64, 1), rng.permutation(64, 2))


def test_permutation_position_uniformity():
    # Where does element 0 land? Should be roughly uniform across seeds.
    n, trials = 16, 4000
    counts = np.zeros(n)
    for seed in range(trials):
        p = rng.permutation(n, seed)
        counts[int(np.nonzero(p == 0)[0][0])] += 1
    expected = trials / n
    assert np.all(np.abs(counts - expected) < 5 * np.sqrt(expected))


def mirror_subset(n, m, seed):
    pool = list(range(n))
    for i in range(m):
        j = i + mirror_output(seed, i + 1) % (n - i)
        pool[i], pool[j] = pool[j], pool[i]
    return sorted(pool[:m])


def test_subset_matches_mirror():
    for n, m, seed in [(10, 3, 0), (100, 100, 1), (257, 64, 9)]:
        assert rng.subset(n, m, seed).tolist() == mirror_subset(n, m, seed)


def test_subset_properties():
    s = rng.subset(4096, 1024, 3)
    assert s.size == 1024
    assert np.all(np.diff(s) > 0)
    assert s[0] >= 0 and s[-1] < 4096
    assert np.array_equal(rng.subset(50, 50, 8), np.arange(50))
    assert rng.subset(5, 0, 1).size == 0
    with pytest.raises(DomainError):
        rng.subset(5, 6, 1)
