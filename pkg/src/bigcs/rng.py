"""Deterministic counter-based randomness.

All random structure in this package (row subsets, permutations, probe
vectors) is derived from a single 64-bit seed through the SplitMix64
finalizer, evaluated in counter mode:

    out(seed, i) = mix64((seed + i * 0x9E3779B97F4A7C15) mod 2**64)

where mix64 is the xor-shift/multiply finalizer with constants
0xBF58476D1CE4E5B9 and 0x94D049BB133111EB and shifts 30, 27, 31.  The
generator is stateless: output i can be produced without producing the
first i-1 outputs, which keeps every consumer reproducible bit for bit
across platforms and numpy versions.  Nothing here touches numpy's global
random state.

Sub-streams are split by `derive_seed(seed, k)`, so independent consumers
(row selector, permutation) never share counters.
"""

import numpy as np

from .errors import DomainError

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


def mix64(z):
    """SplitMix64 finalizer applied elementwise to a uint64 array."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def outputs(seed, count, start=1):
    """Outputs start .. start+count-1 of the stream for `seed`, as uint64."""
    if count < 0:
        raise DomainError("output count must be nonnegative")
    idx = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(np.uint64(seed) + idx * _GOLDEN)


def derive_seed(seed, k):
    """Sub-seed k of `seed` (output k of the stream), as a Python int.

    k = 1 feeds the row selector, k = 2 the permutation; other consumers
    pick fresh k values so streams never collide.
    """
    if k < 1:
        raise DomainError("sub-seed index must be >= 1")
    return int(outputs(seed, 1, start=k)[0])


def uniforms(seed, count, start=1):
    """float64 samples in [0, 1), one per counter, 53-bit resolution."""
    return (outputs(seed, count, start=start) >> np.uint64(11)) * 2.0**-53


def permutation(n, seed):
    """Uniform random permutation of range(n) by a downward Fisher-Yates pass.

    Pass t (t = 0 .. n-2) swaps position i = n-1-t with position
    j = out(seed, t+1) mod (i+1).  The modulo reduction carries a bias of
    less than (i+1)/2**64 per draw, which is negligible for any image this
    package can hold, and keeps the construction branch-free and portable.

    Returns an int64 array p meant to be used as `x[p]`.
    """
    if n < 0:
        raise DomainError("permutation size must be nonnegative")
    p = list(range(n))
    if n < 2:
        return np.asarray(p, dtype=np.int64)
    draws = outputs(seed, n - 1).tolist()
    for t, r in enumerate(draws):
        i = n - 1 - t
        j = r % (i + 1)
        p[i], p[j] = p[j], p[i]
    return np.asarray(p, dtype=np.int64)


def subset(n, m, seed):
    """m distinct indices from range(n), ascending, as int64.

    A partial Fisher-Yates pass: step i (i = 0 .. m-1) swaps position i
    with position j = i + (out(seed, i+1) mod (n-i)); the first m slots
    are then a uniform m-subset and are returned sorted.
    """
    if not 0 <= m <= n:
        raise DomainError("subset size must satisfy 0 <= m <= n")
    if m == 0:
        return np.empty(0, dtype=np.int64)
    pool = list(range(n))
    draws = outputs(seed, m).tolist()
    for i, r in enumerate(draws):
        j = i + r % (n - i)
        pool[i], pool[j] = pool[j], pool[i]
    out = np.asarray(pool[:m], dtype=np.int64)
    out.sort()
    return out
