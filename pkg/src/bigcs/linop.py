"""Matrix-free linear operators and the structurally random measurement map.

An operator here is a pair of callables (forward, adjoint) with declared
dimensions and a declared storage footprint in scalars.  Nothing in this
module ever forms a dense matrix except `materialize`, which exists only as
a test oracle and refuses to run past a hard size cap.

The measurement map is the three-factor product

    Phi = D F R

applied right to left: R permutes the n input samples uniformly at random,
F is the orthonormal type-II DCT, and D keeps m of the n transformed
coordinates (chosen uniformly, emitted in ascending order).  Each factor is
O(n) or O(n log n) to apply and needs at most n stored scalars, so Phi costs
m + 2n scalars of state and never materializes anything n by n.  Rows of
Phi are orthonormal: Phi Phi^T = I_m.
"""

import os
from dataclasses import dataclass

import numpy as np
import scipy.fft

from . import rng
from .errors import DomainError, ShapeError

# Hard cap on the column count materialize() will densify.
MATERIALIZE_CAP = 4096


class LinearOperator:
    """A linear map R^cols -> R^rows given by matching forward/adjoint closures.

    Applications never mutate internal state, so one operator can be shared
    freely between solver stages.  `storage_scalars` is the number of scalars
    the operator holds onto (index sets, filter state), used by the memory
    accounting tests and the bench report.
    """

    __slots__ = ("rows", "cols", "_forward", "_adjoint", "storage_scalars")

    def __init__(self, rows, cols, forward, adjoint, storage_scalars=0):
        if rows < 0 or cols < 0:
            raise ShapeError("operator dimensions must be nonnegative")
        self.rows = int(rows)
        self.cols = int(cols)
        self._forward = forward
        self._adjoint = adjoint
        self.storage_scalars = int(storage_scalars)

    @property
    def shape(self):
        return (self.rows, self.cols)

    def _check(self, x, length, side):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] != length:
            raise ShapeError(
                f"{side} expects a vector of length {length}, got shape {x.shape}"
            )
        return x

    def forward(self, x):
        """Apply the operator: a vector of length cols -> length rows."""
        return self._forward(self._check(x, self.cols, "forward"))

    def adjoint(self, y):
        """Apply the transpose: a vector of length rows -> length cols."""
        return self._adjoint(self._check(y, self.rows, "adjoint"))


@dataclass(frozen=True)
class SrmSpec:
    """Parameters that fully determine one measurement map.

    n is the signal length (a vectorized N x N image), m the measurement
    count with 0 < m <= n, and seed the 64-bit key from which both random
    factors are split: sub-seed 1 drives the row subset, sub-seed 2 the
    permutation.
    """

    n: int
    m: int
    seed: int

    def __post_init__(self):
        if self.n < 1:
            raise ShapeError("signal length must be positive")
        if not 0 < self.m <= self.n:
            raise DomainError("measurement count must satisfy 0 < m <= n")


def identity_op(n):
    """The identity on R^n."""
    return LinearOperator(n, n, lambda x: x.copy(), lambda y: y.copy())


def _fft_workers():
    """Worker-thread count for the FFT backend, from BIGCS_THREADS."""
    raw = os.environ.get("BIGCS_THREADS", "").strip()
    if not raw:
        return 1
    try:
        workers = int(raw)
    except ValueError as exc:
        raise DomainError(f"BIGCS_THREADS must be an integer, got {raw!r}") from exc
    if workers < 1:
        raise DomainError("BIGCS_THREADS must be at least 1")
    return workers


def dct_op(n):
    """Orthonormal type-II DCT on R^n; the adjoint is its inverse."""
    if n < 1:
        raise ShapeError("transform length must be positive")
    workers = _fft_workers()

    def forward(x):
        return scipy.fft.dct(x, type=2, norm="ortho", workers=workers)

    def adjoint(y):
        return scipy.fft.idct(y, type=2, norm="ortho", workers=workers)

    return LinearOperator(n, n, forward, adjoint, storage_scalars=n)


def perm_op(n, seed):
    """Uniform random permutation of coordinates, drawn from `seed`.

    The adjoint scatters back through the same index table (the inverse
    permutation is never stored).
    """
    p = rng.permutation(n, seed)

    def forward(x):
        return x[p]

    def adjoint(y):
        z = np.empty(n, dtype=np.float64)
        z[p] = y
        return z

    return LinearOperator(n, n, forward, adjoint, storage_scalars=n)


def subsample_op(n, m, seed):
    """Keep m of n coordinates, chosen uniformly from `seed`, ascending.

    The adjoint zero-fills the dropped coordinates.  With m = n this is the
    identity (the subset is all of range(n), sorted).
    """
    if not 0 < m <= n:
        raise DomainError("subsample count must satisfy 0 < m <= n")
    idx = rng.subset(n, m, seed)

    def forward(x):
        return x[idx]

    def adjoint(y):
        z = np.zeros(n, dtype=np.float64)
        z[idx] = y
        return z

    return LinearOperator(m, n, forward, adjoint, storage_scalars=m)


def diag_op(w):
    """Multiplication by a positive diagonal; self-adjoint."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1:
        raise ShapeError("diagonal must be a vector")
    if not np.all(w > 0) or not np.all(np.isfinite(w)):
        raise DomainError("diagonal entries must be finite and positive")
    w = w.copy()

    def apply(x):
        return w * x

    return LinearOperator(w.size, w.size, apply, apply, storage_scalars=w.size)


def compose(ops):
    """Product of operators, applied right to left: compose([A, B]) is A B.

    Dimensions must chain; the storage footprint is the sum of the parts.
    """
    ops = list(ops)
    if not ops:
        raise ShapeError("compose needs at least one operator")
    for left, right in zip(ops, ops[1:]):
        if left.cols != right.rows:
            raise ShapeError(
                f"cannot chain {left.shape} after {right.shape}: "
                f"{left.cols} != {right.rows}"
            )

    def forward(x):
        for op in reversed(ops):
            x = op.forward(x)
        return x

    def adjoint(y):
        for op in ops:
            y = op.adjoint(y)
        return y

    return LinearOperator(
        ops[0].rows,
        ops[-1].cols,
        forward,
        adjoint,
        storage_scalars=sum(op.storage_scalars for op in ops),
    )


def srm_op(spec):
    """The measurement map Phi = D F R for the given SrmSpec."""
    return compose(
        [
            subsample_op(spec.n, spec.m, rng.derive_seed(spec.seed, 1)),
            dct_op(spec.n),
            perm_op(spec.n, rng.derive_seed(spec.seed, 2)),
        ]
    )


def power_iteration(op, iters=30, seed=0):
    """Largest eigenvalue estimate of A^T A by power iteration.

    The probe starts from seeded uniforms in [-1, 1); each sweep applies
    A then A^T and takes the Rayleigh quotient.  Returns 0.0 if the probe
    lands in the null space.
    """
    if op.rows < 1 or op.cols < 1:
        raise ShapeError("power iteration needs a nonempty operator")
    if iters < 1:
        raise DomainError("power iteration needs at least one sweep")
    v = 2.0 * rng.uniforms(seed, op.cols) - 1.0
    nv = np.linalg.norm(v)
    if nv == 0.0:
        v[0] = 1.0
        nv = 1.0
    v /= nv
    est = 0.0
    for _ in range(iters):
        w = op.adjoint(op.forward(v))
        est = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
    return est


def materialize(op, cap=MATERIALIZE_CAP):
    """Dense matrix of a small operator, strictly a test oracle.

    Refuses to densify anything wider than `cap` columns so it can never be
    used as a fallback path on real problem sizes.
    """
    if op.cols > cap:
        raise DomainError(
            f"refusing to materialize an operator with {op.cols} columns "
            f"(cap {cap}); this helper is a test oracle only"
        )
    dense = np.empty((op.rows, op.cols), dtype=np.float64)
    e = np.zeros(op.cols, dtype=np.float64)
    for j in range(op.cols):
        e[j] = 1.0
        dense[:, j] = op.forward(e)
        e[j] = 0.0
    return dense
