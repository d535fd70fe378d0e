"""Separable 2-D orthonormal Daubechies-4 wavelet transform and its quadtree.

The filter pair is the classic 4-tap Daubechies family member with two
vanishing moments,

    h = [(1+s)/(4 r), (3+s)/(4 r), (3-s)/(4 r), (1-s)/(4 r)],  s = sqrt(3), r = sqrt(2)
    g[t] = (-1)**t * h[3-t]

applied with periodic boundary handling, so the transform matrix is exactly
orthogonal and analysis/synthesis are exact transposes of each other.  An
S-level decomposition of an N x N image (N a power of two) is stored in the
usual isotropic layout: the (N/2^S)^2 approximation block LL_S in the top
left corner, and at each level s the three detail bands

    LH_s : rows low-pass,  columns high-pass  (top right quadrant)
    HL_s : rows high-pass, columns low-pass   (bottom left quadrant)
    HH_s : both high-pass                     (bottom right quadrant)

each of size (N/2^s)^2.  Coefficient planes are flattened column-major, so
plane position (row, col) is vector index row + col * N, consistent with
treating the 2-D transform as a Kronecker product acting on vec(image).

Detail coefficients form a forest of quadtrees: the coefficient at band
position (r, c) of level s >= 2 has the four children (2r, 2c), (2r, 2c+1),
(2r+1, 2c), (2r+1, 2c+1) at the same band of level s-1; level-1 coefficients
are leaves and the approximation block has no tree edges.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .linop import LinearOperator

_S3 = np.sqrt(3.0)
_H = np.array(
    [(1.0 + _S3), (3.0 + _S3), (3.0 - _S3), (1.0 - _S3)]
) / (4.0 * np.sqrt(2.0))
_G = np.array([_H[3], -_H[2], _H[1], -_H[0]])

BANDS = ("LH", "HL", "HH")


def _analyze_rows(block):
    """One filter-and-downsample step along axis 0: block -> (approx, detail).

    Row k of the output taps input rows 2k, 2k+1, 2k+2, 2k+3 (periodic),
    i.e. even phase E = block[0::2], odd phase O = block[1::2]:

        a[k] = h0 E[k] + h1 O[k] + h2 E[k+1] + h3 O[k+1]
    """
    even = block[0::2]
    odd = block[1::2]
    even_n = np.roll(even, -1, axis=0)
    odd_n = np.roll(odd, -1, axis=0)
    approx = _H[0] * even + _H[1] * odd + _H[2] * even_n + _H[3] * odd_n
    detail = _G[0] * even + _G[1] * odd + _G[2] * even_n + _G[3] * odd_n
    return approx, detail


def _synthesize_rows(approx, detail):
    """Exact transpose of _analyze_rows: (approx, detail) -> block."""
    approx_p = np.roll(approx, 1, axis=0)
    detail_p = np.roll(detail, 1, axis=0)
    even = _H[0] * approx + _G[0] * detail + _H[2] * approx_p + _G[2] * detail_p
    odd = _H[1] * approx + _G[1] * detail + _H[3] * approx_p + _G[3] * detail_p
    out = np.empty((2 * approx.shape[0],) + approx.shape[1:], dtype=np.float64)
    out[0::2] = even
    out[1::2] = odd
    return out


def _step2d(block):
    """One 2-D analysis step: N x N block -> same-shape [LL LH; HL HH] plane."""
    a, d = _analyze_rows(block)
    half = np.concatenate([a, d], axis=0)
    a, d = _analyze_rows(half.T)
    return np.concatenate([a, d], axis=0).T


def _unstep2d(plane):
    """Inverse (= transpose) of _step2d."""
    half = plane.shape[1] // 2
    cols = _synthesize_rows(plane.T[:half], plane.T[half:]).T
    half = cols.shape[0] // 2
    return _synthesize_rows(cols[:half], cols[half:])


def _check_levels(size, levels):
    if size < 2 or size & (size - 1):
        raise ShapeError(f"image side must be a power of two >= 2, got {size}")
    max_levels = size.bit_length() - 1
    if not 1 <= levels <= max_levels:
        raise DomainError(
            f"levels must lie in 1..{max_levels} for side {size}, got {levels}"
        )


def default_levels(size):
    """Default decomposition depth: log2(N) - 4, at least 3, at most log2(N)."""
    _check_levels(size, 1)
    max_levels = size.bit_length() - 1
    return min(max_levels, max(3, max_levels - 4))


@dataclass(frozen=True)
class WaveletLayout:
    """Geometry of an S-level decomposition of an N x N plane."""

    size: int
    levels: int

    def __post_init__(self):
        _check_levels(self.size, self.levels)

    @property
    def n(self):
        return self.size * self.size

    def band_side(self, level):
        """Side length of each band at `level` (the LL_S block uses level S)."""
        if not 1 <= level <= self.levels:
            raise DomainError(f"level must lie in 1..{self.levels}")
        return self.size >> level

    def band_origin(self, level, band):
        """Plane (row, col) of a band's top left corner."""
        side = self.band_side(level)
        if band == "LH":
            return (0, side)
        if band == "HL":
            return (side, 0)
        if band == "HH":
            return (side, side)
        raise DomainError(f"band must be one of {BANDS}, got {band!r}")

    def _block_indices(self, row0, col0, side):
        rows = np.arange(row0, row0 + side, dtype=np.int64)
        cols = np.arange(col0, col0 + side, dtype=np.int64)
        return (rows[:, None] + cols[None, :] * self.size).ravel(order="F")

    def ll_indices(self):
        """Vector indices of the approximation block, ascending."""
        return self._block_indices(0, 0, self.size >> self.levels)

    def band_indices(self, level, band):
        """Vector indices of one detail band, ascending."""
        row0, col0 = self.band_origin(level, band)
        return self._block_indices(row0, col0, self.band_side(level))

    def detail_indices(self, level):
        """Vector indices of LH, HL and HH at `level`, merged ascending."""
        idx = np.concatenate([self.band_indices(level, b) for b in BANDS])
        idx.sort()
        return idx

    def locate(self, index):
        """Map a vector index to (level, band, row-in-band, col-in-band).

        Approximation coefficients come back as (levels, "LL", r, c).
        """
        if not 0 <= index < self.n:
            raise DomainError(f"index must lie in 0..{self.n - 1}")
        row = int(index) % self.size
        col = int(index) // self.size
        hi = max(row, col)
        if hi < self.size >> self.levels:
            return (self.levels, "LL", row, col)
        # The band side is the highest power of two not exceeding max(row, col).
        side = 1 << (hi.bit_length() - 1)
        level = (self.size.bit_length() - 1) - (hi.bit_length() - 1)
        if row < side:
            return (level, "LH", row, col - side)
        if col < side:
            return (level, "HL", row - side, col)
        return (level, "HH", row - side, col - side)

    def children(self, index):
        """The four child indices of a detail coefficient, or empty.

        Children live in the same band one level finer; level-1 coefficients
        and the approximation block have none.
        """
        level, band, r, c = self.locate(index)
        if band == "LL" or level < 2:
            return np.empty(0, dtype=np.int64)
        row0, col0 = self.band_origin(level - 1, band)
        kids = [
            (row0 + 2 * r, col0 + 2 * c),
            (row0 + 2 * r, col0 + 2 * c + 1),
            (row0 + 2 * r + 1, col0 + 2 * c),
            (row0 + 2 * r + 1, col0 + 2 * c + 1),
        ]
        return np.array([rr + cc * self.size for rr, cc in kids], dtype=np.int64)

    def parent(self, index):
        """The parent index of a detail coefficient, or -1 at a tree root."""
        level, band, r, c = self.locate(index)
        if band == "LL" or level >= self.levels:
            return -1
        row0, col0 = self.band_origin(level + 1, band)
        return int((row0 + r // 2) + (col0 + c // 2) * self.size)

    def vec(self, plane):
        """Flatten a coefficient plane column-major."""
        plane = np.asarray(plane, dtype=np.float64)
        if plane.shape != (self.size, self.size):
            raise ShapeError(f"plane must be {self.size} x {self.size}")
        return plane.ravel(order="F")

    def unvec(self, values):
        """Reshape a coefficient vector into a fresh plane (never a view,
        so in-place work on the plane cannot touch the vector)."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.n,):
            raise ShapeError(f"coefficient vector must have length {self.n}")
        return values.reshape((self.size, self.size), order="F").copy()


@dataclass
class CoefficientVector:
    """A flattened coefficient plane tied to its layout."""

    values: np.ndarray
    layout: WaveletLayout

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.layout.n,):
            raise ShapeError("coefficient vector length does not match layout")

    def plane(self):
        return self.layout.unvec(self.values)


def dwt2(image, levels):
    """S-level analysis of a square image; returns a CoefficientVector."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or image.shape[0] != image.shape[1]:
        raise ShapeError(f"image must be square, got shape {image.shape}")
    size = image.shape[0]
    layout = WaveletLayout(size, levels)
    plane = image.copy()
    for s in range(levels):
        side = size >> s
        plane[:side, :side] = _step2d(plane[:side, :side])
    return CoefficientVector(layout.vec(plane), layout)


def idwt2(coeffs):
    """Exact inverse of dwt2."""
    layout = coeffs.layout
    plane = coeffs.plane()
    for s in reversed(range(layout.levels)):
        side = layout.size >> s
        plane[:side, :side] = _unstep2d(plane[:side, :side])
    return plane


def wavelet_synthesis_op(layout):
    """Synthesis as an operator on coefficient vectors: forward maps
    coefficients to the vectorized image, adjoint is the analysis transform.

    Orthonormality makes the adjoint also the inverse.  Working state is two
    planes (2n scalars).
    """

    def forward(x):
        return idwt2(CoefficientVector(x, layout)).ravel(order="F")

    def adjoint(y):
        return dwt2(y.reshape((layout.size, layout.size), order="F"),
                    layout.levels).values

    n = layout.n
    return LinearOperator(n, n, forward, adjoint, storage_scalars=2 * n)
