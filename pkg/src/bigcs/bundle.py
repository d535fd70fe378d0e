"""The measurement bundle: a self-describing container for one sensing run.

A bundle holds everything needed to reproduce the measurement operator and
drive recovery: image side N, measurement count m, the 64-bit seed, the
wavelet depth, the penalty and pruning rules, the weighting choice, the
pixel mean of the sensed image, and the measurement vector itself.

The mean travels with the bundle because the sensing operator annihilates
the constant image whenever the row subset misses the transform's first
row; recovery re-centers the measurements against the stored mean and adds
it back, so the reconstruction never loses the image's flat component.

Binary layout, all little-endian, fixed 75-byte header:

    offset  size  field
    0       8     magic "BIGCSBND"
    8       2     format version (currently 1), u16
    10      4     N, image side in pixels, u32
    14      8     m, measurement count, u64
    22      8     seed, u64
    30      2     S, wavelet decomposition depth, u16
    32      1     penalty rule: 0 = auto, 1 = fixed, u8
    33      8     penalty value: the factor in lam = factor * ||A^T y||_inf
                  under auto, the absolute lam under fixed, f64
    41      1     weighting: 0 = tree-weighted pursuit, 1 = none, u8
    42      8     root selection percentage p, f64
    50      1     pruning rule: 0 = relative, 1 = absolute, u8
    51      8     pruning value: scale of max|x| under relative, absolute
                  threshold otherwise, f64
    59      8     dynamic range L of the source image, f64
    67      8     pixel mean of the sensed image, f64
    75      8m    measurements, f64 array
    75+8m   4     CRC-32 of every preceding byte, u32

Readers reject wrong magic, unknown versions, truncated payloads, bad
checksums, and headers whose fields are mutually inconsistent.
"""

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FormatError

MAGIC = b"BIGCSBND"
VERSION = 1
_HEADER = struct.Struct("<8sHIQQHBdBdBddd")

LAMBDA_MODES = ("auto", "fixed")
WEIGHTINGS = ("tssp", "none")
EPSILON_MODES = ("relative", "absolute")


@dataclass
class MeasurementBundle:
    """One sensing run plus the recovery parameters chosen at sense time."""

    size: int
    seed: int
    levels: int
    y: np.ndarray
    lambda_mode: str = "auto"
    lambda_value: float = 0.01
    weighting: str = "tssp"
    p_percent: float = 10.0
    epsilon_mode: str = "relative"
    epsilon_value: float = 1e-3
    dynamic_range: float = 255.0
    mean: float = 0.0

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.float64)
        _validate(self, DomainError)

    @property
    def m(self):
        return self.y.size

    @property
    def n(self):
        return self.size * self.size


def _validate(b, err):
    if b.size < 2 or b.size & (b.size - 1):
        raise err(f"image side must be a power of two >= 2, got {b.size}")
    if b.y.ndim != 1 or not 0 < b.y.size <= b.size * b.size:
        raise err("measurement count must satisfy 0 < m <= N^2")
    if not 0 <= b.seed < 2**64:
        raise err("seed must fit in 64 bits")
    max_levels = b.size.bit_length() - 1
    if not 1 <= b.levels <= max_levels:
        raise err(f"levels must lie in 1..{max_levels}")
    if b.lambda_mode not in LAMBDA_MODES:
        raise err(f"unknown penalty rule {b.lambda_mode!r}")
    if not b.lambda_value > 0:
        raise err("penalty value must be positive")
    if b.weighting not in WEIGHTINGS:
        raise err(f"unknown weighting {b.weighting!r}")
    if not 0 < b.p_percent <= 100:
        raise err("p_percent must lie in (0, 100]")
    if b.epsilon_mode not in EPSILON_MODES:
        raise err(f"unknown pruning rule {b.epsilon_mode!r}")
    if b.epsilon_value < 0:
        raise err("pruning value must be nonnegative")
    if not b.dynamic_range > 0:
        raise err("dynamic range must be positive")
    if not np.isfinite(b.mean):
        raise err("image mean must be finite")


def write_bundle(bundle, path):
    """Serialize to `path` in the documented layout."""
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        bundle.size,
        bundle.m,
        bundle.seed,
        bundle.levels,
        LAMBDA_MODES.index(bundle.lambda_mode),
        bundle.lambda_value,
        WEIGHTINGS.index(bundle.weighting),
        bundle.p_percent,
        EPSILON_MODES.index(bundle.epsilon_mode),
        bundle.epsilon_value,
        bundle.dynamic_range,
        bundle.mean,
    )
    payload = np.ascontiguousarray(bundle.y, dtype="<f8").tobytes()
    body = header + payload
    crc = zlib.crc32(body) & 0xFFFFFFFF
    with open(path, "wb") as fh:
        fh.write(body)
        fh.write(struct.pack("<I", crc))


def read_bundle(path):
    """Parse and verify a bundle file; FormatError on anything suspect."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size + 4:
        raise FormatError("bundle file is truncated")
    if raw[:8] != MAGIC:
        raise FormatError("not a measurement bundle (bad magic)")
    (magic, version, size, m, seed, levels, lam_mode, lam_value, weighting,
     p_percent, eps_mode, eps_value, dynamic_range, mean) = _HEADER.unpack(
        raw[: _HEADER.size]
    )
    if version != VERSION:
        raise FormatError(f"unsupported bundle version {version}")
    expected = _HEADER.size + 8 * m + 4
    if len(raw) != expected:
        raise FormatError(
            f"bundle length {len(raw)} does not match header (expected "
            f"{expected} bytes for m = {m})"
        )
    stored = struct.unpack("<I", raw[-4:])[0]
    actual = zlib.crc32(raw[:-4]) & 0xFFFFFFFF
    if stored != actual:
        raise FormatError("bundle checksum mismatch")
    if lam_mode >= len(LAMBDA_MODES):
        raise FormatError(f"unknown penalty rule code {lam_mode}")
    if weighting >= len(WEIGHTINGS):
        raise FormatError(f"unknown weighting code {weighting}")
    if eps_mode >= len(EPSILON_MODES):
        raise FormatError(f"unknown pruning rule code {eps_mode}")
    y = np.frombuffer(raw, dtype="<f8", count=m, offset=_HEADER.size).astype(
        np.float64
    )
    try:
        return MeasurementBundle(
            size=size,
            seed=seed,
            levels=levels,
            y=y,
            lambda_mode=LAMBDA_MODES[lam_mode],
            lambda_value=lam_value,
            weighting=WEIGHTINGS[weighting],
            p_percent=p_percent,
            epsilon_mode=EPSILON_MODES[eps_mode],
            epsilon_value=eps_value,
            dynamic_range=dynamic_range,
            mean=mean,
        )
    except DomainError as exc:
        raise FormatError(f"inconsistent bundle header: {exc}") from exc
