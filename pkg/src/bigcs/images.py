"""Grayscale image I/O: binary PGM (P5) and a raw float64 container.

PGM covers 8-bit (maxval <= 255, one byte per sample) and 16-bit images
(maxval <= 65535, two bytes per sample, big-endian, per the netpbm
convention).  The dynamic range reported for a PGM is its maxval.

The float container is for lossless round trips of real-valued arrays:

    offset  size      field
    0       8         magic "BIGCSF64"
    8       4         rows, u32 little-endian
    12      4         cols, u32 little-endian
    16      8         dynamic range L, f64 little-endian
    24      8*r*c     samples, f64 little-endian, row-major

Files are sniffed by magic, never by extension; writing picks the format
from the extension (.pgm or .f64).
"""

import struct

import numpy as np

from .errors import DomainError, FormatError, ShapeError

F64_MAGIC = b"BIGCSF64"


def _parse_pgm_header(raw):
    """Return (width, height, maxval, data offset) of a P5 header."""
    pos = 2  # past "P5"
    fields = []
    while len(fields) < 3:
        # Skip whitespace and comment lines.
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        token = raw[start:pos]
        if not token.isdigit():
            raise FormatError("malformed PGM header")
        fields.append(int(token))
    if pos >= len(raw) or not raw[pos : pos + 1].isspace():
        raise FormatError("malformed PGM header")
    pos += 1  # single whitespace byte before the raster
    width, height, maxval = fields
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise FormatError("PGM header out of range")
    return width, height, maxval, pos


def read_image(path):
    """Load a grayscale image; returns (float64 array, dynamic range)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == b"P5":
        width, height, maxval, offset = _parse_pgm_header(raw)
        dtype = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
        count = width * height
        if len(raw) < offset + count * dtype.itemsize:
            raise FormatError("PGM raster is truncated")
        data = np.frombuffer(raw, dtype=dtype, count=count, offset=offset)
        img = data.reshape((height, width)).astype(np.float64)
        return img, float(maxval)
    if raw[:8] == F64_MAGIC:
        if len(raw) < 24:
            raise FormatError("float image header is truncated")
        rows, cols = struct.unpack("<II", raw[8:16])
        (rng,) = struct.unpack("<d", raw[16:24])
        if rows < 1 or cols < 1 or rng <= 0:
            raise FormatError("float image header out of range")
        count = rows * cols
        if len(raw) != 24 + 8 * count:
            raise FormatError("float image raster length mismatch")
        data = np.frombuffer(raw, dtype="<f8", count=count, offset=24)
        return data.reshape((rows, cols)).astype(np.float64), float(rng)
    raise FormatError(f"{path}: not a PGM or float64 image")


def write_image(path, img, dynamic_range):
    """Write by extension: .pgm quantizes, .f64 is lossless.

    PGM output clamps to [0, L], scales to the integer maxval (255 for
    L <= 255, else 65535; the scale is the identity when L equals the
    maxval), and rounds half to even.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ShapeError("images must be 2-D")
    if dynamic_range <= 0:
        raise DomainError("dynamic range must be positive")
    name = str(path)
    if name.endswith(".pgm"):
        maxval = 255 if dynamic_range <= 255 else 65535
        scaled = np.clip(img, 0.0, dynamic_range) * (maxval / dynamic_range)
        quant = np.rint(scaled)
        data = quant.astype(np.uint8) if maxval == 255 else quant.astype(">u2")
        with open(name, "wb") as fh:
            fh.write(b"P5\n%d %d\n%d\n" % (img.shape[1], img.shape[0], maxval))
            fh.write(data.tobytes())
    elif name.endswith(".f64"):
        with open(name, "wb") as fh:
            fh.write(F64_MAGIC)
            fh.write(struct.pack("<IId", img.shape[0], img.shape[1],
                                 dynamic_range))
            fh.write(np.ascontiguousarray(img, dtype="<f8").tobytes())
    else:
        raise DomainError(f"{name}: unknown output extension (.pgm or .f64)")


def _floor_pow2(v):
    return 1 << (v.bit_length() - 1)


def _ceil_pow2(v):
    return 1 << (v - 1).bit_length()


def to_square_pow2(img, pad=False, crop=False):
    """Make an image square with a power-of-two side.

    Exactly one of pad/crop may be set: pad extends bottom/right by edge
    replication to the next power of two of the larger side; crop keeps the
    top-left square of the largest power of two fitting the smaller side.
    Without either flag, input that is not already square power-of-two is a
    DomainError.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ShapeError("images must be 2-D")
    rows, cols = img.shape
    if pad and crop:
        raise DomainError("pad and crop are mutually exclusive")
    square = rows == cols and rows >= 2 and not rows & (rows - 1)
    if square:
        return img.copy()
    if pad:
        side = _ceil_pow2(max(rows, cols, 2))
        return np.pad(img, ((0, side - rows), (0, side - cols)), mode="edge")
    if crop:
        side = _floor_pow2(min(rows, cols))
        if side < 2:
            raise DomainError("image too small to crop to a power of two")
        return img[:side, :side].copy()
    raise DomainError(
        f"image is {rows} x {cols}; pass pad or crop to reach a square "
        "power-of-two side"
    )
