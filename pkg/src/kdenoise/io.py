"""Grid file formats.

KDN1 (lossless), little-endian:

    offset  size  field
    0       4     magic b"KDN1"
    4       4     uint32 d
    8       8     uint64 n
    16      4     encoding tag b"F64L" (IEEE-754 binary64, little-endian)
    20      8     uint64 payload length (must equal n**d)
    28      8*L   values, row-major

PGM support is limited to binary P5 with maxval <= 255 and is lossy:
export writes ``round_half_even(255 * v)``.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grid import DomainError, check_grid

MAGIC = b"KDN1"
ENCODING = b"F64L"
_HEADER = struct.Struct("<4sIQ4sQ")


class FormatError(DomainError):
    """Malformed or unsupported file contents."""


def write_kdn(path, grid) -> None:
    arr = check_grid(grid)
    header = _HEADER.pack(MAGIC, arr.ndim, arr.shape[0], ENCODING, arr.size)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_kdn(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated KDN1 header")
    magic, d, n, enc, length = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if enc != ENCODING:
        raise FormatError(f"{path}: unsupported encoding {enc!r}")
    if d < 1 or length != n ** d:
        raise FormatError(f"{path}: payload length {length} != n^d = {n}^{d}")
    payload = data[_HEADER.size:]
    if len(payload) != 8 * length:
        raise FormatError(f"{path}: expected {8 * length} payload bytes, found {len(payload)}")
    return np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape((n,) * d)


def quantize8(values) -> np.ndarray:
    """8-bit levels with round-half-even, e.g. 0.5 -> 128 (from 127.5)."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.rint(255.0 * v).astype(np.uint8)


def write_pgm(path, grid) -> None:
    arr = check_grid(grid)
    if arr.ndim > 2:
        raise DomainError("PGM export supports d <= 2")
    img = np.atleast_2d(quantize8(arr))
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def _pgm_tokens(data: bytes, count: int):
    """First ``count`` header tokens and the offset of the raster."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates maxval from the raster
    return tokens, pos + 1


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic == b"P2":
        raise FormatError(f"{path}: ASCII PGM (P2) is not supported; convert to binary P5")
    if magic != b"P5":
        raise FormatError(f"{path}: not a binary PGM (P5) file")
    tokens, offset = _pgm_tokens(data, 4)
    try:
        w, h, maxval = (int(t) for t in tokens[1:4])
    except ValueError:
        raise FormatError(f"{path}: malformed PGM header") from None
    if not 0 < maxval < 256:
        raise FormatError(f"{path}: maxval {maxval} unsupported (only 8-bit PGM)")
    raster = data[offset:offset + w * h]
    if len(raster) != w * h:
        raise FormatError(f"{path}: raster has {len(raster)} bytes, expected {w * h}")
    img = np.frombuffer(raster, dtype=np.uint8).reshape(h, w).astype(np.float64) / maxval
    if h == 1:
        return img[0]
    if h != w:
        raise FormatError(f"{path}: image is {w}x{h}; only square grids are supported")
    return img


def sidecar_paths(path) -> tuple[Path, Path]:
    """Mask and metadata files written next to a generated grid."""
    p = Path(path)
    stem = p.with_suffix("")
    return Path(f"{stem}.mask.kdn"), Path(f"{stem}.meta.txt")


def write_metadata(path, meta: dict) -> None:
    lines = [f"{k}={v}" for k, v in meta.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_metadata(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out
