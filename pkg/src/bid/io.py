"""On-disk formats.

BIDB (packed bits) and BIDF (float32 matrix) share a 24-byte little-endian
header: 4-byte magic, ``u32`` version, ``u64`` rows, ``u64`` columns.
"""
from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .bitdata import BitDataset, DistanceHistogram
from .errors import FormatError

VERSION = 1
_HEADER = struct.Struct("<4sIQQ")
BIDB_MAGIC = b"BIDB"
BIDF_MAGIC = b"BIDF"


def atomic_write_bytes(path, data: bytes) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode())


def encode_bidb(ds: BitDataset) -> bytes:
    return _HEADER.pack(BIDB_MAGIC, VERSION, ds.n_samples, ds.n_bits) + ds.rows.tobytes()


def write_bidb(path, ds: BitDataset) -> None:
    atomic_write_bytes(path, encode_bidb(ds))


def _read_header(buf: bytes, magic: bytes, path) -> tuple[int, int]:
    if len(buf) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(buf)} bytes)")
    got, version, n_rows, n_cols = _HEADER.unpack_from(buf)
    if got != magic:
        raise FormatError(f"{path}: bad magic {got!r}, expected {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if n_rows < 1 or n_cols < 1:
        raise FormatError(f"{path}: empty matrix {n_rows}x{n_cols}")
    return n_rows, n_cols


def decode_bidb(buf: bytes, path="<bytes>") -> BitDataset:
    n_samples, n_bits = _read_header(buf, BIDB_MAGIC, path)
    n_bytes = (n_bits + 7) // 8
    expected = _HEADER.size + n_samples * n_bytes
    if len(buf) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(buf)}")
    rows = np.frombuffer(buf, dtype=np.uint8, offset=_HEADER.size).reshape(n_samples, n_bytes)
    try:
        return BitDataset(n_samples=n_samples, n_bits=n_bits, rows=rows.copy())
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def read_bidb(path) -> BitDataset:
    return decode_bidb(Path(path).read_bytes(), path)


def write_bidf(path, m) -> None:
    m = np.ascontiguousarray(m, dtype="<f4")
    if m.ndim != 2:
        raise ValueError("BIDF stores 2-D matrices")
    atomic_write_bytes(path, _HEADER.pack(BIDF_MAGIC, VERSION, *m.shape) + m.tobytes())


def read_bidf(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    n, f = _read_header(buf, BIDF_MAGIC, path)
    expected = _HEADER.size + 4 * n * f
    if len(buf) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(buf)}")
    return np.frombuffer(buf, dtype="<f4", offset=_HEADER.size).reshape(n, f).astype(np.float64)


def read_real_matrix(path) -> np.ndarray:
    """Read a BIDF file, or a CSV with one sample per line."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == BIDF_MAGIC:
        return read_bidf(path)
    try:
        m = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"{path}: not a BIDF file and not numeric CSV ({exc})") from exc
    if m.size == 0:
        raise FormatError(f"{path}: empty CSV")
    return m


def histogram_to_json(hist: DistanceHistogram) -> str:
    return json.dumps(hist.to_dict())


def write_histogram(path, hist: DistanceHistogram) -> None:
    atomic_write_text(path, histogram_to_json(hist) + "\n")


def read_histogram(path) -> DistanceHistogram:
    try:
        d = json.loads(Path(path).read_text())
        return DistanceHistogram.from_dict(d)
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"{path}: not a histogram JSON file ({exc})") from exc


def load_histogram(path) -> DistanceHistogram:
    """Histogram from either a histogram JSON file or a BIDB dataset."""
    from .bitdata import distance_histogram

    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == BIDB_MAGIC:
        return distance_histogram(read_bidb(path))
    return read_histogram(path)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
