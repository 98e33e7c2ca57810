"""Bit-packed datasets, binarization helpers and Hamming-distance histograms.

Rows are stored LSB-first: feature ``8*b + k`` lives in bit ``k`` of byte
``b``. Padding bits past ``n_bits`` are always zero, so XOR + popcount over
whole bytes gives the exact Hamming distance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from llvmlite import ir
from numba import njit, prange, types
from numba.extending import intrinsic

from .errors import DegenerateError

# Fixed number of partial histograms; independent of the thread count so the
# reduction order never depends on scheduling.
_N_PARTIALS = 64


@dataclass(frozen=True)
class BitDataset:
    """``n_samples`` x ``n_bits`` binary matrix stored as packed bytes."""

    n_samples: int
    n_bits: int
    rows: np.ndarray

    def __post_init__(self):
        if self.n_samples < 1 or self.n_bits < 1:
            raise ValueError("BitDataset needs n_samples >= 1 and n_bits >= 1")
        rows = np.ascontiguousarray(self.rows, dtype=np.uint8)
        if rows.shape != (self.n_samples, _n_bytes(self.n_bits)):
            raise ValueError(
                f"rows has shape {rows.shape}, expected "
                f"{(self.n_samples, _n_bytes(self.n_bits))}"
            )
        pad = 8 * rows.shape[1] - self.n_bits
        if pad and np.any(rows[:, -1] >> (8 - pad)):
            raise ValueError("padding bits beyond n_bits must be zero")
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)

    @property
    def n_bytes(self) -> int:
        return self.rows.shape[1]

    def unpack(self) -> np.ndarray:
        """Return the dense ``(n_samples, n_bits)`` uint8 matrix of 0/1."""
        return np.unpackbits(self.rows, axis=1, count=self.n_bits, bitorder="little")

    def row(self, i: int) -> np.ndarray:
        return self.rows[i]

    def __eq__(self, other):
        if not isinstance(other, BitDataset):
            return NotImplemented
        return (
            self.n_samples == other.n_samples
            and self.n_bits == other.n_bits
            and np.array_equal(self.rows, other.rows)
        )

    __hash__ = None


@dataclass(frozen=True)
class DistanceHistogram:
    """Counts of unordered sample pairs at each Hamming distance ``0..n_bits``."""

    n_bits: int
    n_samples: int
    counts: np.ndarray

    def __post_init__(self):
        counts = np.ascontiguousarray(self.counts, dtype=np.int64)
        if counts.shape != (self.n_bits + 1,):
            raise ValueError(
                f"counts must have length n_bits + 1 = {self.n_bits + 1}, got {counts.shape}"
            )
        if np.any(counts < 0):
            raise ValueError("histogram counts must be non-negative")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def n_pairs(self) -> int:
        return int(self.counts.sum())

    @property
    def max_distance(self) -> int:
        """Largest distance with a nonzero count."""
        nz = np.flatnonzero(self.counts)
        if nz.size == 0:
            raise ValueError("empty histogram")
        return int(nz[-1])

    def probabilities(self, r_star: int | None = None) -> np.ndarray:
        """Empirical distribution renormalized over ``r <= r_star``."""
        c = self.counts if r_star is None else self.counts[: r_star + 1]
        total = c.sum()
        if total == 0:
            raise DegenerateError("no pairs in the requested distance range")
        return c / total

    def mean_distance(self) -> float:
        r = np.arange(self.n_bits + 1)
        return float((r * self.counts).sum() / self.counts.sum())

    def to_dict(self) -> dict:
        return {
            "n_bits": int(self.n_bits),
            "n_samples": int(self.n_samples),
            "counts": [int(c) for c in self.counts],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DistanceHistogram":
        return cls(n_bits=int(d["n_bits"]), n_samples=int(d["n_samples"]),
                   counts=np.asarray(d["counts"], dtype=np.int64))

    def __eq__(self, other):
        if not isinstance(other, DistanceHistogram):
            return NotImplemented
        return (
            self.n_bits == other.n_bits
            and self.n_samples == other.n_samples
            and np.array_equal(self.counts, other.counts)
        )

    __hash__ = None


def _n_bytes(n_bits: int) -> int:
    return (n_bits + 7) // 8


def pack_bits(bits) -> BitDataset:
    """Pack per-sample 0/1 sequences into a :class:`BitDataset`."""
    if isinstance(bits, np.ndarray):
        arr = bits
    else:
        rows = list(bits)
        if not rows:
            raise ValueError("cannot pack an empty dataset")
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise ValueError(f"ragged rows: widths {sorted(widths)}")
        arr = np.asarray(rows)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"expected a non-empty 2-D bit matrix, got shape {arr.shape}")
    if arr.dtype != np.uint8 or arr.max(initial=0) > 1:
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("bit values must be 0 or 1")
        arr = arr.astype(np.uint8)
    packed = np.packbits(arr, axis=1, bitorder="little")
    return BitDataset(n_samples=arr.shape[0], n_bits=arr.shape[1], rows=packed)


def unpack_bits(ds: BitDataset) -> np.ndarray:
    return ds.unpack()


@intrinsic
def _popcount64(typingctx, x):
    sig = types.uint64(types.uint64)

    def codegen(context, builder, signature, args):
        fn = builder.module.declare_intrinsic("llvm.ctpop", [ir.IntType(64)])
        return builder.call(fn, args)

    return sig, codegen


@njit(cache=True)
def _popcount_words(a, b):
    acc = 0
    for k in range(a.shape[0]):
        acc += _popcount64(a[k] ^ b[k])
    return acc


@njit(parallel=True, cache=True)
def _pair_histogram(words, n_bits, n_partials):
    n = words.shape[0]
    partial = np.zeros((n_partials, n_bits + 1), dtype=np.int64)
    for p in prange(n_partials):
        # interleaved rows balance the triangular workload
        for i in range(p, n, n_partials):
            wi = words[i]
            for j in range(i + 1, n):
                partial[p, _popcount_words(wi, words[j])] += 1
    return partial.sum(axis=0)


def _as_words(rows: np.ndarray) -> np.ndarray:
    """View packed rows as little-endian uint64 words, zero-padding each row."""
    n, nb = rows.shape
    n_words = (nb + 7) // 8
    buf = np.zeros((n, n_words * 8), dtype=np.uint8)
    buf[:, :nb] = rows
    return buf.view("<u8")


def hamming_distance(a, b) -> int:
    """Number of differing bits between two packed rows of equal width."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"row widths differ: {a.shape} vs {b.shape}")
    return int(np.unpackbits(a ^ b).sum())


def distance_histogram(ds: BitDataset) -> DistanceHistogram:
    """Histogram of Hamming distances over all ``i < j`` sample pairs."""
    if ds.n_samples < 2:
        raise ValueError("distance histogram needs at least 2 samples")
    words = _as_words(ds.rows)
    counts = _pair_histogram(words, ds.n_bits, _N_PARTIALS)
    return DistanceHistogram(n_bits=ds.n_bits, n_samples=ds.n_samples, counts=counts)


def _as_real_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2 or m.size == 0:
        raise ValueError(f"expected a non-empty 2-D real matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("real matrix contains NaN or Inf")
    return m


def binarize_sign(m) -> BitDataset:
    """Bit is 1 where the value is strictly positive (``sign(0) = 0``)."""
    m = _as_real_matrix(m)
    return pack_bits((m > 0).astype(np.uint8))


def layer_stats(m) -> tuple[float, float]:
    """Mean and (population) standard deviation over the whole matrix."""
    m = _as_real_matrix(m)
    return float(m.mean()), float(m.std())


def quantize_2bit(m, mu: float = 0.0, sigma: float | None = None) -> BitDataset:
    """Two bits per feature from the thresholds ``mu - sigma, mu, mu + sigma``.

    Codes, high bit first: ``00`` below ``mu - sigma``, ``01`` in
    ``[mu - sigma, mu)``, ``10`` in ``[mu, mu + sigma)``, ``11`` at or above
    ``mu + sigma``. Boundary points go to the upper code. ``sigma`` defaults
    to the standard deviation of the whole matrix; ``mu = 0`` compares raw
    values against ``-sigma, 0, +sigma``.
    """
    from .errors import DegenerateError

    m = _as_real_matrix(m)
    if sigma is None:
        sigma = float(m.std())
    if not sigma > 0:
        raise DegenerateError(f"sigma must be > 0, got {sigma}")
    level = (
        (m >= mu - sigma).astype(np.uint8)
        + (m >= mu).astype(np.uint8)
        + (m >= mu + sigma).astype(np.uint8)
    )
    bits = np.empty((m.shape[0], 2 * m.shape[1]), dtype=np.uint8)
    bits[:, 0::2] = level >> 1
    bits[:, 1::2] = level & 1
    return pack_bits(bits)


def decode_2bit(ds: BitDataset) -> np.ndarray:
    """Inverse of the 2-bit code: level 0..3 per feature."""
    bits = ds.unpack()
    return (bits[:, 0::2] << 1) | bits[:, 1::2]


def bits_per_state(q: int) -> int:
    if q < 2:
        raise ValueError(f"q must be >= 2, got {q}")
    return max(1, math.ceil(math.log2(q)))


def potts_encode(states, q: int) -> BitDataset:
    """Write each site's color in plain binary, most significant bit first."""
    width = bits_per_state(q)
    states = np.asarray(states)
    if states.ndim == 1:
        states = states[None, :]
    if states.ndim != 2 or states.size == 0:
        raise ValueError(f"expected a non-empty 2-D state matrix, got shape {states.shape}")
    if states.min() < 0 or states.max() >= q:
        raise ValueError(f"states must lie in [0, {q - 1}]")
    states = states.astype(np.int64)
    shifts = np.arange(width - 1, -1, -1)
    bits = (states[:, :, None] >> shifts) & 1
    return pack_bits(bits.reshape(states.shape[0], -1).astype(np.uint8))


def potts_decode(ds: BitDataset, q: int) -> np.ndarray:
    width = bits_per_state(q)
    if ds.n_bits % width:
        raise ValueError(f"n_bits={ds.n_bits} is not a multiple of {width}")
    bits = ds.unpack().reshape(ds.n_samples, -1, width).astype(np.int64)
    weights = 1 << np.arange(width - 1, -1, -1)
    return (bits * weights).sum(axis=2)


def concat_datasets(parts) -> BitDataset:
    """Concatenate datasets feature-wise, row by row."""
    parts = list(parts)
    if not parts:
        raise ValueError("nothing to concatenate")
    n = parts[0].n_samples
    if any(p.n_samples != n for p in parts):
        raise ValueError(
            f"n_samples differ across parts: {[p.n_samples for p in parts]}"
        )
    if len(parts) == 1:
        return parts[0]
    n_bits = sum(p.n_bits for p in parts)
    if all(p.n_bits % 8 == 0 for p in parts[:-1]):
        rows = np.concatenate([p.rows for p in parts], axis=1)
    else:
        rows = np.packbits(
            np.concatenate([p.unpack() for p in parts], axis=1), axis=1, bitorder="little"
        )
    return BitDataset(n_samples=n, n_bits=n_bits, rows=rows)


def spins_to_bits(spins) -> np.ndarray:
    """Map spins in {-1, +1} to bits via ``(s + 1) / 2``."""
    spins = np.asarray(spins)
    return ((spins + 1) // 2).astype(np.uint8)


__all__ = [
    "BitDataset",
    "DistanceHistogram",
    "binarize_sign",
    "bits_per_state",
    "concat_datasets",
    "decode_2bit",
    "distance_histogram",
    "hamming_distance",
    "layer_stats",
    "pack_bits",
    "potts_decode",
    "potts_encode",
    "quantize_2bit",
    "spins_to_bits",
    "unpack_bits",
]
